//! Where measurement outcomes come from: a seeded sampler or a forced script.

use alloc::{collections::BTreeMap, collections::VecDeque, string::String};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SimError};
use crate::state::ZERO_PROBABILITY;

/// Chooses the outcome of each measurement block.
pub trait OutcomeSource {
    /// Returns the index of the outcome to realize. `probabilities` are the
    /// Born probabilities of every outcome of the block named `block`.
    fn select(&mut self, block: &str, probabilities: &[f64]) -> Result<usize>;

    /// Whether a charge detector misreports its result this time. Only
    /// consulted by the parity and detector-pair blocks.
    fn misreport(&mut self, _block: &str) -> bool {
        false
    }
}

impl<S: OutcomeSource + ?Sized> OutcomeSource for &mut S {
    fn select(&mut self, block: &str, probabilities: &[f64]) -> Result<usize> {
        (**self).select(block, probabilities)
    }

    fn misreport(&mut self, block: &str) -> bool {
        (**self).misreport(block)
    }
}

/// Draws outcomes from the Born distribution with a caller-provided RNG.
#[derive(Debug, Clone)]
pub struct SampledOutcomes<R> {
    rng: R,
    misreport_probability: f64,
}

impl<R: Rng> SampledOutcomes<R> {
    pub fn new(rng: R) -> Self {
        SampledOutcomes {
            rng,
            misreport_probability: 0.0,
        }
    }

    /// Sets the Bernoulli probability that a charge detector reports the
    /// wrong result while the state still collapses on the true one.
    pub fn with_misreport(mut self, probability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(SimError::InvalidParameter(alloc::format!(
                "misreport probability {probability} outside [0, 1]"
            )));
        }
        self.misreport_probability = probability;
        Ok(self)
    }

    pub fn into_rng(self) -> R {
        self.rng
    }
}

impl SampledOutcomes<ChaCha8Rng> {
    pub fn seeded(seed: u64) -> Self {
        SampledOutcomes::new(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl<R: Rng> OutcomeSource for SampledOutcomes<R> {
    fn select(&mut self, block: &str, probabilities: &[f64]) -> Result<usize> {
        let total: f64 = probabilities
            .iter()
            .filter(|p| **p >= ZERO_PROBABILITY)
            .sum();
        if total <= 0.0 {
            return Err(SimError::ZeroProbabilityBranch {
                block: block.into(),
                outcome: 0,
                probability: 0.0,
            });
        }
        let draw = self.rng.random::<f64>() * total;
        let mut cumulative = 0.0;
        let mut last = 0;
        for (i, &p) in probabilities.iter().enumerate() {
            if p < ZERO_PROBABILITY {
                continue;
            }
            last = i;
            cumulative += p;
            if draw < cumulative {
                return Ok(i);
            }
        }
        Ok(last)
    }

    fn misreport(&mut self, _block: &str) -> bool {
        self.misreport_probability > 0.0 && self.rng.random::<f64>() < self.misreport_probability
    }
}

/// What a [`ForcedOutcomes`] script does when it has no entry for a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    Error,
    /// Take the lowest-index outcome with nonzero probability.
    FirstPossible,
}

/// Scripted outcomes: by block name first, then positionally.
#[derive(Debug, Clone)]
pub struct ForcedOutcomes {
    named: BTreeMap<String, usize>,
    sequence: VecDeque<usize>,
    fallback: Fallback,
}

impl ForcedOutcomes {
    pub fn sequence(outcomes: impl IntoIterator<Item = usize>) -> Self {
        ForcedOutcomes {
            named: BTreeMap::new(),
            sequence: outcomes.into_iter().collect(),
            fallback: Fallback::Error,
        }
    }

    pub fn named<'a>(outcomes: impl IntoIterator<Item = (&'a str, usize)>) -> Self {
        ForcedOutcomes {
            named: outcomes.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            sequence: VecDeque::new(),
            fallback: Fallback::Error,
        }
    }

    pub fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn force(mut self, block: &str, outcome: usize) -> Self {
        self.named.insert(block.into(), outcome);
        self
    }
}

impl OutcomeSource for ForcedOutcomes {
    fn select(&mut self, block: &str, probabilities: &[f64]) -> Result<usize> {
        if let Some(&outcome) = self.named.get(block) {
            return Ok(outcome);
        }
        if let Some(outcome) = self.sequence.pop_front() {
            return Ok(outcome);
        }
        match self.fallback {
            Fallback::Error => Err(SimError::ScriptExhausted {
                block: block.into(),
            }),
            Fallback::FirstPossible => probabilities
                .iter()
                .position(|p| *p >= ZERO_PROBABILITY)
                .ok_or_else(|| SimError::ZeroProbabilityBranch {
                    block: block.into(),
                    outcome: 0,
                    probability: 0.0,
                }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_skips_impossible_outcomes() {
        let mut s = SampledOutcomes::seeded(3);
        for _ in 0..200 {
            let k = s.select("b", &[0.0, 0.5, 0.0, 0.5]).unwrap();
            assert!(k == 1 || k == 3);
        }
    }

    #[test]
    fn sampler_is_reproducible() {
        let probs = [0.25, 0.25, 0.5];
        let mut a = SampledOutcomes::seeded(11);
        let mut b = SampledOutcomes::seeded(11);
        for _ in 0..50 {
            assert_eq!(
                a.select("x", &probs).unwrap(),
                b.select("x", &probs).unwrap()
            );
        }
    }

    #[test]
    fn forced_prefers_named_then_sequence() {
        let mut f = ForcedOutcomes::sequence([2, 0]).force("p", 1);
        assert_eq!(f.select("p", &[0.5, 0.5]).unwrap(), 1);
        assert_eq!(f.select("q", &[0.5, 0.5, 0.0]).unwrap(), 2);
        assert_eq!(f.select("q", &[0.5, 0.5]).unwrap(), 0);
        assert!(matches!(
            f.select("q", &[1.0]),
            Err(SimError::ScriptExhausted { .. })
        ));
        let mut g = ForcedOutcomes::sequence([]).with_fallback(Fallback::FirstPossible);
        assert_eq!(g.select("q", &[0.0, 1.0]).unwrap(), 1);
    }

    #[test]
    fn misreport_probability_is_validated() {
        assert!(SampledOutcomes::seeded(0).with_misreport(1.5).is_err());
        let mut always = SampledOutcomes::seeded(0).with_misreport(1.0).unwrap();
        assert!(always.misreport("P"));
        let mut never = SampledOutcomes::seeded(0);
        assert!(!never.misreport("P"));
    }
}
