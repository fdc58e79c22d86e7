//! Detector primitives: charge-parity check, the ψ±/leak detector pair,
//! the dressed-basis ancilla measurement and computational pair readout.
//!
//! Charge detection is an ideal projective measurement. A sampled
//! [`OutcomeSource`] may make the parity and detector-pair blocks misreport;
//! the state still collapses on the true outcome and the reported label is
//! what feed-forward sees.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use core::fmt;

use crate::error::Result;
use crate::logical::LogicalQubit;
use crate::outcome::OutcomeSource;
use crate::state::{Projector, PureState, QubitId, C64};

/// Result of a named measurement block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockResult<O> {
    /// Outcome as reported by the detector.
    pub outcome: O,
    /// Outcome the state actually collapsed on.
    pub actual: O,
    /// Born probability of `actual`.
    pub probability: f64,
    pub state: PureState,
}

/// Charge-parity outcome: `P = 1` iff the two spins are aligned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParityOutcome {
    Antiparallel = 0,
    Aligned = 1,
}

impl ParityOutcome {
    pub fn value(self) -> u8 {
        self as u8
    }

    fn from_index(i: usize) -> Self {
        if i == 0 {
            ParityOutcome::Antiparallel
        } else {
            ParityOutcome::Aligned
        }
    }

    fn flipped(self) -> Self {
        match self {
            ParityOutcome::Antiparallel => ParityOutcome::Aligned,
            ParityOutcome::Aligned => ParityOutcome::Antiparallel,
        }
    }
}

impl fmt::Display for ParityOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P={}", self.value())
    }
}

/// Outcome of the detector pair: `D1` heralds `(|01⟩+|10⟩)/√2`, `D2`
/// heralds `(|01⟩-|10⟩)/√2`, `Leak` the parallel-spin complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorOutcome {
    D1 = 0,
    D2 = 1,
    Leak = 2,
}

impl DetectorOutcome {
    fn from_index(i: usize) -> Self {
        match i {
            0 => DetectorOutcome::D1,
            1 => DetectorOutcome::D2,
            _ => DetectorOutcome::Leak,
        }
    }
}

impl fmt::Display for DetectorOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorOutcome::D1 => "D1",
            DetectorOutcome::D2 => "D2",
            DetectorOutcome::Leak => "leak",
        })
    }
}

/// Outcome of a measurement in `{|+⟩, |−⟩}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DressedOutcome {
    Plus = 0,
    Minus = 1,
}

impl fmt::Display for DressedOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DressedOutcome::Plus => "+",
            DressedOutcome::Minus => "-",
        })
    }
}

/// Computational readout of a pair, `first` then `second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairReadout {
    pub first: u8,
    pub second: u8,
}

impl PairReadout {
    pub fn index(self) -> usize {
        usize::from(self.first) * 2 + usize::from(self.second)
    }

    fn from_index(i: usize) -> Self {
        PairReadout {
            first: (i >> 1) as u8,
            second: (i & 1) as u8,
        }
    }
}

impl fmt::Display for PairReadout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.first, self.second)
    }
}

/// Projectors `[antiparallel, aligned]` on `(a, b)`.
pub fn parity_projectors(a: QubitId, b: QubitId) -> Result<[Projector; 2]> {
    Ok([
        Projector::diagonal(vec![a, b], &[0b01, 0b10])?,
        Projector::diagonal(vec![a, b], &[0b00, 0b11])?,
    ])
}

/// Projectors `[ψ⁺, ψ⁻, parallel]` on a pair.
pub fn detector_projectors(pair: LogicalQubit) -> Result<[Projector; 3]> {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let zero = C64::new(0.0, 0.0);
    let support = vec![pair.first(), pair.second()];
    Ok([
        Projector::rank_one(support.clone(), &[zero, s, s, zero])?,
        Projector::rank_one(support.clone(), &[zero, s, -s, zero])?,
        Projector::diagonal(support, &[0b00, 0b11])?,
    ])
}

/// Projectors `[|+⟩⟨+|, |−⟩⟨−|]` on `q`.
pub fn dressed_projectors(q: QubitId) -> Result<[Projector; 2]> {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    Ok([
        Projector::rank_one(vec![q], &[s, s])?,
        Projector::rank_one(vec![q], &[s, -s])?,
    ])
}

/// The four computational projectors on a pair.
pub fn readout_projectors(pair: LogicalQubit) -> Result<Vec<Projector>> {
    (0..4)
        .map(|i| Projector::diagonal(vec![pair.first(), pair.second()], &[i]))
        .collect()
}

/// Nondestructive charge-parity check on qubits `a` and `b`.
pub fn parity_check(
    state: &PureState,
    a: QubitId,
    b: QubitId,
    block: &str,
    source: &mut dyn OutcomeSource,
) -> Result<BlockResult<ParityOutcome>> {
    let m = state.measure(&parity_projectors(a, b)?, block, source)?;
    let actual = ParityOutcome::from_index(m.outcome);
    let outcome = if source.misreport(block) {
        actual.flipped()
    } else {
        actual
    };
    Ok(BlockResult {
        outcome,
        actual,
        probability: m.probability,
        state: m.state,
    })
}

/// Three-outcome detector-pair measurement on `pair`.
pub fn detector_d(
    state: &PureState,
    pair: LogicalQubit,
    block: &str,
    source: &mut dyn OutcomeSource,
) -> Result<BlockResult<DetectorOutcome>> {
    let m = state.measure(&detector_projectors(pair)?, block, source)?;
    let actual = DetectorOutcome::from_index(m.outcome);
    let outcome = match actual {
        DetectorOutcome::D1 if source.misreport(block) => DetectorOutcome::D2,
        DetectorOutcome::D2 if source.misreport(block) => DetectorOutcome::D1,
        other => other,
    };
    Ok(BlockResult {
        outcome,
        actual,
        probability: m.probability,
        state: m.state,
    })
}

/// Measurement of `q` in the dressed basis; `q` is left in the eigenstate.
pub fn dressed_measure(
    state: &PureState,
    q: QubitId,
    block: &str,
    source: &mut dyn OutcomeSource,
) -> Result<BlockResult<DressedOutcome>> {
    let m = state.measure(&dressed_projectors(q)?, block, source)?;
    let actual = if m.outcome == 0 {
        DressedOutcome::Plus
    } else {
        DressedOutcome::Minus
    };
    Ok(BlockResult {
        outcome: actual,
        actual,
        probability: m.probability,
        state: m.state,
    })
}

/// Computational-basis measurement of both qubits of `pair`.
pub fn readout_pair(
    state: &PureState,
    pair: LogicalQubit,
    block: &str,
    source: &mut dyn OutcomeSource,
) -> Result<BlockResult<PairReadout>> {
    let m = state.measure(&readout_projectors(pair)?, block, source)?;
    let actual = PairReadout::from_index(m.outcome);
    Ok(BlockResult {
        outcome: actual,
        actual,
        probability: m.probability,
        state: m.state,
    })
}
