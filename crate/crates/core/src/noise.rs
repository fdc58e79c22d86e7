//! Collective dephasing and single-pair Pauli errors.
//!
//! Dephasing is a random rotation `exp(iφ Σ σ_z / 2)` with one angle shared
//! by all affected qubits; the bath is collapsed to that classical angle.
//! Antiparallel pairs have `Σ σ_z = 0` and are untouched.

use alloc::{format, vec::Vec};
use core::f64::consts::{PI, TAU};
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, SimError};
use crate::logical::{dfs_weight, encode_logical, LogicalAmplitudes, LogicalQubit};
use crate::state::{fidelity_up_to_global_phase, PureState, QubitId, SingleQubitUnitary, C64};

/// Distribution of the shared dephasing angle, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleDistribution {
    Fixed(f64),
    /// Uniform on `[0, 2π)`.
    Uniform,
    Gaussian {
        mean: f64,
        sigma: f64,
    },
}

impl AngleDistribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            AngleDistribution::Fixed(v) => v.is_finite(),
            AngleDistribution::Uniform => true,
            AngleDistribution::Gaussian { mean, sigma } => {
                mean.is_finite() && sigma.is_finite() && sigma >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidParameter(format!(
                "bad angle distribution {self:?}"
            )))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            AngleDistribution::Fixed(v) => Ok(v),
            AngleDistribution::Uniform => Ok(rng.random::<f64>() * TAU),
            AngleDistribution::Gaussian { mean, sigma } => Normal::new(mean, sigma)
                .map(|n| n.sample(rng))
                .map_err(|e| SimError::InvalidParameter(format!("gaussian({mean}, {sigma}): {e}"))),
        }
    }

    /// Short label for reports: `fixed`, `uniform` or `gaussian`.
    pub fn name(&self) -> &'static str {
        match self {
            AngleDistribution::Fixed(_) => "fixed",
            AngleDistribution::Uniform => "uniform",
            AngleDistribution::Gaussian { .. } => "gaussian",
        }
    }
}

/// Which qubits dephase together and how the angle is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveDephasing {
    qubits: Vec<QubitId>,
    distribution: AngleDistribution,
}

impl CollectiveDephasing {
    pub fn new(qubits: Vec<QubitId>, distribution: AngleDistribution) -> Result<Self> {
        if qubits.is_empty() {
            return Err(SimError::InvalidParameter(
                "dephasing needs at least one qubit".into(),
            ));
        }
        distribution.validate()?;
        Ok(CollectiveDephasing {
            qubits,
            distribution,
        })
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn distribution(&self) -> AngleDistribution {
        self.distribution
    }
}

/// `exp(iφ Σ_{q∈qubits} σ_z^{(q)} / 2)`: spin-up picks up `e^{iφ/2}`,
/// spin-down `e^{−iφ/2}`.
pub fn collective_dephasing(
    state: &PureState,
    qubits: &[QubitId],
    angle: f64,
) -> Result<PureState> {
    state.check_support(qubits)?;
    let masks: Vec<usize> = qubits.iter().map(|&q| state.mask(q)).collect();
    let amplitudes = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(index, a)| {
            // Σσ_z eigenvalue: spin-up counts +1, spin-down −1.
            let net: i64 = masks
                .iter()
                .map(|m| if index & m == 0 { 1 } else { -1 })
                .sum();
            if net == 0 {
                *a
            } else {
                a * C64::from_polar(1.0, angle * net as f64 / 2.0)
            }
        })
        .collect();
    PureState::from_amplitudes(amplitudes)
}

/// Draws an angle from `spec` and applies the rotation; returns the angle.
pub fn apply_collective_dephasing<R: Rng + ?Sized>(
    state: &PureState,
    spec: &CollectiveDephasing,
    rng: &mut R,
) -> Result<(PureState, f64)> {
    let angle = spec.distribution.sample(rng)?;
    Ok((collective_dephasing(state, &spec.qubits, angle)?, angle))
}

/// Single-qubit Pauli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn unitary(self) -> SingleQubitUnitary {
        match self {
            Pauli::I => SingleQubitUnitary::identity(),
            Pauli::X => SingleQubitUnitary::pauli_x(),
            Pauli::Y => SingleQubitUnitary::pauli_y(),
            Pauli::Z => SingleQubitUnitary::pauli_z(),
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// `σ^i ⊗ σ^{i+1}` on the two qubits of a pair, written `"XZ"` etc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairPauli {
    pub first: Pauli,
    pub second: Pauli,
}

const fn pp(first: Pauli, second: Pauli) -> PairPauli {
    PairPauli { first, second }
}

/// Correlated errors that keep a pair antiparallel.
pub const LOGIC_ERRORS: [PairPauli; 3] = [
    pp(Pauli::X, Pauli::X),
    pp(Pauli::Y, Pauli::Y),
    pp(Pauli::Z, Pauli::Z),
];

/// Errors that take a pair out of the protected subspace.
pub const LEAKAGE_ERRORS: [PairPauli; 8] = [
    pp(Pauli::X, Pauli::I),
    pp(Pauli::I, Pauli::X),
    pp(Pauli::Y, Pauli::I),
    pp(Pauli::I, Pauli::Y),
    pp(Pauli::X, Pauli::Z),
    pp(Pauli::Z, Pauli::X),
    pp(Pauli::Y, Pauli::Z),
    pp(Pauli::Z, Pauli::Y),
];

impl PairPauli {
    pub const fn new(first: Pauli, second: Pauli) -> Self {
        pp(first, second)
    }

    pub fn apply(&self, state: &PureState, pair: LogicalQubit) -> Result<PureState> {
        state
            .apply_1q(&self.first.unitary(), pair.first())?
            .apply_1q(&self.second.unitary(), pair.second())
    }
}

impl fmt::Display for PairPauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.first.symbol(), self.second.symbol())
    }
}

impl FromStr for PairPauli {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars().map(Pauli::from_symbol);
        match (chars.next(), chars.next(), chars.next()) {
            (Some(Some(first)), Some(Some(second)), None) => Ok(pp(first, second)),
            _ => Err(SimError::InvalidInput(format!("bad pair operator {s:?}"))),
        }
    }
}

/// Whether an error keeps the pair in the protected subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Logic,
    Leakage,
}

/// Classifies `op` by applying it to both logical basis states and
/// checking whether any weight leaves the antiparallel subspace.
pub fn classify(op: PairPauli) -> Result<ErrorClass> {
    let pair = LogicalQubit::new(0, 1)?;
    for amps in [LogicalAmplitudes::zero(), LogicalAmplitudes::one()] {
        let out = op.apply(&encode_logical(&amps)?, pair)?;
        if dfs_weight(&out, &[pair])? < 1.0 - crate::state::PROB_TOL {
            return Ok(ErrorClass::Leakage);
        }
    }
    Ok(ErrorClass::Logic)
}

/// A pair operator that fires with a given probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorOperatorSpec {
    operator: PairPauli,
    pair: LogicalQubit,
    probability: f64,
}

impl ErrorOperatorSpec {
    pub fn new(operator: PairPauli, pair: LogicalQubit, probability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(SimError::InvalidParameter(format!(
                "error probability {probability} outside [0, 1]"
            )));
        }
        Ok(ErrorOperatorSpec {
            operator,
            pair,
            probability,
        })
    }

    pub fn operator(&self) -> PairPauli {
        self.operator
    }

    pub fn pair(&self) -> LogicalQubit {
        self.pair
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }
}

/// Applies the operator with its probability; returns whether it fired.
pub fn apply_error_operator<R: Rng + ?Sized>(
    state: &PureState,
    spec: &ErrorOperatorSpec,
    rng: &mut R,
) -> Result<(PureState, bool)> {
    let fired = spec.probability > 0.0 && rng.random::<f64>() < spec.probability;
    if fired {
        Ok((spec.operator.apply(state, spec.pair)?, true))
    } else {
        Ok((state.clone(), false))
    }
}

/// How a logical qubit is stored for noise benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// `α|01⟩ + β|10⟩`.
    Dfs,
    /// `α|0⟩ + β|1⟩` on a single spin.
    Bare,
}

impl Encoding {
    pub fn name(&self) -> &'static str {
        match self {
            Encoding::Dfs => "dfs",
            Encoding::Bare => "bare",
        }
    }

    pub fn encode(&self, amps: &LogicalAmplitudes) -> Result<PureState> {
        match self {
            Encoding::Dfs => encode_logical(amps),
            Encoding::Bare => {
                LogicalAmplitudes::new(amps.alpha, amps.beta)?;
                PureState::from_amplitudes(alloc::vec![amps.alpha, amps.beta])
            }
        }
    }
}

/// Independent stream `index` derived from `seed`, so per-sample results
/// do not depend on how samples are scheduled.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mean and standard error of a batch of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl SampleStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(SimError::InvalidParameter(
                "need at least one sample".into(),
            ));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            libm::sqrt(var / n)
        } else {
            0.0
        };
        Ok(SampleStats {
            mean,
            stderr,
            samples: values.len(),
        })
    }
}

/// Fidelity of one dephased copy (sample `index` of stream `seed`).
pub fn dephasing_fidelity_sample(
    encoding: Encoding,
    amps: &LogicalAmplitudes,
    distribution: AngleDistribution,
    seed: u64,
    index: u64,
) -> Result<f64> {
    let clean = encoding.encode(amps)?;
    let qubits: Vec<QubitId> = (0..clean.num_qubits()).map(QubitId).collect();
    let spec = CollectiveDephasing::new(qubits, distribution)?;
    let (noisy, _) = apply_collective_dephasing(&clean, &spec, &mut sample_rng(seed, index))?;
    fidelity_up_to_global_phase(&noisy, &clean)
}

/// Monte-Carlo mean fidelity under collective dephasing of every qubit in
/// the encoding.
pub fn fidelity_under_dephasing(
    encoding: Encoding,
    amps: &LogicalAmplitudes,
    distribution: AngleDistribution,
    num_samples: usize,
    seed: u64,
) -> Result<SampleStats> {
    let values = (0..num_samples as u64)
        .map(|i| dephasing_fidelity_sample(encoding, amps, distribution, seed, i))
        .collect::<Result<Vec<_>>>()?;
    SampleStats::from_values(&values)
}

/// DFS weight of a DFS-encoded qubit after one draw of `operator`.
pub fn error_dfs_weight_sample(
    amps: &LogicalAmplitudes,
    operator: PairPauli,
    probability: f64,
    seed: u64,
    index: u64,
) -> Result<f64> {
    let pair = LogicalQubit::new(0, 1)?;
    let spec = ErrorOperatorSpec::new(operator, pair, probability)?;
    let (state, _) =
        apply_error_operator(&encode_logical(amps)?, &spec, &mut sample_rng(seed, index))?;
    dfs_weight(&state, &[pair])
}

/// Mean DFS weight after a probabilistic pair error.
pub fn dfs_weight_under_error(
    amps: &LogicalAmplitudes,
    operator: PairPauli,
    probability: f64,
    num_samples: usize,
    seed: u64,
) -> Result<SampleStats> {
    let values = (0..num_samples as u64)
        .map(|i| error_dfs_weight_sample(amps, operator, probability, seed, i))
        .collect::<Result<Vec<_>>>()?;
    SampleStats::from_values(&values)
}

/// `E|cos(φ/2)|` for `φ` uniform on `[0, 2π)`.
pub const BARE_UNIFORM_MEAN_FIDELITY: f64 = 2.0 / PI;
