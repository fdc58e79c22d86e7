//! A protocol plus its configuration, with a fixed register layout so the
//! same descriptor can be sampled, enumerated or turned into a channel.

use alloc::{format, vec, vec::Vec};
use core::f64::consts::FRAC_1_SQRT_2;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Result, SimError};
use crate::logical::{decode_register, encode_register, LogicalQubit};
use crate::outcome::{OutcomeSource, SampledOutcomes};
use crate::protocols::{
    cr_block, logical_cphase, logical_hadamard, logical_rz, prepare_ancilla_pair, GateConfig,
    ProtocolResult, Trajectory,
};
use crate::state::{PureState, QubitId, C64, PROB_TOL};

/// Which gate a descriptor runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolKind {
    Rz {
        theta: f64,
    },
    Hadamard,
    CPhase,
    /// The physical C-R block on an encoded qubit and a `ψ⁺` pair.
    CrBlock,
}

impl ProtocolKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Rz { .. } => "rz",
            ProtocolKind::Hadamard => "hadamard",
            ProtocolKind::CPhase => "cphase",
            ProtocolKind::CrBlock => "cr-block",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = SimError;

    /// Parses a protocol name; `rz` gets `θ = 0` and is meant to be
    /// completed by the caller.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rz" => Ok(ProtocolKind::Rz { theta: 0.0 }),
            "hadamard" => Ok(ProtocolKind::Hadamard),
            "cphase" => Ok(ProtocolKind::CPhase),
            "cr-block" | "cr_block" => Ok(ProtocolKind::CrBlock),
            other => Err(SimError::InvalidInput(format!(
                "unknown protocol {other:?}"
            ))),
        }
    }
}

/// A runnable protocol.
///
/// Layouts (pairs listed as qubit indices):
/// - `rz`: input/output pair (0, 1).
/// - `hadamard`: input (0, 1), output pair (2, 3) prepared in the run,
///   C-R ancilla 4.
/// - `cphase`: A (0, 1), ancilla pair (2, 3) prepared in the run, B (4, 5).
/// - `cr-block`: input (0, 1), `ψ⁺` pair (2, 3), ancilla 4; control 0,
///   target 2. Output is both pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub config: GateConfig,
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind, config: GateConfig) -> Self {
        ProtocolSpec { kind, config }
    }

    pub fn input_qubits(&self) -> usize {
        match self.kind {
            ProtocolKind::CPhase => 2,
            _ => 1,
        }
    }

    pub fn output_qubits(&self) -> usize {
        match self.kind {
            ProtocolKind::Rz { .. } | ProtocolKind::Hadamard => 1,
            ProtocolKind::CPhase | ProtocolKind::CrBlock => 2,
        }
    }

    fn check_inputs(&self, logical: &[C64]) -> Result<()> {
        let expected = 1 << self.input_qubits();
        if logical.len() != expected {
            return Err(SimError::DimensionMismatch {
                expected,
                got: logical.len(),
            });
        }
        let norm_sqr: f64 = logical.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > PROB_TOL {
            return Err(SimError::NotNormalized { norm_sqr });
        }
        Ok(())
    }

    /// Physical register before the run, for a joint logical input vector.
    pub fn initial_state(&self, logical: &[C64]) -> Result<PureState> {
        self.check_inputs(logical)?;
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        // Renormalize at full precision so loose inputs pass the exact checks.
        let norm = libm::sqrt(logical.iter().map(|z| z.norm_sqr()).sum::<f64>());
        let logical: Vec<C64> = logical.iter().map(|z| z / norm).collect();
        let encoded = encode_register(&logical)?;
        match self.kind {
            ProtocolKind::Rz { .. } => Ok(encoded),
            ProtocolKind::Hadamard => encoded.append_zeros(3),
            ProtocolKind::CPhase => encoded
                .append_zeros(2)?
                .permute(&[0, 1, 4, 5, 2, 3].map(QubitId)),
            ProtocolKind::CrBlock => {
                let zero = C64::new(0.0, 0.0);
                let psi_plus = PureState::from_amplitudes(vec![zero, s, s, zero])?;
                encoded.tensor(&psi_plus)?.append_zeros(1)
            }
        }
    }

    /// Runs the protocol from [`ProtocolSpec::initial_state`].
    pub fn execute(
        &self,
        initial: &PureState,
        source: &mut dyn OutcomeSource,
    ) -> Result<ProtocolResult> {
        let pair = |a: usize, b: usize| LogicalQubit::new(a, b);
        let config = &self.config;
        match self.kind {
            ProtocolKind::Rz { theta } => {
                let p = pair(0, 1)?;
                let state = logical_rz(initial, p, theta)?;
                Ok(Trajectory::new(state).into_result(vec![p]))
            }
            ProtocolKind::Hadamard => {
                let prep = prepare_ancilla_pair(initial, pair(2, 3)?, source)?;
                let h = logical_hadamard(
                    &prep.state,
                    pair(0, 1)?,
                    pair(2, 3)?,
                    QubitId(4),
                    config,
                    source,
                )?;
                Ok(merge(prep, h))
            }
            ProtocolKind::CPhase => {
                let prep = prepare_ancilla_pair(initial, pair(2, 3)?, source)?;
                let cz = logical_cphase(
                    &prep.state,
                    pair(0, 1)?,
                    pair(2, 3)?,
                    pair(4, 5)?,
                    config,
                    source,
                )?;
                Ok(merge(prep, cz))
            }
            ProtocolKind::CrBlock => {
                let mut r = cr_block(
                    initial,
                    QubitId(0),
                    QubitId(2),
                    QubitId(4),
                    config.phases,
                    &config.table,
                    source,
                )?;
                r.output_pairs = vec![pair(0, 1)?, pair(2, 3)?];
                Ok(r)
            }
        }
    }

    /// Encodes, runs and returns the result.
    pub fn run(&self, logical: &[C64], source: &mut dyn OutcomeSource) -> Result<ProtocolResult> {
        self.execute(&self.initial_state(logical)?, source)
    }

    /// Decoded logical amplitudes of the output pairs.
    pub fn output_amplitudes(&self, result: &ProtocolResult) -> Result<Vec<C64>> {
        decode_register(&result.state, &result.output_pairs)
    }

    /// The ideal gate as an `out × in` matrix on logical amplitudes.
    pub fn ideal_matrix(&self) -> DMatrix<C64> {
        let o = C64::new(0.0, 0.0);
        let i = C64::new(1.0, 0.0);
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        match self.kind {
            ProtocolKind::Rz { theta } => {
                DMatrix::from_row_slice(2, 2, &[i, o, o, C64::from_polar(1.0, theta)])
            }
            ProtocolKind::Hadamard => DMatrix::from_row_slice(2, 2, &[s, s, s, -s]),
            ProtocolKind::CPhase => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![i, i, i, -i]))
            }
            // |x⟩ ↦ |x⟩ ⊗ (|0⟩ + (−1)^x |1⟩)/√2
            ProtocolKind::CrBlock => DMatrix::from_row_slice(4, 2, &[s, o, s, o, o, s, o, -s]),
        }
    }

    /// Ideal output amplitudes for a logical input vector.
    pub fn ideal_output(&self, logical: &[C64]) -> Result<Vec<C64>> {
        self.check_inputs(logical)?;
        let v = nalgebra::DVector::from_column_slice(logical);
        Ok((self.ideal_matrix() * v).iter().copied().collect())
    }
}

fn merge(first: ProtocolResult, second: ProtocolResult) -> ProtocolResult {
    let mut record = first.record;
    record.entries.extend(second.record.entries);
    let mut corrections = first.corrections;
    corrections.extend(second.corrections);
    ProtocolResult {
        state: second.state,
        record,
        corrections,
        output_pairs: second.output_pairs,
    }
}

/// One trajectory with Born-sampled outcomes from a ChaCha8 stream.
pub fn run_protocol_sampled(
    spec: &ProtocolSpec,
    logical: &[C64],
    seed: u64,
) -> Result<ProtocolResult> {
    spec.run(logical, &mut SampledOutcomes::seeded(seed))
}
