//! Logical gates as measurement and feed-forward protocols.
//!
//! Every protocol runs on a [`Trajectory`]: the current register, the
//! measurement record and the corrections applied so far. Outcomes come
//! from an [`OutcomeSource`], so the same code drives sampled runs, forced
//! replays and exhaustive branch enumeration.

mod cr;
mod descriptor;
mod gates;

pub use cr::{cr_block, CellRule, CorrectionTable, CrBlock, PhaseRule};
pub use descriptor::{run_protocol_sampled, ProtocolKind, ProtocolSpec};
pub use gates::{
    logical_cphase, logical_hadamard, logical_hadamard_unitary, logical_rz, prepare_ancilla_pair,
    CPhaseStages, HadamardMode,
};

use alloc::{format, string::String, vec::Vec};
use core::fmt;

use crate::blocks::{self, DetectorOutcome, DressedOutcome, PairReadout, ParityOutcome};
use crate::error::{Result, SimError};
use crate::logical::LogicalQubit;
use crate::outcome::OutcomeSource;
use crate::state::{PureState, QubitId, SingleQubitUnitary};

/// Free-evolution phases `(E₁Δt, E₁Δt′)` picked up by the C-R ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseParams {
    pub phi_t: f64,
    pub phi_tp: f64,
}

impl PhaseParams {
    pub fn new(phi_t: f64, phi_tp: f64) -> Result<Self> {
        if !phi_t.is_finite() || !phi_tp.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "phases must be finite, got ({phi_t}, {phi_tp})"
            )));
        }
        Ok(PhaseParams { phi_t, phi_tp })
    }

    pub fn zero() -> Self {
        PhaseParams::default()
    }
}

/// Everything a gate protocol needs besides its register.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GateConfig {
    pub phases: PhaseParams,
    pub table: CorrectionTable,
    pub hadamard_mode: HadamardMode,
}

impl GateConfig {
    pub fn with_phases(phases: PhaseParams) -> Self {
        GateConfig {
            phases,
            ..GateConfig::default()
        }
    }
}

/// One measurement in a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordEntry {
    pub block: String,
    /// Reported outcome label.
    pub outcome: String,
    /// Index of the outcome the state collapsed on.
    pub index: usize,
    pub probability: f64,
}

/// Ordered measurement history of one trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementRecord {
    pub entries: Vec<RecordEntry>,
}

impl MeasurementRecord {
    /// Product of the per-block probabilities.
    pub fn probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).product()
    }

    /// Outcome indices in order; replaying them forces the same branch.
    pub fn outcome_indices(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.index).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, block: &str) -> Option<&RecordEntry> {
        self.entries.iter().find(|e| e.block == block)
    }
}

/// A feed-forward correction gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correction {
    PauliX,
    PauliZ,
    /// `diag(1, e^{iθ})`.
    Rz(f64),
}

impl Correction {
    pub fn unitary(self) -> SingleQubitUnitary {
        match self {
            Correction::PauliX => SingleQubitUnitary::pauli_x(),
            Correction::PauliZ => SingleQubitUnitary::pauli_z(),
            Correction::Rz(theta) => SingleQubitUnitary::rz(theta),
        }
    }
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Correction::PauliX => f.write_str("X"),
            Correction::PauliZ => f.write_str("Z"),
            Correction::Rz(theta) => write!(f, "Rz({theta})"),
        }
    }
}

/// A correction that was applied, with the register index it hit at the
/// time it was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedCorrection {
    pub block: String,
    pub gate: Correction,
    pub target: QubitId,
}

/// Final state and audit trail of a protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub state: PureState,
    pub record: MeasurementRecord,
    pub corrections: Vec<AppliedCorrection>,
    pub output_pairs: Vec<LogicalQubit>,
}

/// A protocol run in progress.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: PureState,
    pub record: MeasurementRecord,
    pub corrections: Vec<AppliedCorrection>,
    prefix: String,
}

impl Trajectory {
    pub fn new(state: PureState) -> Self {
        Trajectory {
            state,
            record: MeasurementRecord::default(),
            corrections: Vec::new(),
            prefix: String::new(),
        }
    }

    pub fn from_result(result: ProtocolResult) -> Self {
        Trajectory {
            state: result.state,
            record: result.record,
            corrections: result.corrections,
            prefix: String::new(),
        }
    }

    pub fn into_result(self, output_pairs: Vec<LogicalQubit>) -> ProtocolResult {
        ProtocolResult {
            state: self.state,
            record: self.record,
            corrections: self.corrections,
            output_pairs,
        }
    }

    fn name(&self, block: &str) -> String {
        format!("{}{}", self.prefix, block)
    }

    /// Runs `f` with block names prefixed by `scope.`.
    pub fn scoped<T>(&mut self, scope: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let saved = self.prefix.len();
        self.prefix.push_str(scope);
        self.prefix.push('.');
        let out = f(self);
        self.prefix.truncate(saved);
        out
    }

    fn push<O: fmt::Display>(&mut self, block: String, outcome: O, index: usize, probability: f64) {
        self.record.entries.push(RecordEntry {
            block,
            outcome: format!("{outcome}"),
            index,
            probability,
        });
    }

    /// Unrecorded unitary step of the protocol itself.
    pub fn apply(&mut self, u: &SingleQubitUnitary, q: QubitId) -> Result<()> {
        self.state = self.state.apply_1q(u, q)?;
        Ok(())
    }

    /// Feed-forward correction, kept in the audit trail.
    pub fn correct(&mut self, block: &str, gate: Correction, q: QubitId) -> Result<()> {
        self.state = self.state.apply_1q(&gate.unitary(), q)?;
        let block = self.name(block);
        self.corrections.push(AppliedCorrection {
            block,
            gate,
            target: q,
        });
        Ok(())
    }

    pub fn parity(
        &mut self,
        block: &str,
        a: QubitId,
        b: QubitId,
        source: &mut dyn OutcomeSource,
    ) -> Result<ParityOutcome> {
        let name = self.name(block);
        let r = blocks::parity_check(&self.state, a, b, &name, source)?;
        self.state = r.state;
        self.push(name, r.outcome, r.actual as usize, r.probability);
        Ok(r.outcome)
    }

    pub fn detector(
        &mut self,
        block: &str,
        pair: LogicalQubit,
        source: &mut dyn OutcomeSource,
    ) -> Result<DetectorOutcome> {
        let name = self.name(block);
        let r = blocks::detector_d(&self.state, pair, &name, source)?;
        self.state = r.state;
        self.push(name, r.outcome, r.actual as usize, r.probability);
        Ok(r.outcome)
    }

    pub fn dressed(
        &mut self,
        block: &str,
        q: QubitId,
        source: &mut dyn OutcomeSource,
    ) -> Result<DressedOutcome> {
        let name = self.name(block);
        let r = blocks::dressed_measure(&self.state, q, &name, source)?;
        self.state = r.state;
        self.push(name, r.outcome, r.actual as usize, r.probability);
        Ok(r.outcome)
    }

    pub fn readout(
        &mut self,
        block: &str,
        pair: LogicalQubit,
        source: &mut dyn OutcomeSource,
    ) -> Result<PairReadout> {
        let name = self.name(block);
        let r = blocks::readout_pair(&self.state, pair, &name, source)?;
        self.state = r.state;
        self.push(name, r.outcome, r.actual.index(), r.probability);
        Ok(r.outcome)
    }
}
