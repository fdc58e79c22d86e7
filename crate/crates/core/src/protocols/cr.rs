//! Ancilla-mediated controlled-phase block between two physical qubits.
//!
//! The ancilla starts in `(|0⟩ + e^{iφt}|1⟩)/√2`. A parity check with the
//! control copies the control's value into the ancilla's relative phase
//! frame, a Hadamard (which also accrues `e^{iφt′}` on `|1⟩`) turns it into
//! a phase kickback, and a parity check with the target followed by a
//! dressed-basis measurement erases the ancilla. What is left is
//! `CZ(control, target)` times single-qubit phases that depend on the two
//! parity outcomes; a lookup table of `R_z` corrections removes them.

use core::f64::consts::PI;

use crate::blocks::{DressedOutcome, ParityOutcome};
use crate::error::{Result, SimError};
use crate::outcome::OutcomeSource;
use crate::protocols::{Correction, PhaseParams, ProtocolResult, Trajectory};
use crate::state::{PureState, QubitId, SingleQubitUnitary, PROB_TOL};

/// Correction angle `sign · phase + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRule {
    pub sign: f64,
    pub offset: f64,
}

impl PhaseRule {
    pub const fn new(sign: f64, offset: f64) -> Self {
        PhaseRule { sign, offset }
    }

    pub fn angle(&self, phase: f64) -> f64 {
        self.sign * phase + self.offset
    }
}

/// Corrections for one `(P₁, P₂)` outcome pair: `R_z` on the control is
/// driven by `φt`, on the target by `φt′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRule {
    pub control: PhaseRule,
    pub target: PhaseRule,
}

/// `R_z` corrections indexed by `(P₁, P₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionTable {
    cells: [[CellRule; 2]; 2],
}

impl Default for CorrectionTable {
    fn default() -> Self {
        let rule = |cs, co, ts, to| CellRule {
            control: PhaseRule::new(cs, co),
            target: PhaseRule::new(ts, to),
        };
        CorrectionTable {
            cells: [
                // P₁ = 0
                [rule(1.0, PI, 1.0, PI), rule(1.0, 0.0, -1.0, PI)],
                // P₁ = 1
                [rule(-1.0, PI, 1.0, 0.0), rule(-1.0, 0.0, -1.0, 0.0)],
            ],
        }
    }
}

impl CorrectionTable {
    pub fn cell(&self, p1: ParityOutcome, p2: ParityOutcome) -> CellRule {
        self.cells[p1 as usize][p2 as usize]
    }

    pub fn set_cell(&mut self, p1: ParityOutcome, p2: ParityOutcome, rule: CellRule) {
        self.cells[p1 as usize][p2 as usize] = rule;
    }

    /// `(control angle, target angle)` for an outcome pair.
    pub fn angles(&self, p1: ParityOutcome, p2: ParityOutcome, phases: PhaseParams) -> (f64, f64) {
        let cell = self.cell(p1, p2);
        (
            cell.control.angle(phases.phi_t),
            cell.target.angle(phases.phi_tp),
        )
    }
}

/// The C-R block bound to its three qubits. Stage methods are public so the
/// intermediate states can be inspected.
#[derive(Debug, Clone, Copy)]
pub struct CrBlock<'a> {
    pub control: QubitId,
    pub target: QubitId,
    pub ancilla: QubitId,
    pub phases: PhaseParams,
    pub table: &'a CorrectionTable,
}

impl CrBlock<'_> {
    fn check(&self, state: &PureState) -> Result<()> {
        state.check_support(&[self.control, self.target, self.ancilla])
    }

    /// Requires a fresh spin-up ancilla and turns it into
    /// `(|0⟩ + e^{iφt}|1⟩)/√2`.
    pub fn prepare_ancilla(&self, traj: &mut Trajectory) -> Result<()> {
        self.check(&traj.state)?;
        let rho = traj.state.reduced_density(&[self.ancilla])?;
        if rho[(0, 0)].re < 1.0 - PROB_TOL {
            return Err(SimError::AncillaNotReady(self.ancilla.0));
        }
        traj.apply(&SingleQubitUnitary::hadamard(), self.ancilla)?;
        traj.apply(&SingleQubitUnitary::rz(self.phases.phi_t), self.ancilla)
    }

    pub fn first_parity(
        &self,
        traj: &mut Trajectory,
        source: &mut dyn OutcomeSource,
    ) -> Result<ParityOutcome> {
        traj.parity("cr.P1", self.control, self.ancilla, source)
    }

    /// Hadamard on the ancilla with the `e^{iφt′}` free-evolution phase.
    pub fn ancilla_hadamard(&self, traj: &mut Trajectory) -> Result<()> {
        traj.apply(&SingleQubitUnitary::hadamard(), self.ancilla)?;
        traj.apply(&SingleQubitUnitary::rz(self.phases.phi_tp), self.ancilla)
    }

    pub fn second_parity(
        &self,
        traj: &mut Trajectory,
        source: &mut dyn OutcomeSource,
    ) -> Result<ParityOutcome> {
        traj.parity("cr.P2", self.target, self.ancilla, source)
    }

    /// Dressed measurement of the ancilla; `σ_z` on the target for `−`.
    pub fn dressed(
        &self,
        traj: &mut Trajectory,
        source: &mut dyn OutcomeSource,
    ) -> Result<DressedOutcome> {
        let outcome = traj.dressed("cr.dressed", self.ancilla, source)?;
        if outcome == DressedOutcome::Minus {
            traj.correct("cr.dressed", Correction::PauliZ, self.target)?;
        }
        Ok(outcome)
    }

    pub fn discard_ancilla(&self, traj: &mut Trajectory) -> Result<()> {
        traj.state = traj.state.discard_qubit(self.ancilla)?;
        Ok(())
    }

    /// Table corrections; call after [`CrBlock::discard_ancilla`].
    pub fn table_corrections(
        &self,
        traj: &mut Trajectory,
        p1: ParityOutcome,
        p2: ParityOutcome,
    ) -> Result<()> {
        let (control_angle, target_angle) = self.table.angles(p1, p2, self.phases);
        traj.correct(
            "cr.table",
            Correction::Rz(control_angle),
            self.shifted(self.control),
        )?;
        traj.correct(
            "cr.table",
            Correction::Rz(target_angle),
            self.shifted(self.target),
        )
    }

    /// Index of `q` once the ancilla has been removed.
    pub fn shifted(&self, q: QubitId) -> QubitId {
        if q > self.ancilla {
            QubitId(q.0 - 1)
        } else {
            q
        }
    }

    /// All stages in order. The ancilla is removed from the register.
    pub fn run(&self, traj: &mut Trajectory, source: &mut dyn OutcomeSource) -> Result<()> {
        if self.control == self.target {
            return Err(SimError::DuplicateQubit(self.control.0));
        }
        self.prepare_ancilla(traj)?;
        let p1 = self.first_parity(traj, source)?;
        self.ancilla_hadamard(traj)?;
        let p2 = self.second_parity(traj, source)?;
        self.dressed(traj, source)?;
        self.discard_ancilla(traj)?;
        self.table_corrections(traj, p1, p2)
    }
}

/// Controlled-phase between `control` and `target` via a fresh `ancilla`.
/// The returned register no longer contains the ancilla; indices above it
/// shift down by one.
pub fn cr_block(
    state: &PureState,
    control: QubitId,
    target: QubitId,
    ancilla: QubitId,
    phases: PhaseParams,
    table: &CorrectionTable,
    source: &mut dyn OutcomeSource,
) -> Result<ProtocolResult> {
    let block = CrBlock {
        control,
        target,
        ancilla,
        phases,
        table,
    };
    let mut traj = Trajectory::new(state.clone());
    block.run(&mut traj, source)?;
    Ok(traj.into_result(alloc::vec::Vec::new()))
}
