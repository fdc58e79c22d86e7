//! Logical `R_z`, ancilla-pair preparation, the pair-transfer Hadamard and
//! the two-pair controlled-phase.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::blocks::{DetectorOutcome, PairReadout, ParityOutcome};
use crate::error::{Result, SimError};
use crate::logical::{dfs_weight, LogicalQubit};
use crate::outcome::OutcomeSource;
use crate::protocols::{Correction, CrBlock, GateConfig, ProtocolResult, Trajectory};
use crate::state::{PureState, QubitId, SingleQubitUnitary, Unitary, C64, PROB_TOL};

/// How the two Hadamards inside [`logical_cphase`] are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HadamardMode {
    /// Ideal logical Hadamard applied to the ancilla pair where it sits.
    #[default]
    InPlace,
    /// The full measurement protocol onto a fresh pair, which is then
    /// relabeled into the ancilla pair's slot.
    Transfer,
}

fn check_dfs(state: &PureState, pairs: &[LogicalQubit]) -> Result<()> {
    let leaked = 1.0 - dfs_weight(state, pairs)?;
    if leaked > PROB_TOL {
        return Err(SimError::Leakage { leaked });
    }
    Ok(())
}

/// Requires `pair` to hold `(|01⟩ + |10⟩)/√2`, unentangled with the rest.
fn check_psi_plus(state: &PureState, pair: LogicalQubit) -> Result<()> {
    let rho = state.reduced_density(&pair.qubits())?;
    // ⟨ψ⁺|ρ|ψ⁺⟩ over the |01⟩, |10⟩ block
    let overlap = 0.5 * (rho[(1, 1)] + rho[(1, 2)] + rho[(2, 1)] + rho[(2, 2)]).re;
    if overlap < 1.0 - PROB_TOL {
        return Err(SimError::AncillaNotReady(pair.first().0));
    }
    Ok(())
}

/// `α|0_L⟩ + β|1_L⟩ ↦ α|0_L⟩ + βe^{iθ}|1_L⟩`, by `R_z(θ)` on the pair's
/// first qubit.
pub fn logical_rz(state: &PureState, pair: LogicalQubit, theta: f64) -> Result<PureState> {
    check_dfs(state, &[pair])?;
    state.apply_1q(&SingleQubitUnitary::rz(theta), pair.first())
}

/// The ideal logical Hadamard on `pair`, acting as the identity on the
/// parallel-spin kets.
pub fn logical_hadamard_unitary(state: &PureState, pair: LogicalQubit) -> Result<PureState> {
    check_dfs(state, &[pair])?;
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let (o, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        i, o,  o, o,
        o, s,  s, o,
        o, s, -s, o,
        o, o,  o, i,
    ]);
    state.apply_unitary(&Unitary::new(2, m)?, &pair.qubits())
}

fn prepare_pair(
    traj: &mut Trajectory,
    pair: LogicalQubit,
    source: &mut dyn OutcomeSource,
) -> Result<()> {
    let rho = traj.state.reduced_density(&pair.qubits())?;
    if rho[(0, 0)].re < 1.0 - PROB_TOL {
        return Err(SimError::AncillaNotReady(pair.first().0));
    }
    let h = SingleQubitUnitary::hadamard();
    traj.apply(&h, pair.first())?;
    traj.apply(&h, pair.second())?;
    if traj.parity("prep.P", pair.first(), pair.second(), source)? == ParityOutcome::Aligned {
        traj.correct("prep.P", Correction::PauliX, pair.second())?;
    }
    Ok(())
}

/// Brings a spin-up pair to `(|01⟩ + |10⟩)/√2` with one parity check and a
/// conditional flip.
pub fn prepare_ancilla_pair(
    state: &PureState,
    pair: LogicalQubit,
    source: &mut dyn OutcomeSource,
) -> Result<ProtocolResult> {
    let mut traj = Trajectory::new(state.clone());
    prepare_pair(&mut traj, pair, source)?;
    Ok(traj.into_result(alloc::vec![pair]))
}

/// Hadamard from `in_pair` onto `anc_pair`; returns the output pair in the
/// register left after the C-R ancilla is removed.
fn transfer_hadamard(
    traj: &mut Trajectory,
    in_pair: LogicalQubit,
    anc_pair: LogicalQubit,
    ancilla: QubitId,
    config: &GateConfig,
    source: &mut dyn OutcomeSource,
) -> Result<LogicalQubit> {
    check_dfs(&traj.state, &[in_pair])?;
    check_psi_plus(&traj.state, anc_pair)?;
    let block = CrBlock {
        control: in_pair.first(),
        target: anc_pair.first(),
        ancilla,
        phases: config.phases,
        table: &config.table,
    };
    if in_pair.qubits().contains(&ancilla) || anc_pair.qubits().contains(&ancilla) {
        return Err(SimError::DuplicateQubit(ancilla.0));
    }
    block.run(traj, source)?;
    let (in_pair, anc_pair) = (
        in_pair.shifted_past(ancilla),
        anc_pair.shifted_past(ancilla),
    );
    match traj.detector("D", in_pair, source)? {
        DetectorOutcome::D1 => {}
        DetectorOutcome::D2 => {
            traj.correct("D", Correction::PauliX, anc_pair.first())?;
            traj.correct("D", Correction::PauliX, anc_pair.second())?;
        }
        DetectorOutcome::Leak => {
            return Err(SimError::DetectorLeak(
                in_pair.first().0,
                in_pair.second().0,
            ))
        }
    }
    Ok(anc_pair)
}

/// Logical Hadamard carried from `in_pair` onto `anc_pair`, which must
/// already hold `(|01⟩ + |10⟩)/√2`; `ancilla` must be spin up.
///
/// The C-R ancilla is removed, so qubit indices above it shift down by one.
/// `in_pair` is left measured in the register.
pub fn logical_hadamard(
    state: &PureState,
    in_pair: LogicalQubit,
    anc_pair: LogicalQubit,
    ancilla: QubitId,
    config: &GateConfig,
    source: &mut dyn OutcomeSource,
) -> Result<ProtocolResult> {
    let mut traj = Trajectory::new(state.clone());
    let out = transfer_hadamard(&mut traj, in_pair, anc_pair, ancilla, config, source)?;
    Ok(traj.into_result(alloc::vec![out]))
}

/// Step-by-step access to [`logical_cphase`].
#[derive(Debug, Clone, Copy)]
pub struct CPhaseStages<'a> {
    pub pair_a: LogicalQubit,
    pub anc_pair: LogicalQubit,
    pub pair_b: LogicalQubit,
    pub config: &'a GateConfig,
}

impl CPhaseStages<'_> {
    /// All pairs in the DFS and the ancilla pair in `(|01⟩ + |10⟩)/√2`.
    pub fn validate(&self, state: &PureState) -> Result<()> {
        check_dfs(state, &[self.pair_a, self.anc_pair, self.pair_b])?;
        check_psi_plus(state, self.anc_pair)
    }

    /// Parity check between the first qubits of A and the ancilla pair;
    /// an antiparallel result is flipped back to the aligned form.
    pub fn entangle(
        &self,
        traj: &mut Trajectory,
        source: &mut dyn OutcomeSource,
    ) -> Result<ParityOutcome> {
        let p = traj.parity("P13", self.pair_a.first(), self.anc_pair.first(), source)?;
        if p == ParityOutcome::Antiparallel {
            traj.correct("P13", Correction::PauliX, self.anc_pair.first())?;
            traj.correct("P13", Correction::PauliX, self.anc_pair.second())?;
        }
        Ok(p)
    }

    /// Logical Hadamard on the ancilla pair. `scope` prefixes the block
    /// names of the transfer protocol.
    pub fn hadamard(
        &self,
        traj: &mut Trajectory,
        scope: &str,
        source: &mut dyn OutcomeSource,
    ) -> Result<()> {
        match self.config.hadamard_mode {
            HadamardMode::InPlace => {
                traj.state = logical_hadamard_unitary(&traj.state, self.anc_pair)?;
                Ok(())
            }
            HadamardMode::Transfer => traj.scoped(scope, |traj| {
                let n = traj.state.num_qubits();
                traj.state = traj.state.append_zeros(3)?;
                let fresh = LogicalQubit::new(n, n + 1)?;
                prepare_pair(traj, fresh, source)?;
                let out = transfer_hadamard(
                    traj,
                    self.anc_pair,
                    fresh,
                    QubitId(n + 2),
                    self.config,
                    source,
                )?;
                // Swap the output pair into the ancilla slot, drop the spent pair.
                let mut order: Vec<QubitId> = (0..n + 2).map(QubitId).collect();
                order.swap(self.anc_pair.first().0, out.first().0);
                order.swap(self.anc_pair.second().0, out.second().0);
                traj.state = traj
                    .state
                    .permute(&order)?
                    .discard_qubits(&[QubitId(n), QubitId(n + 1)])?;
                Ok(())
            }),
        }
    }

    pub fn parity_b(
        &self,
        traj: &mut Trajectory,
        source: &mut dyn OutcomeSource,
    ) -> Result<ParityOutcome> {
        traj.parity("P46", self.anc_pair.second(), self.pair_b.second(), source)
    }

    pub fn readout(
        &self,
        traj: &mut Trajectory,
        source: &mut dyn OutcomeSource,
    ) -> Result<PairReadout> {
        let r = traj.readout("readout34", self.anc_pair, source)?;
        if r.first == r.second {
            let leaked = traj.record.entries.last().map_or(1.0, |e| e.probability);
            return Err(SimError::Leakage { leaked });
        }
        Ok(r)
    }

    /// `σ_z` corrections keyed by the parity and readout results.
    pub fn correct(
        &self,
        traj: &mut Trajectory,
        p46: ParityOutcome,
        readout: PairReadout,
    ) -> Result<()> {
        let swapped = readout.first == 1;
        let (on_a, on_b) = match p46 {
            ParityOutcome::Aligned => (false, swapped),
            ParityOutcome::Antiparallel => (true, swapped),
        };
        if on_a {
            traj.correct("corrections", Correction::PauliZ, self.pair_a.first())?;
        }
        if on_b {
            traj.correct("corrections", Correction::PauliZ, self.pair_b.first())?;
        }
        Ok(())
    }

    pub fn run(&self, traj: &mut Trajectory, source: &mut dyn OutcomeSource) -> Result<()> {
        self.validate(&traj.state)?;
        self.entangle(traj, source)?;
        self.hadamard(traj, "H1", source)?;
        let p46 = self.parity_b(traj, source)?;
        self.hadamard(traj, "H2", source)?;
        let readout = self.readout(traj, source)?;
        self.correct(traj, p46, readout)
    }
}

/// Logical controlled-phase between `pair_a` and `pair_b` mediated by
/// `anc_pair`, which must hold `(|01⟩ + |10⟩)/√2`. The register layout is
/// unchanged; the ancilla pair is left measured.
pub fn logical_cphase(
    state: &PureState,
    pair_a: LogicalQubit,
    anc_pair: LogicalQubit,
    pair_b: LogicalQubit,
    config: &GateConfig,
    source: &mut dyn OutcomeSource,
) -> Result<ProtocolResult> {
    let stages = CPhaseStages {
        pair_a,
        anc_pair,
        pair_b,
        config,
    };
    let mut traj = Trajectory::new(state.clone());
    stages.run(&mut traj, source)?;
    Ok(traj.into_result(alloc::vec![pair_a, pair_b]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logical::{
        decode_logical, decode_register, encode_logical, encode_register, LogicalAmplitudes,
    };
    use crate::outcome::{Fallback, ForcedOutcomes, SampledOutcomes};
    use crate::protocols::PhaseParams;
    use crate::state::fidelity_up_to_global_phase;
    use core::f64::consts::{FRAC_PI_2, PI};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pair(a: usize, b: usize) -> LogicalQubit {
        LogicalQubit::new(a, b).unwrap()
    }

    fn logical_fidelity(a: &[C64], b: &[C64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.conj() * y)
            .sum::<C64>()
            .norm()
    }

    /// Input pair ⊗ |00⟩ ⊗ |0⟩, with the middle pair prepared by `prep`.
    fn hadamard_register(alpha: C64, beta: C64, prep: usize) -> PureState {
        let s = encode_logical(&LogicalAmplitudes::new(alpha, beta).unwrap())
            .unwrap()
            .append_zeros(3)
            .unwrap();
        prepare_ancilla_pair(&s, pair(2, 3), &mut ForcedOutcomes::sequence([prep]))
            .unwrap()
            .state
    }

    #[test]
    fn rz_pi_flips_relative_sign() {
        let s = encode_logical(
            &LogicalAmplitudes::new(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap(),
        )
        .unwrap();
        let out = logical_rz(&s, pair(0, 1), PI).unwrap();
        let amps = decode_logical(&out, pair(0, 1)).unwrap();
        assert!((amps.alpha - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((amps.beta + c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert_eq!(logical_rz(&s, pair(0, 1), 0.0).unwrap(), s);
    }

    #[test]
    fn rz_rejects_leaked_pair() {
        let s = PureState::basis(2, "11").unwrap();
        assert!(matches!(
            logical_rz(&s, pair(0, 1), 1.0),
            Err(SimError::Leakage { .. })
        ));
    }

    #[test]
    fn ancilla_pair_preparation_is_deterministic() {
        let psi_plus =
            PureState::from_kets(2, &[("01", c(1.0, 0.0)), ("10", c(1.0, 0.0))]).unwrap();
        for forced in 0..2 {
            let r = prepare_ancilla_pair(
                &PureState::zero(2).unwrap(),
                pair(0, 1),
                &mut ForcedOutcomes::sequence([forced]),
            )
            .unwrap();
            assert!(
                (fidelity_up_to_global_phase(&r.state, &psi_plus).unwrap() - 1.0).abs() < 1e-12
            );
            assert!((r.record.probability() - 0.5).abs() < 1e-12);
            assert_eq!(r.corrections.len(), forced);
        }
    }

    #[test]
    fn hadamard_maps_basis_states() {
        for (alpha, beta, sign) in [(1.0, 0.0, 1.0), (0.0, 1.0, -1.0)] {
            let s = hadamard_register(c(alpha, 0.0), c(beta, 0.0), 0);
            let mut source = SampledOutcomes::seeded(5);
            let r = logical_hadamard(
                &s,
                pair(0, 1),
                pair(2, 3),
                QubitId(4),
                &GateConfig::default(),
                &mut source,
            )
            .unwrap();
            let out = decode_logical(&r.state, r.output_pairs[0]).unwrap();
            let expected = [c(FRAC_1_SQRT_2, 0.0), c(sign * FRAC_1_SQRT_2, 0.0)];
            assert!((logical_fidelity(&out.as_vector(), &expected) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hadamard_d2_branch_before_and_after_flip() {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let s = hadamard_register(h, h, 0);
        let config = GateConfig::default();
        let forced = |d| ForcedOutcomes::named([("D", d)]).with_fallback(Fallback::FirstPossible);
        let d1 = logical_hadamard(
            &s,
            pair(0, 1),
            pair(2, 3),
            QubitId(4),
            &config,
            &mut forced(0),
        )
        .unwrap();
        let d2 = logical_hadamard(
            &s,
            pair(0, 1),
            pair(2, 3),
            QubitId(4),
            &config,
            &mut forced(1),
        )
        .unwrap();
        let out1 = decode_logical(&d1.state, pair(2, 3)).unwrap();
        let out2 = decode_logical(&d2.state, pair(2, 3)).unwrap();
        assert!((logical_fidelity(&out1.as_vector(), &out2.as_vector()) - 1.0).abs() < 1e-10);

        // Undo the flips: α ψ⁺ − β ψ⁻ on the output pair.
        let mut raw = d2.state.clone();
        for q in [2, 3] {
            raw = raw
                .apply_1q(&SingleQubitUnitary::pauli_x(), QubitId(q))
                .unwrap();
        }
        let pre = decode_logical(&raw, pair(2, 3)).unwrap();
        let expected = [(h - h) * h, (h + h) * h];
        assert!((logical_fidelity(&pre.as_vector(), &expected) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hadamard_rejects_leaked_input() {
        // |11⟩ on the input pair is outside the DFS.
        let s = PureState::basis(2, "11").unwrap().append_zeros(3).unwrap();
        let s = prepare_ancilla_pair(&s, pair(2, 3), &mut ForcedOutcomes::sequence([0]))
            .unwrap()
            .state;
        let err = logical_hadamard(
            &s,
            pair(0, 1),
            pair(2, 3),
            QubitId(4),
            &GateConfig::default(),
            &mut SampledOutcomes::seeded(0),
        )
        .unwrap_err();
        assert!(matches!(err, SimError::Leakage { .. }));
    }

    fn cphase_register(logical: &[C64]) -> PureState {
        let s = encode_register(logical)
            .unwrap()
            .append_zeros(2)
            .unwrap()
            .permute(&[0, 1, 4, 5, 2, 3].map(QubitId))
            .unwrap();
        prepare_ancilla_pair(&s, pair(2, 3), &mut ForcedOutcomes::sequence([0]))
            .unwrap()
            .state
    }

    fn run_cphase(logical: &[C64], outcomes: [usize; 3], mode: HadamardMode) -> Vec<C64> {
        let config = GateConfig {
            hadamard_mode: mode,
            ..GateConfig::default()
        };
        let mut source = ForcedOutcomes::named([
            ("P13", outcomes[0]),
            ("P46", outcomes[1]),
            ("readout34", outcomes[2]),
        ])
        .with_fallback(Fallback::FirstPossible);
        let r = logical_cphase(
            &cphase_register(logical),
            pair(0, 1),
            pair(2, 3),
            pair(4, 5),
            &config,
            &mut source,
        )
        .unwrap();
        decode_register(&r.state, &r.output_pairs).unwrap()
    }

    #[test]
    fn cphase_signs_only_the_one_one_component() {
        let out = run_cphase(
            &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            [1, 1, 1],
            HadamardMode::InPlace,
        );
        assert!((out[3].norm() - 1.0).abs() < 1e-12);
        let out = run_cphase(
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [0, 0, 2],
            HadamardMode::InPlace,
        );
        assert!((out[0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn transfer_mode_matches_in_place() {
        let input = [c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.5, 0.0)];
        let expected = [input[0], input[1], input[2], -input[3]];
        for outcomes in [[0, 0, 1], [1, 1, 2], [0, 1, 2], [1, 0, 1]] {
            for mode in [HadamardMode::InPlace, HadamardMode::Transfer] {
                let out = run_cphase(&input, outcomes, mode);
                assert!(
                    (logical_fidelity(&out, &expected) - 1.0).abs() < 1e-10,
                    "{mode:?} {outcomes:?}"
                );
            }
        }
    }

    #[test]
    fn cphase_requires_prepared_ancilla_pair() {
        let s = encode_register(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .unwrap()
            .append_zeros(2)
            .unwrap()
            .permute(&[0, 1, 4, 5, 2, 3].map(QubitId))
            .unwrap();
        let err = logical_cphase(
            &s,
            pair(0, 1),
            pair(2, 3),
            pair(4, 5),
            &GateConfig::default(),
            &mut SampledOutcomes::seeded(1),
        )
        .unwrap_err();
        assert!(matches!(err, SimError::Leakage { .. }));
    }

    #[test]
    fn hadamard_and_rz_do_not_commute() {
        let config = GateConfig::with_phases(PhaseParams::new(0.2, 0.5).unwrap());
        let h = |s: &PureState| {
            let r = logical_hadamard(
                s,
                pair(0, 1),
                pair(2, 3),
                QubitId(4),
                &config,
                &mut SampledOutcomes::seeded(9),
            )
            .unwrap();
            decode_logical(&r.state, pair(2, 3)).unwrap()
        };
        let s = hadamard_register(c(1.0, 0.0), c(0.0, 0.0), 1);
        let rz_then_h = h(&logical_rz(&s, pair(0, 1), FRAC_PI_2).unwrap());
        let h_then_rz = {
            let a = h(&s);
            let e = encode_logical(&a).unwrap();
            decode_logical(&logical_rz(&e, pair(0, 1), FRAC_PI_2).unwrap(), pair(0, 1)).unwrap()
        };
        assert!(logical_fidelity(&rz_then_h.as_vector(), &h_then_rz.as_vector()) < 1.0 - 1e-3);
    }

    proptest! {
        #[test]
        fn cphase_is_symmetric_in_its_pairs(
            v in proptest::collection::vec(-1.0f64..1.0, 8),
            outcomes in (0usize..2, 0usize..2, 1usize..3),
        ) {
            let raw: Vec<C64> = v.chunks(2).map(|p| c(p[0], p[1])).collect();
            let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let input: Vec<C64> = raw.iter().map(|z| z / norm).collect();
            let swapped = [input[0], input[2], input[1], input[3]];
            let o = [outcomes.0, outcomes.1, outcomes.2];
            let ab = run_cphase(&input, o, HadamardMode::InPlace);
            let ba = run_cphase(&swapped, o, HadamardMode::InPlace);
            let ba_back = [ba[0], ba[2], ba[1], ba[3]];
            prop_assert!((logical_fidelity(&ab, &ba_back) - 1.0).abs() < 1e-10);
        }

        #[test]
        fn hadamard_twice_is_identity(ar in -1.0f64..1.0, ai in -1.0f64..1.0, br in -1.0f64..1.0, bi in -1.0f64..1.0, seed in 0u64..1000) {
            let amps = LogicalAmplitudes::normalized(c(ar, ai), c(br, bi));
            prop_assume!(amps.is_ok());
            let amps = amps.unwrap();
            let config = GateConfig::default();
            let mut source = SampledOutcomes::seeded(seed);
            let s = hadamard_register(amps.alpha, amps.beta, 0);
            let once = logical_hadamard(&s, pair(0, 1), pair(2, 3), QubitId(4), &config, &mut source).unwrap();
            let mid = decode_logical(&once.state, pair(2, 3)).unwrap();
            let s2 = hadamard_register(mid.alpha, mid.beta, 1);
            let twice = logical_hadamard(&s2, pair(0, 1), pair(2, 3), QubitId(4), &config, &mut source).unwrap();
            let out = decode_logical(&twice.state, pair(2, 3)).unwrap();
            prop_assert!((logical_fidelity(&out.as_vector(), &amps.as_vector()) - 1.0).abs() < 1e-10);
        }
    }
}
