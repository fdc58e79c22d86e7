//! Closed-form intermediate states of the gate protocols, checked against
//! the protocol engine stage by stage with forced outcomes.

use alloc::{format, string::String, vec, vec::Vec};
use core::f64::consts::TAU;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::blocks::ParityOutcome;
use crate::error::{Result, SimError};
use crate::logical::{encode_logical, LogicalAmplitudes, LogicalQubit};
use crate::noise::sample_rng;
use crate::outcome::{Fallback, ForcedOutcomes};
use crate::protocols::{CPhaseStages, CrBlock, GateConfig, PhaseParams, Trajectory};
use crate::state::{fidelity_up_to_global_phase, PureState, QubitId, C64, PROB_TOL};

/// A checkable state equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquationId {
    CrOutput,
    CPhaseEntangle,
    CPhaseOdd,
    CPhaseEven,
    CrAncilla,
    CrFirstParity,
    CrAncillaHadamard,
    CrSecondParity,
    CrDressed,
}

impl EquationId {
    pub const ALL: [EquationId; 9] = [
        EquationId::CrOutput,
        EquationId::CPhaseEntangle,
        EquationId::CPhaseOdd,
        EquationId::CPhaseEven,
        EquationId::CrAncilla,
        EquationId::CrFirstParity,
        EquationId::CrAncillaHadamard,
        EquationId::CrSecondParity,
        EquationId::CrDressed,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EquationId::CrOutput => "cr.output",
            EquationId::CPhaseEntangle => "cphase.entangle",
            EquationId::CPhaseOdd => "cphase.odd",
            EquationId::CPhaseEven => "cphase.even",
            EquationId::CrAncilla => "cr.ancilla",
            EquationId::CrFirstParity => "cr.parity1",
            EquationId::CrAncillaHadamard => "cr.hadamard",
            EquationId::CrSecondParity => "cr.parity2",
            EquationId::CrDressed => "cr.dressed",
        }
    }
}

impl fmt::Display for EquationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EquationId {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        EquationId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::InvalidInput(format!("unknown equation {s:?}")))
    }
}

/// Inputs `(α, β)` for pair A, `(c, d)` for pair B, and the phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationParams {
    pub ab: LogicalAmplitudes,
    pub cd: LogicalAmplitudes,
    pub phases: PhaseParams,
}

impl EquationParams {
    /// Random complex amplitudes and phases uniform on `[0, 2π)²`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut amps = || loop {
            let mut z = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let (a, b) = (z(), z());
            if a.norm_sqr() + b.norm_sqr() > 1e-3 {
                break LogicalAmplitudes::normalized(a, b).expect("norm checked");
            }
        };
        let (ab, cd) = (amps(), amps());
        let phases = PhaseParams {
            phi_t: rng.random::<f64>() * TAU,
            phi_tp: rng.random::<f64>() * TAU,
        };
        EquationParams { ab, cd, phases }
    }
}

/// Oracle-derived `R_z` angles for a table cell, next to the table's own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCorrection {
    pub control: f64,
    pub target: f64,
    pub table_control: f64,
    pub table_target: f64,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationReport {
    pub check: String,
    pub branch: String,
    pub fidelity: f64,
    pub passed: bool,
    pub expected: Vec<C64>,
    pub actual: Vec<C64>,
    pub derived_correction: Option<DerivedCorrection>,
}

fn report(
    check: &str,
    branch: &str,
    expected: &PureState,
    actual: &PureState,
) -> Result<EquationReport> {
    let fidelity = fidelity_up_to_global_phase(expected, actual)?;
    Ok(EquationReport {
        check: check.into(),
        branch: branch.into(),
        fidelity,
        passed: fidelity >= 1.0 - PROB_TOL,
        expected: expected.amplitudes().to_vec(),
        actual: actual.amplitudes().to_vec(),
        derived_correction: None,
    })
}

fn e(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Two-pair kets `|x₁x₂y₁y₂⟩` as `(ket, coefficient)` terms.
type Terms = Vec<(String, C64)>;

fn state(n: usize, terms: &[(String, C64)]) -> Result<PureState> {
    let refs: Vec<(&str, C64)> = terms.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    PureState::from_kets(n, &refs)
}

fn terms(items: &[(&str, C64)]) -> Terms {
    items.iter().map(|(k, v)| (String::from(*k), *v)).collect()
}

/// `α(|0101⟩ + |0110⟩) + β(|1001⟩ + |1010⟩)` on `1, 2, 1′, 2′`, plus a
/// spin-up ancilla.
fn cr_register(p: &EquationParams) -> Result<PureState> {
    let (a, b) = (p.ab.alpha, p.ab.beta);
    let pre = state(
        4,
        &terms(&[("0101", a), ("0110", a), ("1001", b), ("1010", b)]),
    )?;
    pre.append_zeros(1)
}

fn cr_stage(p: &EquationParams, config: &GateConfig, id: EquationId) -> Result<PureState> {
    let block = CrBlock {
        control: QubitId(0),
        target: QubitId(2),
        ancilla: QubitId(4),
        phases: p.phases,
        table: &config.table,
    };
    let mut source = ForcedOutcomes::named([("cr.P1", 1), ("cr.P2", 1), ("cr.dressed", 0)]);
    let mut traj = Trajectory::new(cr_register(p)?);
    if id == EquationId::CrOutput {
        block.run(&mut traj, &mut source)?;
        return Ok(traj.state);
    }
    block.prepare_ancilla(&mut traj)?;
    if id == EquationId::CrAncilla {
        return Ok(traj.state);
    }
    block.first_parity(&mut traj, &mut source)?;
    if id == EquationId::CrFirstParity {
        return Ok(traj.state);
    }
    block.ancilla_hadamard(&mut traj)?;
    if id == EquationId::CrAncillaHadamard {
        return Ok(traj.state);
    }
    block.second_parity(&mut traj, &mut source)?;
    if id == EquationId::CrSecondParity {
        return Ok(traj.state);
    }
    block.dressed(&mut traj, &mut source)?;
    block.discard_ancilla(&mut traj)?;
    Ok(traj.state)
}

/// The closed-form state after a C-R stage.
fn cr_expected(p: &EquationParams, id: EquationId) -> Result<PureState> {
    let (a, b) = (p.ab.alpha, p.ab.beta);
    let (t, tp) = (p.phases.phi_t, p.phases.phi_tp);
    let (n, items) = match id {
        EquationId::CrOutput => (4, vec![("0101", a), ("0110", a), ("1001", b), ("1010", -b)]),
        EquationId::CrAncilla => (
            5,
            vec![
                ("01010", a),
                ("01011", a * e(t)),
                ("01100", a),
                ("01101", a * e(t)),
                ("10010", b),
                ("10011", b * e(t)),
                ("10100", b),
                ("10101", b * e(t)),
            ],
        ),
        EquationId::CrFirstParity => (
            5,
            vec![
                ("01010", a),
                ("01100", a),
                ("10011", b * e(t)),
                ("10101", b * e(t)),
            ],
        ),
        EquationId::CrAncillaHadamard => (
            5,
            vec![
                ("01010", a),
                ("01011", a * e(tp)),
                ("01100", a),
                ("01101", a * e(tp)),
                ("10010", b * e(t)),
                ("10011", -b * e(t + tp)),
                ("10100", b * e(t)),
                ("10101", -b * e(t + tp)),
            ],
        ),
        EquationId::CrSecondParity => (
            5,
            vec![
                ("01010", a),
                ("01101", a * e(tp)),
                ("10010", b * e(t)),
                ("10101", -b * e(t + tp)),
            ],
        ),
        EquationId::CrDressed => (
            4,
            vec![
                ("0101", a),
                ("0110", a * e(tp)),
                ("1001", b * e(t)),
                ("1010", -b * e(t + tp)),
            ],
        ),
        _ => unreachable!("not a C-R equation"),
    };
    state(n, &terms(&items))
}

fn pair(a: usize, b: usize) -> LogicalQubit {
    LogicalQubit::new(a, b).expect("distinct qubits")
}

/// `(α|01⟩ + β|10⟩) ⊗ (|01⟩ + |10⟩)/√2 ⊗ (c|01⟩ + d|10⟩)`.
fn cphase_register(p: &EquationParams) -> Result<PureState> {
    let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    let anc = encode_logical(&LogicalAmplitudes::new(h, h)?)?;
    encode_logical(&p.ab)?
        .tensor(&anc)?
        .tensor(&encode_logical(&p.cd)?)
}

/// Six-qubit state from `1256` coefficients `[|0101⟩, |0110⟩, |1001⟩,
/// |1010⟩]` with pair `34` fixed to `r34`.
fn with_readout(coefficients: [C64; 4], r34: &str) -> Result<PureState> {
    let kets = ["0101", "0110", "1001", "1010"];
    let items: Terms = kets
        .iter()
        .zip(coefficients)
        .map(|(k, v)| (format!("{}{}{}", &k[..2], r34, &k[2..]), v))
        .collect();
    state(6, &items)
}

fn cphase_checks(
    p: &EquationParams,
    config: &GateConfig,
    id: EquationId,
) -> Result<Vec<EquationReport>> {
    let stages = CPhaseStages {
        pair_a: pair(0, 1),
        anc_pair: pair(2, 3),
        pair_b: pair(4, 5),
        config,
    };
    let (a, b, c, d) = (p.ab.alpha, p.ab.beta, p.cd.alpha, p.cd.beta);
    let initial = cphase_register(p)?;
    stages.validate(&initial)?;
    let mut reports = Vec::new();
    match id {
        EquationId::CPhaseEntangle => {
            let expected =
                state(4, &terms(&[("0101", a), ("1010", b)]))?.tensor(&encode_logical(&p.cd)?)?;
            for forced in [1, 0] {
                let mut source = ForcedOutcomes::named([("P13", forced)]);
                let mut traj = Trajectory::new(initial.clone());
                stages.entangle(&mut traj, &mut source)?;
                reports.push(report(
                    "cphase.entangle",
                    &format!("P13={forced}"),
                    &expected,
                    &traj.state,
                )?);
            }
            // The antiparallel branch before the flips.
            let unflipped =
                state(4, &terms(&[("0110", a), ("1001", b)]))?.tensor(&encode_logical(&p.cd)?)?;
            let mut traj = Trajectory::new(initial);
            traj.parity(
                "P13",
                stages.pair_a.first(),
                stages.anc_pair.first(),
                &mut ForcedOutcomes::sequence([0]),
            )?;
            reports.push(report(
                "cphase.entangle",
                "P13=0,unflipped",
                &unflipped,
                &traj.state,
            )?);
        }
        EquationId::CPhaseOdd | EquationId::CPhaseEven => {
            let p46 = if id == EquationId::CPhaseOdd { 1 } else { 0 };
            let lines: [(&str, usize, [C64; 4]); 2] = if p46 == 1 {
                [
                    ("01", 1, [a * c, a * d, b * c, -b * d]),
                    ("10", 2, [a * c, -a * d, b * c, b * d]),
                ]
            } else {
                [
                    ("01", 1, [a * c, a * d, -b * c, b * d]),
                    ("10", 2, [-a * c, a * d, b * c, b * d]),
                ]
            };
            for (label, index, coefficients) in lines {
                let mut source =
                    ForcedOutcomes::named([("P13", 1), ("P46", p46), ("readout34", index)])
                        .with_fallback(Fallback::FirstPossible);
                let mut traj = Trajectory::new(initial.clone());
                stages.entangle(&mut traj, &mut source)?;
                stages.hadamard(&mut traj, "H1", &mut source)?;
                stages.parity_b(&mut traj, &mut source)?;
                stages.hadamard(&mut traj, "H2", &mut source)?;
                stages.readout(&mut traj, &mut source)?;
                let expected = with_readout(coefficients, label)?;
                reports.push(report(
                    id.name(),
                    &format!("P46={p46},r34={label}"),
                    &expected,
                    &traj.state,
                )?);
            }
        }
        _ => unreachable!("not a controlled-phase equation"),
    }
    Ok(reports)
}

/// Checks one equation; multi-branch equations give one report per branch.
pub fn verify_equation(
    id: EquationId,
    params: &EquationParams,
    config: &GateConfig,
) -> Result<Vec<EquationReport>> {
    let config = GateConfig {
        phases: params.phases,
        ..config.clone()
    };
    match id {
        EquationId::CPhaseEntangle | EquationId::CPhaseOdd | EquationId::CPhaseEven => {
            cphase_checks(params, &config, id)
        }
        _ => {
            let actual = cr_stage(params, &config, id)?;
            let branch = match id {
                EquationId::CrAncilla => "",
                EquationId::CrFirstParity => "P1=1",
                EquationId::CrAncillaHadamard => "P1=1",
                EquationId::CrSecondParity => "P1=1,P2=1",
                _ => "P1=1,P2=1,+",
            };
            Ok(vec![report(
                id.name(),
                branch,
                &cr_expected(params, id)?,
                &actual,
            )?])
        }
    }
}

fn wrap(angle: f64) -> f64 {
    let r = angle % TAU;
    if r < 0.0 {
        r + TAU
    } else {
        r
    }
}

/// Runs the C-R block through one `(P₁, P₂, dressed)` branch with its table
/// corrections and compares with the controlled-phase output. A failing
/// cell reports the correction angles that would have closed it.
pub fn verify_table_cell(
    p1: ParityOutcome,
    p2: ParityOutcome,
    minus: bool,
    params: &EquationParams,
    config: &GateConfig,
) -> Result<EquationReport> {
    let block = CrBlock {
        control: QubitId(0),
        target: QubitId(2),
        ancilla: QubitId(4),
        phases: params.phases,
        table: &config.table,
    };
    let outcomes = [p1 as usize, p2 as usize, usize::from(minus)];
    let branch = format!(
        "P1={},P2={},{}",
        outcomes[0],
        outcomes[1],
        if minus { "-" } else { "+" }
    );

    let mut traj = Trajectory::new(cr_register(params)?);
    block.run(&mut traj, &mut ForcedOutcomes::sequence(outcomes))?;
    let expected = cr_expected(params, EquationId::CrOutput)?;
    let mut r = report("cr.table", &branch, &expected, &traj.state)?;
    if r.passed {
        return Ok(r);
    }

    // Phases left before the table step, relative to the |0101⟩ term.
    let mut raw = Trajectory::new(cr_register(params)?);
    let mut source = ForcedOutcomes::sequence(outcomes);
    block.prepare_ancilla(&mut raw)?;
    block.first_parity(&mut raw, &mut source)?;
    block.ancilla_hadamard(&mut raw)?;
    block.second_parity(&mut raw, &mut source)?;
    block.dressed(&mut raw, &mut source)?;
    block.discard_ancilla(&mut raw)?;
    let (a, b) = (params.ab.alpha, params.ab.beta);
    if a.norm() > 1e-6 && b.norm() > 1e-6 {
        let r00 = raw.state.amplitude("0101")? / a;
        let r01 = raw.state.amplitude("0110")? / a;
        let r10 = raw.state.amplitude("1001")? / b;
        let (table_control, table_target) = config.table.angles(p1, p2, params.phases);
        r.derived_correction = Some(DerivedCorrection {
            control: wrap(-(r10 / r00).arg()),
            target: wrap(-(r01 / r00).arg()),
            table_control: wrap(table_control),
            table_target: wrap(table_target),
        });
    }
    Ok(r)
}

/// Every table cell and dressed outcome for one parameter draw.
pub fn verify_table(params: &EquationParams, config: &GateConfig) -> Result<Vec<EquationReport>> {
    let mut reports = Vec::with_capacity(8);
    for p1 in [ParityOutcome::Antiparallel, ParityOutcome::Aligned] {
        for p2 in [ParityOutcome::Antiparallel, ParityOutcome::Aligned] {
            for minus in [false, true] {
                reports.push(verify_table_cell(p1, p2, minus, params, config)?);
            }
        }
    }
    Ok(reports)
}

/// Parameters of draw `draw` in the suite seeded by `seed`. `phases` pins
/// the phases when given.
pub fn suite_params(seed: u64, draw: u64, phases: Option<PhaseParams>) -> EquationParams {
    let mut params = EquationParams::random(&mut sample_rng(seed, draw));
    if let Some(phases) = phases {
        params.phases = phases;
    }
    params
}

/// Every equation and table cell for one parameter set.
pub fn verify_all(params: &EquationParams, config: &GateConfig) -> Result<Vec<EquationReport>> {
    let mut reports = Vec::new();
    for id in EquationId::ALL {
        reports.extend(verify_equation(id, params, config)?);
    }
    reports.extend(verify_table(params, config)?);
    Ok(reports)
}

/// [`verify_all`] over `draws` parameter sets.
pub fn verification_suite(
    draws: usize,
    seed: u64,
    config: &GateConfig,
    phases: Option<PhaseParams>,
) -> Result<Vec<EquationReport>> {
    let mut reports = Vec::new();
    for draw in 0..draws as u64 {
        reports.extend(verify_all(&suite_params(seed, draw, phases), config)?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{HadamardMode, PhaseRule};
    use core::f64::consts::PI;

    fn params(seed: u64) -> EquationParams {
        EquationParams::random(&mut sample_rng(seed, 0))
    }

    #[test]
    fn every_equation_holds_on_a_random_draw() {
        let config = GateConfig::default();
        for id in EquationId::ALL {
            for r in verify_equation(id, &params(17), &config).unwrap() {
                assert!(r.passed, "{} {} fidelity {}", r.check, r.branch, r.fidelity);
            }
        }
    }

    #[test]
    fn eq5_and_eq6_report_both_lines() {
        let config = GateConfig::default();
        assert_eq!(
            verify_equation(EquationId::CPhaseOdd, &params(1), &config)
                .unwrap()
                .len(),
            2
        );
        assert_eq!(
            verify_equation(EquationId::CPhaseEven, &params(1), &config)
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn transfer_mode_reproduces_the_readout_lines() {
        let config = GateConfig {
            hadamard_mode: HadamardMode::Transfer,
            ..GateConfig::default()
        };
        for id in [EquationId::CPhaseOdd, EquationId::CPhaseEven] {
            for r in verify_equation(id, &params(3), &config).unwrap() {
                assert!(r.passed, "{} {} fidelity {}", r.check, r.branch, r.fidelity);
            }
        }
    }

    #[test]
    fn a5_fails_when_phases_are_ignored() {
        // Negative control: the dressed-stage phases are not optional.
        let mut p = params(5);
        let expected = cr_expected(&p, EquationId::CrDressed).unwrap();
        p.phases = PhaseParams::new(p.phases.phi_t + 0.5, p.phases.phi_tp).unwrap();
        let actual = cr_stage(&p, &GateConfig::default(), EquationId::CrDressed).unwrap();
        assert!(fidelity_up_to_global_phase(&expected, &actual).unwrap() < 0.999);
    }

    #[test]
    fn corrupted_cell_is_reported_with_derived_angles() {
        let mut config = GateConfig::default();
        let (p1, p2) = (ParityOutcome::Aligned, ParityOutcome::Antiparallel);
        let mut cell = config.table.cell(p1, p2);
        cell.control = PhaseRule::new(cell.control.sign, cell.control.offset + PI);
        config.table.set_cell(p1, p2, cell);
        let p = params(9);
        let reports = verify_table(&p, &config).unwrap();
        for r in &reports {
            let bad = r.branch.starts_with("P1=1,P2=0");
            assert_eq!(!r.passed, bad, "{}", r.branch);
            if bad {
                let d = r.derived_correction.unwrap();
                let diff = wrap(d.table_control - d.control);
                assert!((diff - PI).abs() < 1e-9, "{d:?}");
                assert!(
                    wrap(d.table_target - d.target).min(TAU - wrap(d.table_target - d.target))
                        < 1e-9
                );
            }
        }
    }

    #[test]
    fn default_table_matches_derived_angles_everywhere() {
        let p = params(21);
        for r in verify_table(&p, &GateConfig::default()).unwrap() {
            assert!(r.passed && r.derived_correction.is_none(), "{}", r.branch);
        }
    }

    #[test]
    fn zero_phase_suite_passes() {
        let reports =
            verification_suite(2, 4, &GateConfig::default(), Some(PhaseParams::zero())).unwrap();
        assert!(reports.iter().all(|r| r.passed));
        assert_eq!(reports.len(), 2 * (1 + 3 + 2 + 2 + 5 + 8));
    }

    #[test]
    fn ids_parse() {
        assert_eq!(
            "CR.Hadamard".parse::<EquationId>().unwrap(),
            EquationId::CrAncillaHadamard
        );
        assert!("cr.bogus".parse::<EquationId>().is_err());
    }
}
