//! The four verbs. Each builds a typed report; rendering and exit codes
//! live in the crate root.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::time::{SystemTime, UNIX_EPOCH};

use dfs_core::noise::{
    apply_collective_dephasing, apply_error_operator, sample_rng, AngleDistribution,
    CollectiveDephasing, Encoding, ErrorOperatorSpec, PairPauli, SampleStats,
};
use dfs_core::oracle::{
    enumerate_branches, suite_params, verify_all, EquationParams, EquationReport,
};
use dfs_core::protocols::{AppliedCorrection, Correction, MeasurementRecord, ProtocolResult};
use dfs_core::{
    dfs_weight, fidelity_up_to_global_phase, GateConfig, HadamardMode, LogicalAmplitudes,
    LogicalQubit, PhaseParams, ProtocolKind, ProtocolSpec, PureState, QubitId, SampledOutcomes,
    C64,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{NoiseSpec, Settings};
use crate::error::{CliError, Result};
use crate::report::{complex_list, format_f64};

/// Fidelity a branch or trajectory must reach to count as correct.
pub const FIDELITY_TOL: f64 = 1e-10;
/// Allowed deviation of the branch probability sum from one.
pub const PROBABILITY_SUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasesOut {
    pub phi_t: f64,
    pub phi_tp: f64,
}

impl From<PhaseParams> for PhasesOut {
    fn from(p: PhaseParams) -> Self {
        PhasesOut {
            phi_t: p.phi_t,
            phi_tp: p.phi_tp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordOut {
    pub block: String,
    pub outcome: String,
    pub index: usize,
    pub probability: f64,
}

fn record_out(r: &MeasurementRecord) -> Vec<RecordOut> {
    r.entries
        .iter()
        .map(|e| RecordOut {
            block: e.block.clone(),
            outcome: e.outcome.clone(),
            index: e.index,
            probability: e.probability,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionOut {
    pub block: String,
    pub gate: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    pub qubit: usize,
}

fn corrections_out(c: &[AppliedCorrection]) -> Vec<CorrectionOut> {
    c.iter()
        .map(|c| {
            let (gate, angle) = match c.gate {
                Correction::PauliX => ("X", None),
                Correction::PauliZ => ("Z", None),
                Correction::Rz(theta) => ("Rz", Some(theta)),
            };
            CorrectionOut {
                block: c.block.clone(),
                gate,
                angle,
                qubit: c.target.index(),
            }
        })
        .collect()
}

fn mode_name(m: HadamardMode) -> &'static str {
    match m {
        HadamardMode::InPlace => "in-place",
        HadamardMode::Transfer => "transfer",
    }
}

fn theta_of(kind: ProtocolKind) -> Option<f64> {
    match kind {
        ProtocolKind::Rz { theta } => Some(theta),
        _ => None,
    }
}

fn timestamp(settings: &Settings) -> Option<u64> {
    settings.timestamp.then(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    })
}

/// `out` with its global phase turned to match `ideal`, and `|⟨ideal|out⟩|`.
pub fn align_to(ideal: &[C64], out: &[C64]) -> (Vec<C64>, f64) {
    let overlap: C64 = ideal.iter().zip(out).map(|(a, b)| a.conj() * b).sum();
    let fidelity = overlap.norm().min(1.0);
    let phase = if overlap.norm() > 1e-12 {
        overlap.conj() / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    (out.iter().map(|z| z * phase).collect(), fidelity)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NoiseEvent {
    Dephasing {
        distribution: &'static str,
        angle: f64,
    },
    Error {
        operator: String,
        qubits: [usize; 2],
        probability: f64,
        fired: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub protocol: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub seed: u64,
    pub phases: PhasesOut,
    pub hadamard_mode: &'static str,
    pub misreport: f64,
    pub input: Vec<[f64; 2]>,
    pub noise: Vec<NoiseEvent>,
    pub record: Vec<RecordOut>,
    pub corrections: Vec<CorrectionOut>,
    /// Output logical amplitudes, global phase aligned to `ideal`.
    pub output: Option<Vec<[f64; 2]>>,
    pub ideal: Vec<[f64; 2]>,
    pub fidelity: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

/// Noise from the config applied to the encoded input register. Streams
/// `1, 2, …` of the seed; the outcome sampler uses stream `0`.
fn apply_run_noise(state: PureState, settings: &Settings) -> Result<(PureState, Vec<NoiseEvent>)> {
    let mut state = state;
    let mut events = Vec::new();
    for (k, spec) in settings.noise.iter().enumerate() {
        let mut rng = sample_rng(settings.seed, k as u64 + 1);
        match spec {
            NoiseSpec::Dephasing { distribution } => {
                let dist = AngleDistribution::from(*distribution);
                let qubits = (0..state.num_qubits()).map(QubitId).collect();
                let (s, angle) = apply_collective_dephasing(
                    &state,
                    &CollectiveDephasing::new(qubits, dist)?,
                    &mut rng,
                )?;
                state = s;
                events.push(NoiseEvent::Dephasing {
                    distribution: dist.name(),
                    angle,
                });
            }
            NoiseSpec::Error {
                operator,
                probability,
                pair,
            } => {
                let op: PairPauli = operator.parse()?;
                let spec =
                    ErrorOperatorSpec::new(op, LogicalQubit::new(pair[0], pair[1])?, *probability)?;
                let (s, fired) = apply_error_operator(&state, &spec, &mut rng)?;
                state = s;
                events.push(NoiseEvent::Error {
                    operator: op.to_string(),
                    qubits: *pair,
                    probability: *probability,
                    fired,
                });
            }
        }
    }
    Ok((state, events))
}

fn trajectory(
    spec: &ProtocolSpec,
    initial: &PureState,
    settings: &Settings,
) -> dfs_core::Result<ProtocolResult> {
    let mut source = SampledOutcomes::seeded(settings.seed).with_misreport(settings.misreport)?;
    spec.execute(initial, &mut source)
}

/// One sampled trajectory. Simulation failures (for instance leakage
/// caused by injected noise) end up in the report, not in the `Err` arm.
pub fn run_report(settings: &Settings) -> Result<RunReport> {
    let spec = settings.protocol_spec()?;
    let input = settings.logical_input(&spec)?;
    let ideal = spec.ideal_output(&input)?;
    let (initial, noise) = apply_run_noise(spec.initial_state(&input)?, settings)?;

    let mut report = RunReport {
        command: "run",
        protocol: spec.kind.name(),
        theta: theta_of(spec.kind),
        seed: settings.seed,
        phases: spec.config.phases.into(),
        hadamard_mode: mode_name(spec.config.hadamard_mode),
        misreport: settings.misreport,
        input: complex_list(&input),
        noise,
        record: Vec::new(),
        corrections: Vec::new(),
        output: None,
        ideal: complex_list(&ideal),
        fidelity: None,
        passed: false,
        error: None,
        timestamp: timestamp(settings),
    };
    let outcome = trajectory(&spec, &initial, settings).and_then(|r| {
        report.record = record_out(&r.record);
        report.corrections = corrections_out(&r.corrections);
        spec.output_amplitudes(&r)
    });
    match outcome {
        Ok(out) => {
            let (aligned, fidelity) = align_to(&ideal, &out);
            report.output = Some(complex_list(&aligned));
            report.fidelity = Some(fidelity);
            report.passed = fidelity >= 1.0 - FIDELITY_TOL;
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchOut {
    pub outcomes: Vec<RecordOut>,
    pub probability: f64,
    pub fidelity: f64,
    pub output: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerateReport {
    pub command: &'static str,
    pub protocol: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub phases: PhasesOut,
    pub hadamard_mode: &'static str,
    pub input: Vec<[f64; 2]>,
    pub ideal: Vec<[f64; 2]>,
    pub branch_count: usize,
    pub total_probability: f64,
    pub probability_sum_ok: bool,
    pub min_fidelity: f64,
    pub passed: bool,
    pub branches: Vec<BranchOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

pub fn enumerate_report(settings: &Settings) -> Result<EnumerateReport> {
    let spec = settings.protocol_spec()?;
    let input = settings.logical_input(&spec)?;
    let ideal = spec.ideal_output(&input)?;
    let tree = enumerate_branches(&spec, &spec.initial_state(&input)?)?;
    let branches = tree
        .branches
        .iter()
        .map(|b| {
            let (aligned, fidelity) = align_to(&ideal, &spec.output_amplitudes(&b.result)?);
            Ok(BranchOut {
                outcomes: record_out(b.record()),
                probability: b.probability,
                fidelity,
                output: complex_list(&aligned),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_probability = tree.total_probability();
    let probability_sum_ok = (total_probability - 1.0).abs() <= PROBABILITY_SUM_TOL;
    let min_fidelity = branches.iter().map(|b| b.fidelity).fold(1.0, f64::min);
    Ok(EnumerateReport {
        command: "enumerate",
        protocol: spec.kind.name(),
        theta: theta_of(spec.kind),
        phases: spec.config.phases.into(),
        hadamard_mode: mode_name(spec.config.hadamard_mode),
        input: complex_list(&input),
        ideal: complex_list(&ideal),
        branch_count: branches.len(),
        total_probability,
        probability_sum_ok,
        min_fidelity,
        passed: probability_sum_ok && min_fidelity >= 1.0 - FIDELITY_TOL,
        branches,
        timestamp: timestamp(settings),
    })
}

pub const ENUMERATE_CSV_HEADER: [&str; 4] = ["branch", "outcomes", "probability", "fidelity"];

pub fn enumerate_rows(report: &EnumerateReport) -> Vec<Vec<String>> {
    report
        .branches
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let outcomes: Vec<String> = b
                .outcomes
                .iter()
                .map(|o| format!("{}:{}", o.block, o.outcome))
                .collect();
            vec![
                i.to_string(),
                outcomes.join(";"),
                format_f64(b.probability),
                format_f64(b.fidelity),
            ]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsOut {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub c: [f64; 2],
    pub d: [f64; 2],
    pub phases: PhasesOut,
}

impl From<&EquationParams> for ParamsOut {
    fn from(p: &EquationParams) -> Self {
        let c = |z: C64| [z.re, z.im];
        ParamsOut {
            alpha: c(p.ab.alpha),
            beta: c(p.ab.beta),
            c: c(p.cd.alpha),
            d: c(p.cd.beta),
            phases: p.phases.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedOut {
    pub control: f64,
    pub target: f64,
    pub table_control: f64,
    pub table_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureOut {
    pub draw: u64,
    pub check: String,
    pub branch: String,
    pub fidelity: f64,
    pub params: ParamsOut,
    pub expected: Vec<[f64; 2]>,
    pub actual: Vec<[f64; 2]>,
    /// For a failing correction-table cell: the `R_z` angles that would
    /// close it, next to the table's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derived_correction: Option<DerivedOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub check: String,
    pub branch: String,
    pub runs: usize,
    pub failures: usize,
    pub min_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub seed: u64,
    pub draws: usize,
    /// `None`: phases drawn at random per draw.
    pub phases: Option<PhasesOut>,
    pub hadamard_mode: &'static str,
    pub corrupted_cell: Option<[u8; 2]>,
    pub checks_run: usize,
    pub checks_failed: usize,
    pub passed: bool,
    pub summary: Vec<CheckSummary>,
    pub failures: Vec<FailureOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

pub fn verify_report(settings: &Settings) -> Result<VerifyReport> {
    let config: &GateConfig = &settings.gate;
    let draws: Vec<(u64, EquationParams, Vec<EquationReport>)> = (0..settings.samples as u64)
        .into_par_iter()
        .map(|draw| {
            let params = suite_params(settings.seed, draw, settings.phases);
            verify_all(&params, config).map(|r| (draw, params, r))
        })
        .collect::<dfs_core::Result<_>>()?;

    let mut summary: Vec<CheckSummary> = Vec::new();
    let mut index: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut failures = Vec::new();
    for (draw, params, reports) in &draws {
        for r in reports {
            let i = *index
                .entry((r.check.clone(), r.branch.clone()))
                .or_insert_with(|| {
                    summary.push(CheckSummary {
                        check: r.check.clone(),
                        branch: r.branch.clone(),
                        runs: 0,
                        failures: 0,
                        min_fidelity: 1.0,
                    });
                    summary.len() - 1
                });
            let s = &mut summary[i];
            s.runs += 1;
            s.min_fidelity = s.min_fidelity.min(r.fidelity);
            if !r.passed {
                s.failures += 1;
                failures.push(FailureOut {
                    draw: *draw,
                    check: r.check.clone(),
                    branch: r.branch.clone(),
                    fidelity: r.fidelity,
                    params: params.into(),
                    expected: complex_list(&r.expected),
                    actual: complex_list(&r.actual),
                    derived_correction: r.derived_correction.map(|d| DerivedOut {
                        control: d.control,
                        target: d.target,
                        table_control: d.table_control,
                        table_target: d.table_target,
                    }),
                });
            }
        }
    }
    let checks_run = summary.iter().map(|s| s.runs).sum();
    Ok(VerifyReport {
        command: "verify",
        seed: settings.seed,
        draws: settings.samples,
        phases: settings.phases.map(Into::into),
        hadamard_mode: mode_name(config.hadamard_mode),
        corrupted_cell: settings.corrupted_cell.map(|(a, b)| [a, b]),
        checks_run,
        checks_failed: failures.len(),
        passed: failures.is_empty(),
        summary,
        failures,
        timestamp: timestamp(settings),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub encoding: &'static str,
    pub distribution: String,
    /// Angle for `fixed`, `2π` for `uniform`, σ for `gaussian`, the firing
    /// probability for pair errors.
    pub parameter: f64,
    pub mean_fidelity: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Mean weight left in the protected subspace; `None` for bare qubits.
    pub mean_dfs_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub command: &'static str,
    pub seed: u64,
    pub samples: usize,
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub rows: Vec<BenchRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `(fidelity, dfs weight)` per sample, in sample order.
fn sample_rows(
    samples: usize,
    f: impl Fn(u64) -> dfs_core::Result<(f64, Option<f64>)> + Send + Sync,
) -> Result<(SampleStats, Option<f64>)> {
    let values: Vec<(f64, Option<f64>)> = (0..samples as u64)
        .into_par_iter()
        .map(f)
        .collect::<dfs_core::Result<_>>()?;
    let fidelities: Vec<f64> = values.iter().map(|v| v.0).collect();
    let weights: Option<Vec<f64>> = values.iter().map(|v| v.1).collect();
    Ok((
        SampleStats::from_values(&fidelities)?,
        weights.as_deref().map(mean),
    ))
}

pub fn bench_report(settings: &Settings) -> Result<BenchReport> {
    let s = FRAC_1_SQRT_2;
    let [alpha, beta] = settings.first_qubit([C64::new(s, 0.0), C64::new(s, 0.0)])?;
    let amps = LogicalAmplitudes::new(alpha, beta)
        .or_else(|_| LogicalAmplitudes::normalized(alpha, beta))?;
    let pair = LogicalQubit::new(0, 1)?;
    let seed = settings.seed;
    let noise = if settings.noise.is_empty() {
        vec![NoiseSpec::Dephasing {
            distribution: crate::config::DistributionSpec::Uniform,
        }]
    } else {
        settings.noise.clone()
    };

    let mut rows = Vec::new();
    for spec in &noise {
        match spec {
            NoiseSpec::Dephasing { distribution } => {
                let dist = AngleDistribution::from(*distribution);
                let parameter = match dist {
                    AngleDistribution::Fixed(v) => v,
                    AngleDistribution::Uniform => TAU,
                    AngleDistribution::Gaussian { sigma, .. } => sigma,
                };
                for encoding in [Encoding::Dfs, Encoding::Bare] {
                    let clean = encoding.encode(&amps)?;
                    let qubits: Vec<QubitId> = (0..clean.num_qubits()).map(QubitId).collect();
                    let dephasing = CollectiveDephasing::new(qubits, dist)?;
                    let (stats, weight) = sample_rows(settings.samples, |i| {
                        let (noisy, _) = apply_collective_dephasing(
                            &clean,
                            &dephasing,
                            &mut sample_rng(seed, i),
                        )?;
                        let weight = match encoding {
                            Encoding::Dfs => Some(dfs_weight(&noisy, &[pair])?),
                            Encoding::Bare => None,
                        };
                        Ok((fidelity_up_to_global_phase(&noisy, &clean)?, weight))
                    })?;
                    rows.push(BenchRow {
                        encoding: encoding.name(),
                        distribution: dist.name().into(),
                        parameter,
                        mean_fidelity: stats.mean,
                        stderr: stats.stderr,
                        samples: stats.samples,
                        mean_dfs_weight: weight,
                    });
                }
            }
            NoiseSpec::Error {
                operator,
                probability,
                ..
            } => {
                let op: PairPauli = operator.parse()?;
                let error = ErrorOperatorSpec::new(op, pair, *probability)?;
                let clean = Encoding::Dfs.encode(&amps)?;
                let (stats, weight) = sample_rows(settings.samples, |i| {
                    let (noisy, _) =
                        apply_error_operator(&clean, &error, &mut sample_rng(seed, i))?;
                    Ok((
                        fidelity_up_to_global_phase(&noisy, &clean)?,
                        Some(dfs_weight(&noisy, &[pair])?),
                    ))
                })?;
                rows.push(BenchRow {
                    encoding: Encoding::Dfs.name(),
                    distribution: format!("error-{op}"),
                    parameter: *probability,
                    mean_fidelity: stats.mean,
                    stderr: stats.stderr,
                    samples: stats.samples,
                    mean_dfs_weight: weight,
                });
            }
        }
    }
    Ok(BenchReport {
        command: "noise-bench",
        seed,
        samples: settings.samples,
        alpha: [amps.alpha.re, amps.alpha.im],
        beta: [amps.beta.re, amps.beta.im],
        rows,
        timestamp: timestamp(settings),
    })
}

pub const BENCH_CSV_HEADER: [&str; 7] = [
    "encoding",
    "distribution",
    "parameter",
    "mean_fidelity",
    "stderr",
    "samples",
    "mean_dfs_weight",
];

pub fn bench_rows(report: &BenchReport) -> Vec<Vec<String>> {
    report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.encoding.to_string(),
                r.distribution.clone(),
                format_f64(r.parameter),
                format_f64(r.mean_fidelity),
                format_f64(r.stderr),
                r.samples.to_string(),
                r.mean_dfs_weight.map(format_f64).unwrap_or_default(),
            ]
        })
        .collect()
}

/// Worker pool sized by `DFS_SIM_THREADS` (unset or `0`: one per core).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var("DFS_SIM_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::Config(format!(
                "DFS_SIM_THREADS must be a non-negative integer, got {v:?}"
            ))
        })?,
        Err(std::env::VarError::NotPresent) => 0,
        Err(e) => return Err(CliError::Config(format!("DFS_SIM_THREADS: {e}"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))
}
