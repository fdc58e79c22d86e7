//! JSON config files, command-line flags, and their merge.
//!
//! Precedence is flag > file > built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dfs_core::blocks::ParityOutcome;
use dfs_core::noise::{AngleDistribution, PairPauli};
use dfs_core::protocols::{CellRule, PhaseRule};
use dfs_core::{
    GateConfig, HadamardMode, LogicalQubit, PhaseParams, ProtocolKind, ProtocolSpec, C64,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Squared-norm tolerance for user-supplied amplitudes.
pub const INPUT_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "dfs-sim",
    version,
    about = "Measurement-based logical gates on decoherence-free qubit pairs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Run one sampled trajectory of a protocol.
    Run(Flags),
    /// Enumerate every measurement branch of a protocol.
    Enumerate(Flags),
    /// Check the protocols' intermediate states and the correction table.
    Verify(Flags),
    /// Mean fidelity under dephasing and pair errors, DFS vs bare.
    NoiseBench(Flags),
}

impl Verb {
    pub fn split(self) -> (Command, Flags) {
        match self {
            Verb::Run(f) => (Command::Run, f),
            Verb::Enumerate(f) => (Command::Enumerate, f),
            Verb::Verify(f) => (Command::Verify, f),
            Verb::NoiseBench(f) => (Command::NoiseBench, f),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// rz | hadamard | cphase | cr-block
    #[arg(long)]
    pub protocol: Option<String>,
    /// Rotation angle for `rz`.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Complex amplitude as "re,im".
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long = "c", allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long = "d", allow_hyphen_values = true)]
    pub d: Option<String>,
    /// Free-evolution phases as "t,tp".
    #[arg(long, allow_hyphen_values = true)]
    pub phases: Option<String>,
    #[arg(long, value_enum)]
    pub hadamard_mode: Option<ModeArg>,
    /// Noise specs as JSON (one object or an array).
    #[arg(long)]
    pub noise: Option<String>,
    /// Probability that a charge detector misreports (run only).
    #[arg(long)]
    pub misreport: Option<f64>,
    /// Test mode: corrupt correction-table cell "p1,p2".
    #[arg(long)]
    pub corrupt_table: Option<String>,
    /// Add a wall-clock timestamp to the report.
    #[arg(long)]
    pub timestamp: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Run,
    Enumerate,
    Verify,
    NoiseBench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    InPlace,
    Transfer,
}

impl From<ModeArg> for HadamardMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::InPlace => HadamardMode::InPlace,
            ModeArg::Transfer => HadamardMode::Transfer,
        }
    }
}

/// A complex number in a config file: `0.5`, `[0.5, -0.1]` or `"0.5,-0.1"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
    Text(String),
}

impl ComplexValue {
    fn resolve(&self, what: &str) -> Result<C64> {
        match self {
            ComplexValue::Real(re) => Ok(C64::new(*re, 0.0)),
            ComplexValue::Pair([re, im]) => Ok(C64::new(*re, *im)),
            ComplexValue::Text(s) => parse_complex(s, what),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    Fixed(f64),
    Uniform,
    Gaussian { mean: f64, sigma: f64 },
}

impl From<DistributionSpec> for AngleDistribution {
    fn from(d: DistributionSpec) -> Self {
        match d {
            DistributionSpec::Fixed(v) => AngleDistribution::Fixed(v),
            DistributionSpec::Uniform => AngleDistribution::Uniform,
            DistributionSpec::Gaussian { mean, sigma } => {
                AngleDistribution::Gaussian { mean, sigma }
            }
        }
    }
}

fn default_pair() -> [usize; 2] {
    [0, 1]
}

/// One noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NoiseSpec {
    /// Collective dephasing of every qubit in the register.
    Dephasing { distribution: DistributionSpec },
    /// A pair Pauli such as `"XI"` that fires with `probability`.
    Error {
        operator: String,
        probability: f64,
        /// Qubits the operator acts on (run only).
        #[serde(default = "default_pair")]
        pair: [usize; 2],
    },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Dephasing { distribution } => {
                AngleDistribution::from(*distribution).validate()?
            }
            NoiseSpec::Error {
                operator,
                probability,
                pair,
            } => {
                operator.parse::<PairPauli>()?;
                if !(0.0..=1.0).contains(probability) {
                    return Err(CliError::Config(format!(
                        "error probability {probability} outside [0, 1]"
                    )));
                }
                LogicalQubit::new(pair[0], pair[1])?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    #[default]
    None,
    One(NoiseSpec),
    Many(Vec<NoiseSpec>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<NoiseSpec> {
        match self {
            OneOrMany::None => Vec::new(),
            OneOrMany::One(n) => vec![n],
            OneOrMany::Many(v) => v,
        }
    }
}

/// A config file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub protocol: Option<String>,
    pub theta: Option<f64>,
    pub alpha: Option<ComplexValue>,
    pub beta: Option<ComplexValue>,
    pub c: Option<ComplexValue>,
    pub d: Option<ComplexValue>,
    /// Full logical input vector; overrides the product of `alpha/beta`
    /// and `c/d`.
    pub amplitudes: Option<Vec<ComplexValue>>,
    pub phases: Option<[f64; 2]>,
    pub hadamard_mode: Option<ModeArg>,
    #[serde(default)]
    noise: OneOrMany,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub misreport: Option<f64>,
    pub corrupt_table: Option<[u8; 2]>,
    pub timestamp: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CliError::ParseConfig {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub command: Command,
    pub protocol: Option<ProtocolKind>,
    pub alpha: Option<C64>,
    pub beta: Option<C64>,
    pub c: Option<C64>,
    pub d: Option<C64>,
    pub amplitudes: Option<Vec<C64>>,
    /// Phases given explicitly; `verify` draws random ones otherwise.
    pub phases: Option<PhaseParams>,
    pub gate: GateConfig,
    pub corrupted_cell: Option<(u8, u8)>,
    pub noise: Vec<NoiseSpec>,
    pub seed: u64,
    pub samples: usize,
    pub misreport: f64,
    pub timestamp: bool,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

pub fn parse_complex(s: &str, what: &str) -> Result<C64> {
    let bad = || CliError::Config(format!("{what}: expected \"re,im\" or \"re\", got {s:?}"));
    let mut parts = s.split(',').map(|p| p.trim().parse::<f64>());
    let z = match (parts.next(), parts.next(), parts.next()) {
        (Some(Ok(re)), None, None) => C64::new(re, 0.0),
        (Some(Ok(re)), Some(Ok(im)), None) => C64::new(re, im),
        _ => return Err(bad()),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(bad());
    }
    Ok(z)
}

fn parse_pair<T: std::str::FromStr>(s: &str, what: &str) -> Result<[T; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok([a, b]),
            _ => Err(CliError::Config(format!("{what}: cannot parse {s:?}"))),
        },
        _ => Err(CliError::Config(format!(
            "{what}: expected two comma-separated values, got {s:?}"
        ))),
    }
}

fn parity(bit: u8) -> Result<ParityOutcome> {
    match bit {
        0 => Ok(ParityOutcome::Antiparallel),
        1 => Ok(ParityOutcome::Aligned),
        _ => Err(CliError::Config(format!(
            "table cell index {bit} is not 0 or 1"
        ))),
    }
}

fn complex_opt(
    flag: &Option<String>,
    file: &Option<ComplexValue>,
    what: &str,
) -> Result<Option<C64>> {
    match (flag, file) {
        (Some(s), _) => parse_complex(s, what).map(Some),
        (None, Some(v)) => v.resolve(what).map(Some),
        (None, None) => Ok(None),
    }
}

impl Settings {
    /// Merges `flags` over the config file they name.
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::merge(command, flags, file)
    }

    /// Core validation errors raised while merging count as config errors.
    pub fn merge(command: Command, flags: &Flags, file: FileConfig) -> Result<Self> {
        Self::merge_inner(command, flags, file).map_err(|e| match e {
            CliError::Sim(s) => CliError::Config(s.to_string()),
            e => e,
        })
    }

    fn merge_inner(command: Command, flags: &Flags, file: FileConfig) -> Result<Self> {
        if let Some(c) = file.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "config file is for {c:?}, but the {command:?} command was invoked"
                )));
            }
        }

        let protocol = match flags.protocol.as_ref().or(file.protocol.as_ref()) {
            Some(name) => {
                let kind = name.parse::<ProtocolKind>()?;
                Some(match kind {
                    ProtocolKind::Rz { .. } => {
                        let theta = flags.theta.or(file.theta).ok_or_else(|| {
                            CliError::Config("protocol rz needs a rotation angle (--theta)".into())
                        })?;
                        if !theta.is_finite() {
                            return Err(CliError::Config(format!("theta {theta} is not finite")));
                        }
                        ProtocolKind::Rz { theta }
                    }
                    other => other,
                })
            }
            None => None,
        };

        let phases = match (&flags.phases, file.phases) {
            (Some(s), _) => Some(parse_pair::<f64>(s, "--phases")?),
            (None, Some(p)) => Some(p),
            (None, None) => None,
        }
        .map(|[t, tp]| PhaseParams::new(t, tp))
        .transpose()?;

        let mut gate = GateConfig::with_phases(phases.unwrap_or_else(PhaseParams::zero));
        if let Some(mode) = flags.hadamard_mode.or(file.hadamard_mode) {
            gate.hadamard_mode = mode.into();
        }
        let corrupted_cell = match (&flags.corrupt_table, file.corrupt_table) {
            (Some(s), _) => Some(parse_pair::<u8>(s, "--corrupt-table")?),
            (None, Some(c)) => Some(c),
            (None, None) => None,
        }
        .map(|[p1, p2]| -> Result<(u8, u8)> {
            let (a, b) = (parity(p1)?, parity(p2)?);
            // Shift the control correction by π: a sign error in one cell.
            let cell = gate.table.cell(a, b);
            gate.table.set_cell(
                a,
                b,
                CellRule {
                    control: PhaseRule::new(
                        cell.control.sign,
                        cell.control.offset + std::f64::consts::PI,
                    ),
                    ..cell
                },
            );
            Ok((p1, p2))
        })
        .transpose()?;

        let noise = match &flags.noise {
            Some(json) => serde_json::from_str::<OneOrMany>(json)
                .map_err(|e| CliError::Config(format!("--noise: {e}")))?
                .into_vec(),
            None => file.noise.into_vec(),
        };
        for n in &noise {
            n.validate()?;
        }

        let samples = flags.samples.or(file.samples).unwrap_or(match command {
            Command::Verify => 20,
            Command::NoiseBench => 10_000,
            _ => 1,
        });
        if samples == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        let misreport = flags.misreport.or(file.misreport).unwrap_or(0.0);
        if !(0.0..=1.0).contains(&misreport) {
            return Err(CliError::Config(format!(
                "misreport probability {misreport} outside [0, 1]"
            )));
        }

        let amplitudes = file
            .amplitudes
            .as_ref()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .map(|(i, z)| z.resolve(&format!("amplitudes[{i}]")))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;

        let settings = Settings {
            command,
            protocol,
            alpha: complex_opt(&flags.alpha, &file.alpha, "alpha")?,
            beta: complex_opt(&flags.beta, &file.beta, "beta")?,
            c: complex_opt(&flags.c, &file.c, "c")?,
            d: complex_opt(&flags.d, &file.d, "d")?,
            amplitudes,
            phases,
            gate,
            corrupted_cell,
            noise,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            samples,
            misreport,
            timestamp: flags.timestamp || file.timestamp.unwrap_or(false),
            out: flags.out.clone().or(file.out),
            format: flags.format.or(file.format).unwrap_or_default(),
        };
        settings.check_format()?;
        Ok(settings)
    }

    fn check_format(&self) -> Result<()> {
        if self.format == OutputFormat::Csv
            && matches!(self.command, Command::Run | Command::Verify)
        {
            return Err(CliError::Config(
                "CSV output is only available for enumerate and noise-bench".into(),
            ));
        }
        Ok(())
    }

    pub fn protocol_spec(&self) -> Result<ProtocolSpec> {
        let kind = self.protocol.ok_or_else(|| {
            CliError::Config("no protocol given (--protocol rz|hadamard|cphase|cr-block)".into())
        })?;
        Ok(ProtocolSpec::new(kind, self.gate.clone()))
    }

    /// `(α, β)` with `default` filling in when neither is given.
    pub fn first_qubit(&self, default: [C64; 2]) -> Result<[C64; 2]> {
        let v = match (self.alpha, self.beta) {
            (None, None) => default,
            (a, b) => [a.unwrap_or_default(), b.unwrap_or_default()],
        };
        check_norm(&v, "alpha, beta")?;
        Ok(v)
    }

    fn second_qubit(&self) -> Result<[C64; 2]> {
        let v = match (self.c, self.d) {
            (None, None) => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            (c, d) => [c.unwrap_or_default(), d.unwrap_or_default()],
        };
        check_norm(&v, "c, d")?;
        Ok(v)
    }

    /// Logical input vector for `spec`: the explicit amplitude list, or
    /// `(α, β)` (⊗ `(c, d)` for two-qubit gates). Defaults to `|0_L⟩`.
    pub fn logical_input(&self, spec: &ProtocolSpec) -> Result<Vec<C64>> {
        let dim = 1usize << spec.input_qubits();
        if let Some(v) = &self.amplitudes {
            if v.len() != dim {
                return Err(CliError::Config(format!(
                    "{} takes {dim} logical amplitudes, config lists {}",
                    spec.kind,
                    v.len()
                )));
            }
            check_norm(v, "amplitudes")?;
            return Ok(v.clone());
        }
        let first = self.first_qubit([C64::new(1.0, 0.0), C64::new(0.0, 0.0)])?;
        if dim == 2 {
            if self.c.is_some() || self.d.is_some() {
                return Err(CliError::Config(format!(
                    "{} acts on one logical qubit; drop c and d",
                    spec.kind
                )));
            }
            return Ok(first.to_vec());
        }
        let second = self.second_qubit()?;
        Ok(first
            .iter()
            .flat_map(|a| second.iter().map(move |b| a * b))
            .collect())
    }
}

fn check_norm(v: &[C64], what: &str) -> Result<()> {
    let norm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > INPUT_NORM_TOL {
        return Err(CliError::Config(format!(
            "{what} are not normalized: squared norm {norm_sqr} (tolerance {INPUT_NORM_TOL:e})"
        )));
    }
    Ok(())
}
