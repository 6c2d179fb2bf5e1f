//! Command-line surface and config-file merging.

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use sacs_engine::AtomicConfiguration;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "sacs",
    version,
    about = "Coherent and parity-adapted coherent-state analysis of three-level atoms in a cavity",
    long_about = "Coherent and parity-adapted coherent-state analysis of N three-level atoms \
coupled to one cavity mode, with an exact-diagonalization oracle.\n\n\
Defaults reproduce the reference frame Ω = ω₂ = ω₃ = 1, ω₁ = 0, N = 2, V configuration, θ = π/4.\n\
Every flag can also be given in a flat `key = value` file passed with --config; flags on the \
command line override the file.\n\n\
Exit codes: 0 ok, 1 validation failure, 2 bad input, 3 numerical failure.",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Observables along a grid in μ, θ or N.
    #[command(
        long_about = "Observables along a grid in μ, θ or N for the coherent state, the even and odd \
parity-adapted states and (optionally) the exact sector ground states.\n\n\
Backs the curves of energy per atom, mean photon number, level populations, Q_M of the total \
excitation number and atomic linear entropy versus the coupling μ, and the ground-state energy \
comparison between coherent, parity-adapted and exact results."
    )]
    Sweep(SweepArgs),
    /// Locate the normal/collective boundary along one coupling direction.
    #[command(
        long_about = "Locate the normal/collective boundary along one coupling direction by bisection on \
the minimizing field amplitude ϱ_c (first μ with ϱ_c > threshold).\n\n\
Backs the phase diagram: the superradiant condition μ² > ΩΔ/4 for V in double resonance \
(analytic value printed alongside) and the numerically located boundaries for Ξ and Λ."
    )]
    PhaseBoundary(BoundaryArgs),
    /// Photon-number distribution at one coupling.
    #[command(
        long_about = "Photon-number distribution P(ν) at one coupling for the coherent state, the even and \
odd parity-adapted states and (optionally) the exact sector ground states, with an optional \
least-squares normal-curve fit.\n\n\
Backs the photon-distribution plots, including the near-normal shape at μ = 3, N = 2 \
(fitted centre ≈ 17.7, width ≈ 4.2)."
    )]
    PhotonDist(PhotonArgs),
    /// Lowest eigenvalues of the truncated Hamiltonian per parity sector.
    #[command(
        long_about = "Lowest eigenvalues of the truncated Fock-space Hamiltonian in each parity sector \
(the exact-diagonalization oracle). Without --nu-max the photon cutoff is doubled until the \
sector ground energies change by less than 1e-10.\n\n\
Backs the exact curves in the ground-state energy comparison."
    )]
    Spectrum(SpectrumArgs),
    /// Run the self-check suite.
    #[command(
        long_about = "Run the self-check suite: closed forms against the Fock-space oracle, Casimir \
identities, parity decomposition, reduced density matrices, photon normalization, Hamiltonian \
structure, rotation identity, V closed forms, exact-diagonalization bounds and the phase \
boundary. Reference closed forms that disagree with direct evaluation are reported as INFO lines \
without affecting the exit code."
    )]
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat `key = value` file mirroring the long flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output file; standard output if absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Configuration {
    V,
    Xi,
    Lambda,
}

impl From<Configuration> for AtomicConfiguration {
    fn from(c: Configuration) -> Self {
        match c {
            Configuration::V => AtomicConfiguration::V,
            Configuration::Xi => AtomicConfiguration::Xi,
            Configuration::Lambda => AtomicConfiguration::Lambda,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Level configuration.
    #[arg(long = "configuration", value_enum, default_value_t = Configuration::V)]
    pub configuration: Configuration,
    /// Field frequency Ω.
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Level energy ω₁.
    #[arg(long, default_value_t = 0.0)]
    pub w1: f64,
    /// Level energy ω₂.
    #[arg(long, default_value_t = 1.0)]
    pub w2: f64,
    /// Level energy ω₃.
    #[arg(long, default_value_t = 1.0)]
    pub w3: f64,
    /// Drop the counter-rotating terms.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, value_name = "BOOL")]
    pub rwa: bool,
}

/// Which states to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum)]
pub enum Branch {
    Coherent,
    Even,
    Odd,
    /// Exact lowest states of both parity sectors.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputKind {
    Energy,
    Photons,
    Populations,
    M,
    Q,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Coupling μ: a value or start:stop:count.
    #[arg(long, default_value = "0:2:201")]
    pub mu: String,
    /// Coupling angle θ (μ₁ = μ cos θ, μ₂ = μ sin θ on the two allowed
    /// transitions): a value or start:stop:count.
    #[arg(long, default_value_t = FRAC_PI_4.to_string())]
    pub theta: String,
    /// Atom number: a value or start:stop:count.
    #[arg(long, default_value = "2")]
    pub na: String,
    /// Spacing of the swept variable.
    #[arg(long, value_enum, default_value_t = Scale::Linear)]
    pub scale: Scale,
    /// States to evaluate (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Branch::Coherent, Branch::Even, Branch::Odd])]
    pub branch: Vec<Branch>,
    /// Quantities to report (comma separated).
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_values_t = [OutputKind::Energy, OutputKind::Photons, OutputKind::Populations, OutputKind::M, OutputKind::Q, OutputKind::Entropy]
    )]
    pub outputs: Vec<OutputKind>,
    /// Fixed photon cutoff for exact states (default: converge automatically).
    #[arg(long)]
    pub nu_max: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundaryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Scan range lo:hi:count.
    #[arg(long, default_value = "0:2:41")]
    pub mu: String,
    /// Direction angle θ between the two allowed couplings.
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub theta: f64,
    #[arg(long, default_value_t = 2)]
    pub na: u32,
    /// Final bracket width in μ.
    #[arg(long, default_value_t = 1e-7)]
    pub tolerance: f64,
    /// ϱ_c above this counts as collective.
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PhotonArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 3.0)]
    pub mu: f64,
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub theta: f64,
    #[arg(long, default_value_t = 2)]
    pub na: u32,
    /// States to tabulate (comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Branch::Even, Branch::Odd, Branch::Coherent])]
    pub branch: Vec<Branch>,
    /// Last photon number in the table (default: until every column has
    /// accumulated all but 1e-13 of its weight).
    #[arg(long)]
    pub nu_max: Option<u32>,
    /// Fit A·exp(−(ν − m)²/(2σ²)) to each column and report m and σ.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false, value_name = "BOOL")]
    pub fit: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub theta: f64,
    #[arg(long, default_value_t = 2)]
    pub na: u32,
    /// Photon cutoff (default: converge automatically).
    #[arg(long)]
    pub nu_max: Option<u32>,
    /// Eigenvalues per sector.
    #[arg(long, default_value_t = 6)]
    pub count: usize,
    /// Sectors to diagonalize (even, odd).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Branch::Even, Branch::Odd])]
    pub branch: Vec<Branch>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// fast: N ≤ 2 and 50 random points; full: N ≤ 6 and 500 points.
    #[arg(long, value_enum, default_value_t = Level::Fast)]
    pub level: Level,
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Self::Sweep(a) => &a.common,
            Self::PhaseBoundary(a) => &a.common,
            Self::PhotonDist(a) => &a.common,
            Self::Spectrum(a) => &a.common,
            Self::Validate(a) => &a.common,
        }
    }
}

/// `--config` value from raw arguments, if present.
fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// `key = value` pairs; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::BadInput(format!("config line {}: expected key = value", no + 1)))?;
        let k = k.trim().trim_start_matches("--").to_string();
        if k.is_empty() {
            return Err(CliError::BadInput(format!("config line {}: empty key", no + 1)));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Long flag names of a subcommand, or of all subcommands.
fn long_flags(sub: Option<&str>) -> Vec<String> {
    let cmd = Cli::command();
    cmd.get_subcommands()
        .filter(|s| sub.is_none_or(|n| s.get_name() == n))
        .flat_map(|s| {
            s.get_arguments()
                .filter_map(|a| a.get_long().map(str::to_string))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Splices the config file's entries in front of the user's flags so that
/// later (command-line) occurrences win.
pub fn merge_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text =
        std::fs::read_to_string(&path).map_err(|e| CliError::BadInput(format!("cannot read config {path}: {e}")))?;
    let entries = parse_config(&text)?;
    let Some(sub_pos) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(args);
    };
    let here = long_flags(Some(&args[sub_pos]));
    let anywhere = long_flags(None);
    let mut injected = Vec::new();
    for (k, v) in entries {
        if k == "config" {
            continue;
        }
        if here.contains(&k) {
            injected.push(format!("--{k}={v}"));
        } else if !anywhere.contains(&k) {
            return Err(CliError::BadInput(format!("unknown config key `{k}`")));
        }
    }
    let mut merged = args[..=sub_pos].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&args[sub_pos + 1..]);
    Ok(merged)
}
