//! Experiment configuration, shared by the command line and config files.
//!
//! Every subcommand's flags are a struct that is both a clap argument group
//! and a serde record, so `tempest <task> --flag v` and a config file
//! `{"task": {"<task>": {"flag": v}}}` describe the same run. Missing keys in
//! a file take the command-line defaults; unknown keys are rejected.

use std::path::PathBuf;

use clap::{Args, FromArgMatches, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use tempest::graph::{Dispersion, GraphKind, TimeModel};
use tempest::oracle::{ExpectationMode, SamplerKind};
use tempest::threshold::Certificate;

use crate::error::{CliError, CliResult};

/// Defaults of an argument group, as clap would fill them for no flags.
fn clap_defaults<T: Args + FromArgMatches>() -> T {
    let cmd = T::augment_args(clap::Command::new("defaults"));
    T::from_arg_matches(&cmd.get_matches_from(["defaults"])).expect("argument defaults parse")
}

macro_rules! clap_default {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                clap_defaults()
            }
        }
    )*};
}

/// Parses a value through its serde name.
fn serde_value<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unrecognised value `{s}`"))
}

fn parse_kind(s: &str) -> Result<GraphKind, String> {
    serde_value(s)
}

fn parse_time(s: &str) -> Result<TimeModel, String> {
    serde_value(s)
}

fn parse_dispersion(s: &str) -> Result<Dispersion, String> {
    serde_value(s)
}

fn parse_sampler(s: &str) -> Result<SamplerKind, String> {
    serde_value(s)
}

fn parse_mode(s: &str) -> Result<ExpectationMode, String> {
    serde_value(&s.replace('-', ""))
}

fn parse_certificate(s: &str) -> Result<Certificate, String> {
    Certificate::parse(s).ok_or_else(|| format!("unrecognised certificate `{s}`"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// ER skeleton with discrete-time two-state edges, `r ~ N(1/2, 1/8)`.
    Experiment,
    /// Static ring plus switching edges of mean `r` on every other pair.
    SmallWorld,
    /// Complete graph, every pair switching on at `q` and off at `r`.
    EdgeMarkovian,
    /// `--edges` random two-state edges on `n` nodes.
    Random,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphArgs {
    /// Named generator [default: experiment; random for `oracle`]
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Graph file `{"n", "kind", "edges"}` instead of a preset
    #[arg(long = "graph", value_name = "FILE", conflicts_with = "preset")]
    pub file: Option<PathBuf>,
    /// Node count [default: 500 experiment, 20 small-world, 10 edge-markovian, 4 random]
    #[arg(long)]
    pub n: Option<usize>,
    /// ER edge probability of the experiment skeleton
    #[arg(long, default_value_t = 0.2)]
    pub p: f64,
    /// Reading of the off-probability dispersion: variance | stddev
    #[arg(long, value_parser = parse_dispersion, default_value = "variance")]
    pub dispersion: Dispersion,
    /// Stationary on-probability (small-world) or off rate (edge-markovian)
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// On rate (edge-markovian)
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    /// Total switching rate of the small-world edges
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// amei | amai (small-world, random)
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<GraphKind>,
    /// ct | dt [default: dt for experiment, ct otherwise]
    #[arg(long, value_parser = parse_time)]
    pub time: Option<TimeModel>,
    /// Switching edges of the random preset
    #[arg(long, default_value_t = 3)]
    pub edges: usize,
    /// Generator seed [default: the master seed]
    #[arg(long)]
    pub graph_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// t1 | t2 | t3 | t4 | static-ct | static-dt [default: by graph kind and time]
    #[arg(long, value_parser = parse_certificate)]
    pub certificate: Option<Certificate>,
    /// Homogeneous recovery rate
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Also report the certificate at this infection rate
    #[arg(long)]
    pub beta: Option<f64>,
    /// Lower end of the threshold search
    #[arg(long, default_value_t = 1e-8)]
    pub beta_lo: f64,
    /// Upper end of the threshold search
    #[arg(long, default_value_t = 1.0)]
    pub beta_hi: f64,
    /// Half-width of the returned bracket
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Homogeneous infection rate (probability in discrete time)
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 10)]
    pub paths: usize,
    /// Time horizon; a step count in discrete time
    #[arg(long, default_value_t = 1000.0)]
    pub horizon: f64,
    /// Reseed one node whenever the infection dies out (discrete time)
    #[arg(long)]
    pub reinfect: bool,
    /// Initially infected nodes [default: all]
    #[arg(long, value_delimiter = ',')]
    pub infected: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmpiricalArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Explicit increasing β grid; overrides the linear grid
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5e-4)]
    pub beta_from: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub beta_to: f64,
    #[arg(long, default_value_t = 12)]
    pub beta_steps: usize,
    /// Re-infecting sample paths per grid point
    #[arg(long, default_value_t = 500)]
    pub paths: usize,
    /// Steps per path; `y*` is read at the last step
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Initially infected nodes [default: all]
    #[arg(long, value_delimiter = ',')]
    pub infected: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Independent random-preset instances
    #[arg(long, default_value_t = 1)]
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChungArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// m1 | m2 | m3 | m4
    #[arg(long, value_parser = parse_sampler, default_value = "m3")]
    pub sampler: SamplerKind,
    /// Infection rate of the M1, M2 and M4 samplers
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    /// Grid points on `[0, s_max)`
    #[arg(long, default_value_t = 20)]
    pub s_points: usize,
    /// Right end of the grid [default: where the bound drops below 1/draws]
    #[arg(long)]
    pub s_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Infection rate for the rate-weighted quantities
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Also estimate the expected certificate statistic of this sampler
    #[arg(long, value_parser = parse_sampler)]
    pub sampler: Option<SamplerKind>,
    /// exhaustive | monte-carlo
    #[arg(long, value_parser = parse_mode, default_value = "monte-carlo")]
    pub mode: ExpectationMode,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Panel {
    /// `n = 100`, `η(sgn Ā) = 10`.
    A,
    /// `n = 1000`, `η(sgn Ā) = 100`.
    B,
    /// `n = 10000`, `η(sgn Ā) = 1000`.
    C,
}

impl Panel {
    pub fn size(self) -> (usize, f64) {
        match self {
            Panel::A => (100, 10.0),
            Panel::B => (1000, 100.0),
            Panel::C => (10_000, 1000.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Figure3Args {
    #[arg(long, value_enum, default_value_t = Panel::A)]
    pub panel: Panel,
    /// `δ/β` as multiples of `η(sgn Ā)`
    #[arg(long, value_delimiter = ',', default_values_t = [0.7, 0.8, 0.9, 0.99])]
    pub rho: Vec<f64>,
    /// `Δ₃` as multiples of `η(sgn Ā)/4`
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = [0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0]
    )]
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Figure456Args {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Smallest β of the decay-bound curve
    #[arg(long, default_value_t = 1e-5)]
    pub gamma_from: f64,
    #[arg(long, default_value_t = 40)]
    pub gamma_points: usize,
    /// Explicit increasing β grid for `z*`
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5e-4)]
    pub beta_from: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub beta_to: f64,
    #[arg(long, default_value_t = 12)]
    pub beta_steps: usize,
    #[arg(long, default_value_t = 500)]
    pub paths: usize,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// β values of the sample-path panels
    #[arg(long, value_delimiter = ',', default_values_t = [6e-4, 7.5e-4, 9e-4])]
    pub sample_betas: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub sample_paths: usize,
}

clap_default!(
    GraphArgs,
    ThresholdArgs,
    SimulateArgs,
    EmpiricalArgs,
    OracleArgs,
    ChungArgs,
    SpectraArgs,
    Figure3Args,
    Figure456Args
);

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Certified stability threshold in β, and optionally a report at one β
    Threshold(ThresholdArgs),
    /// Exact SIS sample paths: CSV (path_id, t_or_k, infected_count)
    Simulate(SimulateArgs),
    /// Empirical threshold from re-infecting runs: CSV (beta, y_star, z_star)
    Empirical(EmpiricalArgs),
    /// Exponential-size exact condition: CSV (instance_id, eta, verdict)
    Oracle(OracleArgs),
    /// Top-eigenvalue tail against the concentration bound: CSV (s, empirical, bound)
    Chung(ChungArgs),
    /// Spectral summary of the mean matrix
    Spectra(SpectraArgs),
    /// ξ_H surface over (δ/β, Δ₃) for one panel
    Figure3(Figure3Args),
    /// Decay bound, z* curve and sample paths; needs --out
    Figure456(Figure456Args),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Threshold(_) => "threshold",
            Task::Simulate(_) => "simulate",
            Task::Empirical(_) => "empirical",
            Task::Oracle(_) => "oracle",
            Task::Chung(_) => "chung",
            Task::Spectra(_) => "spectra",
            Task::Figure3(_) => "figure3",
            Task::Figure456(_) => "figure456",
        }
    }
}

/// A config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub task: Task,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// The part of a run that determines its outputs. Thread count and output
/// location are excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub task: Task,
}

impl RunConfig {
    /// Canonical form: compact JSON with object keys sorted.
    pub fn canonical_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, lowercase hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

fn required(name: &str, v: Option<f64>) -> CliResult<f64> {
    let v = v.ok_or_else(|| CliError::Config(format!("--{name} is required")))?;
    positive(name, v)?;
    Ok(v)
}

fn probability(name: &str, v: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

fn grid(betas: &Option<Vec<f64>>, from: f64, to: f64, steps: usize) -> CliResult<Vec<f64>> {
    let g = match betas {
        Some(v) => v.clone(),
        None => {
            if steps < 2 || !(from > 0.0 && to > from) {
                return Err(CliError::Config(format!(
                    "linear grid needs 0 < from < to and at least 2 steps (got {from}, {to}, {steps})"
                )));
            }
            let h = (to - from) / (steps - 1) as f64;
            (0..steps).map(|k| from + h * k as f64).collect()
        }
    };
    if g.is_empty() || g.windows(2).any(|w| !(w[0] < w[1])) || g[0] < 0.0 {
        return Err(CliError::Config(
            "β grid must be nonempty, nonnegative and strictly increasing".into(),
        ));
    }
    Ok(g)
}

impl GraphArgs {
    fn validate(&self) -> CliResult<()> {
        probability("p", self.p)?;
        if let Some(n) = self.n {
            if n == 0 {
                return Err(CliError::Config("n must be positive".into()));
            }
        }
        Ok(())
    }
}

impl EmpiricalArgs {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        grid(&self.betas, self.beta_from, self.beta_to, self.beta_steps)
    }
}

impl Figure456Args {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        grid(&self.betas, self.beta_from, self.beta_to, self.beta_steps)
    }
}

impl SimulateArgs {
    pub fn beta(&self) -> CliResult<f64> {
        self.beta
            .ok_or_else(|| CliError::Config("--beta is required".into()))
    }
}

impl OracleArgs {
    pub fn beta(&self) -> CliResult<f64> {
        required("beta", self.beta)
    }
}

impl Task {
    /// Range checks run before any work starts.
    pub fn validate(&self) -> CliResult<()> {
        match self {
            Task::Threshold(a) => {
                a.graph.validate()?;
                positive("delta", a.delta)?;
                positive("beta-lo", a.beta_lo)?;
                positive("tol", a.tol)?;
                if !(a.beta_hi > a.beta_lo) {
                    return Err(CliError::Config("beta-hi must exceed beta-lo".into()));
                }
                if let Some(b) = a.beta {
                    positive("beta", b)?;
                }
            }
            Task::Simulate(a) => {
                a.graph.validate()?;
                let b = a.beta()?;
                if !(b >= 0.0 && b.is_finite()) {
                    return Err(CliError::Config(format!("beta must be nonnegative, got {b}")));
                }
                if !(a.delta >= 0.0 && a.delta.is_finite()) {
                    return Err(CliError::Config(format!(
                        "delta must be nonnegative, got {}",
                        a.delta
                    )));
                }
                positive("horizon", a.horizon)?;
            }
            Task::Empirical(a) => {
                a.graph.validate()?;
                probability("delta", a.delta)?;
                a.grid()?;
                if a.paths == 0 || a.steps == 0 {
                    return Err(CliError::Config("paths and steps must be positive".into()));
                }
            }
            Task::Oracle(a) => {
                a.graph.validate()?;
                a.beta()?;
                positive("delta", a.delta)?;
                if a.instances == 0 {
                    return Err(CliError::Config("instances must be positive".into()));
                }
            }
            Task::Chung(a) => {
                a.graph.validate()?;
                positive("beta", a.beta)?;
                positive("delta", a.delta)?;
                if a.draws == 0 {
                    return Err(CliError::Config("draws must be positive".into()));
                }
                if let Some(s) = a.s_max {
                    positive("s-max", s)?;
                }
            }
            Task::Spectra(a) => {
                a.graph.validate()?;
                positive("delta", a.delta)?;
                if let Some(b) = a.beta {
                    positive("beta", b)?;
                }
                if a.sampler.is_some() && a.draws == 0 {
                    return Err(CliError::Config("draws must be positive".into()));
                }
            }
            Task::Figure3(a) => {
                for &r in &a.rho {
                    positive("rho", r)?;
                }
                for &t in &a.theta {
                    positive("theta", t)?;
                }
            }
            Task::Figure456(a) => {
                a.graph.validate()?;
                probability("delta", a.delta)?;
                positive("delta", a.delta)?;
                positive("gamma-from", a.gamma_from)?;
                a.grid()?;
                if a.paths == 0 || a.steps == 0 {
                    return Err(CliError::Config("paths and steps must be positive".into()));
                }
                for &b in &a.sample_betas {
                    probability("sample beta", b)?;
                }
            }
        }
        Ok(())
    }
}
