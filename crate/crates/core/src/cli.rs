//! Command-line front end: parameter sweeps to CSV, figure presets, POM
//! validation and estimation from recorded counts.
//!
//! Every failure becomes a [`CliError`] carrying an exit code; `main` prints
//! it as one JSON line on stderr.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, ErrorQuery, StrategyId};
use crate::bloch::BlochVector;
use crate::error::Error;
use crate::estimators::{is_physical, AxisCounts, EstimatorKind, EstimatorSpec};
use crate::montecarlo::{run_trials, TrialPlan};
use crate::povm::{
    joint_povm_three, joint_povm_two, optimal_sharpness_pair, saturation_residual,
    steering_bound_check, validate_povm, SharpnessTriple, SteeringReport, ValidityReport,
    GEOMETRIC_TOLERANCE,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Usage,
    Validation,
    Io,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage => EXIT_USAGE,
            ErrorKind::Validation => EXIT_VALIDATION,
            ErrorKind::Io => EXIT_IO,
        }
    }
}

/// One-line JSON: `{"kind":"usage","message":"..."}`.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = serde_json::to_string(self).map_err(|_| fmt::Error)?;
        f.write_str(&line)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spinhalf",
    version,
    about = "Error analysis for estimating qubit spin expectation values"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic (and optionally simulated) error over a grid, written as CSV.
    Sweep(SweepArgs),
    /// Check positivity and completeness of a joint measurement.
    ValidatePovm(ValidateArgs),
    /// Estimate expectation values from recorded up/down counts.
    Estimate(EstimateArgs),
    /// Analytic data behind the standard comparison plots.
    Figure(FigureArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated strategy names.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<StrategyId>>,
    /// Copies per observable, `lo..hi` inclusive.
    #[arg(long)]
    pub n: Option<IntRange>,
    /// Angle grid `start:stop:step` in radians; `pi`, `pi/6`, `2*pi/3` are accepted.
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<GridSpec>,
    /// Grid over a·b instead of the angle.
    #[arg(long, allow_hyphen_values = true)]
    pub adotb: Option<GridSpec>,
    /// Copies N1 given to the first observable by the split strategy (default N).
    #[arg(long)]
    pub split: Option<u32>,
    /// Monte Carlo trials per row; 0 skips simulation.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with the same keys; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["eta", "three"])))]
pub struct ValidateArgs {
    /// Angle between the two observables, radians.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_real)]
    pub eta: Option<f64>,
    /// The three-axis σx, σy, σz measurement.
    #[arg(long)]
    pub three: bool,
    /// Override the first sharpness (default: optimal for the angle).
    #[arg(long, requires = "eta")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "eta")]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// `up,down` for the first observable.
    #[arg(long)]
    pub counts_a: CountsArg,
    #[arg(long)]
    pub counts_b: Option<CountsArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub adotb: Option<f64>,
    /// Joint sharpness (default: optimal for a·b).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub method: EstimatorKind,
    /// Quadrature nodes for bayes-joint.
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub id: u8,
    #[arg(long)]
    pub out: PathBuf,
}

/// Real number, optionally written as a multiple of pi: `pi`, `-pi/4`, `2*pi/3`, `0.5`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim().replace('π', "pi");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (t.as_str(), None),
    };
    let bad = || format!("cannot read '{s}' as a number");
    let mut value = match num.strip_suffix("pi") {
        Some(coef) => {
            let coef = coef.strip_suffix('*').unwrap_or(coef);
            let c = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            c * std::f64::consts::PI
        }
        None => num.parse::<f64>().map_err(|_| bad())?,
    };
    if let Some(d) = den {
        value /= d.trim().parse::<f64>().map_err(|_| bad())?;
    }
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntRange {
    pub lo: u32,
    pub hi: u32,
}

impl FromStr for IntRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad N range '{s}'"))
        };
        let (lo, hi) = match s.split_once("..") {
            Some((lo, hi)) => (parse(lo)?, parse(hi.trim_start_matches('='))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if lo == 0 || hi < lo {
            return Err(format!("N range '{s}' must satisfy 1 ≤ lo ≤ hi"));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    /// `start + k·step` for every `k` that stays at or below `stop`.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.start + k as f64 * self.step)
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let (start, stop, step) = match parts.as_slice() {
            [v] => {
                let v = parse_real(v)?;
                (v, v, 1.0)
            }
            [a, b, c] => (parse_real(a)?, parse_real(b)?, parse_real(c)?),
            _ => return Err(format!("grid '{s}' must be start:stop:step")),
        };
        if step <= 0.0 {
            return Err(format!("grid '{s}' needs step > 0"));
        }
        if stop < start {
            return Err(format!("grid '{s}' has stop < start"));
        }
        Ok(Self { start, stop, step })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountsArg(pub AxisCounts);

impl FromStr for CountsArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("counts '{s}' must be 'up,down' with non-negative integers");
        let (u, d) = s.split_once(',').ok_or_else(bad)?;
        let up = u.trim().parse::<u64>().map_err(|_| bad())?;
        let down = d.trim().parse::<u64>().map_err(|_| bad())?;
        Ok(Self(AxisCounts::from_up_down(up, down)))
    }
}

/// Which variable the sweep runs over.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleGrid {
    Eta(Vec<f64>),
    Adotb(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub strategies: Vec<StrategyId>,
    pub n_range: IntRange,
    pub grid: AngleGrid,
    pub split: Option<u32>,
    pub trials: u64,
    pub seed: u64,
    pub output_path: PathBuf,
}

/// Config file layout; grids and ranges use the flag syntax.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    strategies: Option<Vec<StrategyId>>,
    n: Option<String>,
    eta: Option<String>,
    adotb: Option<String>,
    split: Option<u32>,
    trials: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_args(args: SweepArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
                serde_json::from_str::<SweepFile>(&text)
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
            }
            None => SweepFile::default(),
        };
        let parse_file = |field: &str, v: &Option<String>| -> Result<Option<GridSpec>, CliError> {
            v.as_deref()
                .map(|s| {
                    s.parse()
                        .map_err(|e| CliError::usage(format!("config {field}: {e}")))
                })
                .transpose()
        };

        let strategies = args
            .strategies
            .or(file.strategies)
            .ok_or_else(|| CliError::usage("missing --strategies"))?;
        if strategies.is_empty() {
            return Err(CliError::usage("--strategies is empty"));
        }
        let n_range = match args.n {
            Some(r) => r,
            None => file
                .n
                .as_deref()
                .ok_or_else(|| CliError::usage("missing --n"))?
                .parse()
                .map_err(|e| CliError::usage(format!("config n: {e}")))?,
        };
        let grid = match (args.eta, args.adotb) {
            (Some(_), Some(_)) => return Err(CliError::usage("give either --eta or --adotb")),
            (Some(g), None) => AngleGrid::Eta(g.points()),
            (None, Some(g)) => AngleGrid::Adotb(g.points()),
            (None, None) => match (
                parse_file("eta", &file.eta)?,
                parse_file("adotb", &file.adotb)?,
            ) {
                (Some(_), Some(_)) => {
                    return Err(CliError::usage("config gives both eta and adotb"))
                }
                (Some(g), None) => AngleGrid::Eta(g.points()),
                (None, Some(g)) => AngleGrid::Adotb(g.points()),
                (None, None) => return Err(CliError::usage("missing --eta or --adotb")),
            },
        };
        let output_path = args
            .out
            .or(file.out)
            .ok_or_else(|| CliError::usage("missing --out"))?;
        Ok(Self {
            strategies,
            n_range,
            grid,
            split: args.split.or(file.split),
            trials: args.trials.or(file.trials).unwrap_or(0),
            seed: args.seed.or(file.seed).unwrap_or(0),
            output_path,
        })
    }

    /// Analytic-only preset for one of the three comparison plots:
    /// N = 1..30 and η from 0 to π/2 in steps of π/60.
    pub fn figure(id: u8, output_path: PathBuf) -> Result<Self, CliError> {
        let strategies = match id {
            1 => vec![StrategyId::SepUnbiased, StrategyId::JointUnbiased],
            2 => vec![StrategyId::SepBiased, StrategyId::JointBiased],
            3 => vec![StrategyId::BayesJoint, StrategyId::JointBiased],
            _ => return Err(CliError::usage(format!("no figure {id}"))),
        };
        let step = std::f64::consts::PI / 60.0;
        Ok(Self {
            strategies,
            n_range: IntRange { lo: 1, hi: 30 },
            grid: AngleGrid::Eta((0..=30).map(|k| k as f64 * step).collect()),
            split: None,
            trials: 0,
            seed: 0,
            output_path,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub strategy: StrategyId,
    pub n: u32,
    pub eta: f64,
    pub analytic_error: f64,
    pub mc_error: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "strategy,N,eta,analytic_error,mc_error,mc_stderr,trials,seed";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.strategy,
            self.n,
            self.eta,
            self.analytic_error,
            opt(self.mc_error),
            opt(self.mc_stderr),
            self.trials,
            self.seed
        )
    }
}

/// Evaluates every (strategy, N, grid point) row. Row seeds are drawn in
/// order from a stream keyed by the master seed.
pub fn sweep_rows(config: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    for &strategy in &config.strategies {
        for n in config.n_range.lo..=config.n_range.hi {
            let points = match &config.grid {
                AngleGrid::Eta(v) | AngleGrid::Adotb(v) => v,
            };
            for &x in points {
                let mut query = ErrorQuery::new(strategy, n);
                query = match config.grid {
                    AngleGrid::Eta(_) => query.with_eta(x),
                    AngleGrid::Adotb(_) => query.with_adotb(x),
                };
                query.split = Some(config.split.unwrap_or(n));
                let eta = query.angle()?;
                let analytic_error = analytic::analytic_error(&query)?;
                let seed = seeds.next_u64();
                let (mc_error, mc_stderr) = if config.trials > 0 {
                    let mut plan = TrialPlan::with_angle(strategy, n, eta, config.trials, seed);
                    plan.split = query.split;
                    let report = run_trials(&plan)?;
                    (Some(report.empirical_error), Some(report.standard_error))
                } else {
                    (None, None)
                };
                rows.push(SweepRow {
                    strategy,
                    n,
                    eta,
                    analytic_error,
                    mc_error,
                    mc_stderr,
                    trials: config.trials,
                    seed,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_sweep(config: &SweepConfig) -> Result<usize, CliError> {
    let rows = sweep_rows(config)?;
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for row in &rows {
        text.push_str(&row.to_csv());
        text.push('\n');
    }
    fs::write(&config.output_path, text)
        .map_err(|e| CliError::io(format!("{}: {e}", config.output_path.display())))?;
    Ok(rows.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationOutput {
    pub measurement: &'static str,
    pub eta: Option<f64>,
    pub sharpness: Vec<f64>,
    /// Two observables: `2 − |αa+βb| − |αa−βb|`. Three: `1 − (α² + β² + γ²)`.
    pub saturation_residual: f64,
    /// Absent when the sharpnesses admit no joint measurement.
    pub report: Option<ValidityReport>,
    pub steering: SteeringReport,
    pub pass: bool,
}

pub fn validate(args: &ValidateArgs) -> Result<ValidationOutput, CliError> {
    if args.three {
        let povm = joint_povm_three();
        let s = analytic::three_joint_sharpness();
        let triple = SharpnessTriple::triple(s, s, s);
        let report = validate_povm(&povm);
        let steering = steering_bound_check(triple);
        return Ok(ValidationOutput {
            measurement: "three",
            eta: None,
            sharpness: triple.components(),
            saturation_residual: 1.0 - triple.sum_of_squares(),
            pass: report.pass && steering.admissible,
            report: Some(report),
            steering,
        });
    }
    let eta = args.eta.ok_or_else(|| CliError::usage("missing --eta"))?;
    let optimal = optimal_sharpness_pair(eta)?;
    let alpha = args.alpha.unwrap_or(optimal.alpha);
    let beta = args.beta.unwrap_or(optimal.beta);
    let (a, b) = (BlochVector::Z, BlochVector::in_xz_plane(eta));
    let residual = saturation_residual(a, b, alpha, beta)?;
    let report = match joint_povm_two(a, b, alpha, beta) {
        Ok(povm) => Some(validate_povm(&povm)),
        Err(Error::Inadmissible { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let pass = residual >= -GEOMETRIC_TOLERANCE && report.as_ref().is_some_and(|r| r.pass);
    Ok(ValidationOutput {
        measurement: "two",
        eta: Some(eta),
        sharpness: vec![alpha, beta],
        saturation_residual: residual,
        report,
        // The singlet argument is stated for orthogonal axes; shown for reference.
        steering: steering_bound_check(SharpnessTriple::pair(alpha, beta)),
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateOutput {
    pub method: EstimatorKind,
    pub est_a: f64,
    pub est_b: Option<f64>,
    /// Expected squared error summed over the estimated observables, at
    /// these shot counts, averaged over uniformly random pure states.
    pub analytic_error: f64,
    pub out_of_range: bool,
}

pub fn estimate(args: &EstimateArgs) -> Result<EstimateOutput, CliError> {
    let a = args.counts_a.0;
    let b = args.counts_b.map(|c| c.0);
    let adotb = args.adotb.unwrap_or(0.0);
    if !(-1.0..=1.0).contains(&adotb) {
        return Err(CliError::usage(format!("a·b = {adotb} is outside [-1, 1]")));
    }
    let alpha = match args.alpha {
        Some(v) => v,
        None => optimal_sharpness_pair(adotb.acos())?.alpha,
    };
    let spec = EstimatorSpec {
        kind: args.method,
        alpha: Some(alpha),
        adotb: Some(adotb),
        node_count: args.nodes,
    };
    let (est_a, est_b) = spec.estimate(a, b)?;

    let per_axis = |c: AxisCounts| -> Result<f64, CliError> {
        let m = c.shots as f64;
        Ok(match args.method {
            EstimatorKind::Mean => analytic::sep_unbiased_error(m) / 2.0,
            EstimatorKind::Shrinkage => analytic::sep_biased_error(m) / 2.0,
            EstimatorKind::BayesSingle => {
                let n = u32::try_from(c.shots).map_err(|_| CliError::usage("too many shots"))?;
                analytic::bayes_single_error(n)?.exact_sum / 2.0
            }
            EstimatorKind::JointRescaled => (1.0 / (alpha * alpha) - 1.0 / 3.0) / m,
            EstimatorKind::JointBiased => analytic::joint_biased_axis_error(m, alpha),
            EstimatorKind::CrossWeighted | EstimatorKind::BayesJoint => unreachable!(),
        })
    };
    let analytic_error = match args.method {
        EstimatorKind::CrossWeighted => analytic::cross_weighted_error(a.shots as f64, adotb),
        EstimatorKind::BayesJoint => {
            let n = u32::try_from(a.shots).map_err(|_| CliError::usage("too many shots"))?;
            let nodes = args
                .nodes
                .unwrap_or_else(|| analytic::default_node_count(n));
            analytic::bayes_joint_error(n, adotb, nodes)?
        }
        _ => per_axis(a)? + b.map(per_axis).transpose()?.unwrap_or(0.0),
    };
    let out_of_range = !is_physical(est_a) || est_b.is_some_and(|v| !is_physical(v));
    Ok(EstimateOutput {
        method: args.method,
        est_a,
        est_b,
        analytic_error,
        out_of_range,
    })
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::io(e.to_string()))
}

/// Parses `args` (including the program name) and runs the command,
/// writing results to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                write!(out, "{e}").map_err(|e| CliError::io(e.to_string()))?;
                return Ok(());
            }
            let text = e.to_string();
            let line = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return Err(CliError::usage(line));
        }
    };
    match cli.command {
        Command::Sweep(args) => {
            let config = SweepConfig::from_args(args)?;
            write_sweep(&config)?;
            Ok(())
        }
        Command::Figure(args) => {
            write_sweep(&SweepConfig::figure(args.id, args.out)?)?;
            Ok(())
        }
        Command::ValidatePovm(args) => {
            let result = validate(&args)?;
            print_json(out, &result)?;
            if result.pass {
                Ok(())
            } else {
                Err(CliError::validation(format!(
                    "measurement invalid (saturation residual {})",
                    result.saturation_residual
                )))
            }
        }
        Command::Estimate(args) => print_json(out, &estimate(&args)?),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(args, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
