//! `dcp` command-line front end: synthetic benchmark generation, calibration
//! runs over JSON-lines draw files, report recomputation and a self-test.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dcp_core::{DcpError, ScoreFamily};

pub mod commands;
pub mod io;
pub mod selftest;

pub use commands::{cmd_report, cmd_run, cmd_synth, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "dcp", version, about = "Conformal prediction intervals from predictive draws")]
pub struct Cli {
    /// Seed for synthetic data and self-test sampling.
    #[arg(long, global = true, env = "DCP_SEED")]
    pub seed: Option<u64>,
    /// JSON config file; command-line flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic benchmark: series, training pairs and draw files.
    Synth(SynthArgs),
    /// Calibrate on one draw file and produce intervals for another.
    Run(RunArgs),
    /// Recompute the metric report from an intervals CSV.
    Report(ReportArgs),
    /// Check the engine against its brute-force oracles.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct MetricArgs {
    /// Nominal miscoverage rate.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Confidence-margin multiplier for the minimal acceptable coverage.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Growth factor of the undercoverage penalty.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Normalize Winkler terms by the test-target range.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Built-in scenario: aleatoric, epistemic or epistemic_aware.
    #[arg(long, default_value = "aleatoric", conflicts_with = "spec")]
    pub preset: String,
    /// Scenario spec JSON (series, split, forecaster).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Predictive draws per record.
    #[arg(long)]
    pub draws: Option<usize>,
    /// Train, calibration and test fractions, e.g. 0.7,0.2,0.1.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub fractions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Calibration draw records (JSON lines, targets required).
    #[arg(long)]
    pub calib: PathBuf,
    /// Test draw records (JSON lines).
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Score family.
    #[arg(long, value_parser = parse_family)]
    pub score: Option<ScoreFamily>,
    /// Divide interval scores by the base band width.
    #[arg(long)]
    pub scaled: bool,
    /// Neighbours for the KNN score.
    #[arg(long)]
    pub k: Option<usize>,
    /// Recalibrate with a sliding window after every revealed target.
    #[arg(long)]
    pub online: bool,
    /// Use the closed-form inverse where the family has one.
    #[arg(long)]
    pub analytic: bool,
    #[command(flatten)]
    pub metrics: MetricArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Intervals CSV written by `run`.
    #[arg(long)]
    pub intervals: PathBuf,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub metrics: MetricArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    /// Randomized cases per check.
    #[arg(long, default_value_t = 200)]
    pub cases: usize,
}

fn parse_family(s: &str) -> Result<ScoreFamily, String> {
    s.parse::<ScoreFamily>().map_err(|e| e.to_string())
}

/// Marks failures while writing outputs, as opposed to bad inputs.
#[derive(Debug)]
pub struct OutputError(pub PathBuf);

impl fmt::Display for OutputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "writing {}", self.0.display())
    }
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

/// 3 when the calibration set cannot support the threshold, 1 for output
/// failures, 2 for everything else (bad input files, schema or config).
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let infeasible = err.chain().any(|e| {
        matches!(e.downcast_ref::<DcpError>(), Some(DcpError::InsufficientCalibration { .. }))
    }) || matches!(err.downcast_ref::<DcpError>(), Some(DcpError::InsufficientCalibration { .. }));
    if infeasible {
        EXIT_INFEASIBLE
    } else if err.downcast_ref::<OutputError>().is_some() {
        EXIT_FAILURE
    } else {
        EXIT_INPUT
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn dispatch(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Synth(args) => cmd_synth(args, cli.seed.unwrap_or(0)).map(|summary| {
            println!("{summary}");
            EXIT_OK
        }),
        Command::Run(args) => cmd_run(args, cli.config.as_deref(), cli.seed.unwrap_or(0)).map(|out| {
            println!("{}", io::report_json(&out.report).trim_end());
            EXIT_OK
        }),
        Command::Report(args) => cmd_report(args, cli.config.as_deref()).map(|_| EXIT_OK),
        Command::Selftest(args) => {
            let passed = selftest::run_selftest(cli.seed.unwrap_or(0), args.cases, &mut std::io::stdout());
            Ok(if passed { EXIT_OK } else { EXIT_FAILURE })
        }
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}
