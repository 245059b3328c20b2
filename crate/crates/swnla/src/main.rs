//! `swnla` — run sliding-window linear-algebra sketches against exact
//! oracles, generate test streams, and check experiment configs.
//!
//! Exit codes: 0 when the run's assertions pass, 1 when they fail, 2 on
//! usage or IO errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swnla::gen::{self, Generator, StreamSpec};
use swnla::report::Report;
use swnla::runner::{run_experiment, run_experiment_on_rows, Algorithm, ExperimentConfig};
use swnla::{formats, Error};

#[derive(Parser)]
#[command(name = "swnla", version, about = "Sliding-window numerical linear algebra sketches")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Deterministic sliding-window Gram approximation.
    SpectralDet(RunArgs),
    /// Sampled sliding-window Gram approximation.
    SpectralSample(RunArgs),
    /// Projection-cost-preserving sliding-window sample.
    Pcp(RunArgs),
    /// Irrevocable whole-stream low-rank sample.
    OnlineLra(RunArgs),
    /// Sliding-window ℓ1 sample for integer streams.
    L1(RunArgs),
    /// Sliding-window covariance sample.
    Cov(RunArgs),
    /// Run an experiment described by a JSON config file.
    Check(CheckArgs),
    /// Generate a stream and write it out.
    Gen(GenArgs),
}

#[derive(Args, Clone)]
struct GenParams {
    /// Fixture parameter (nonsmooth-* generators).
    #[arg(long)]
    alpha: Option<f64>,
    /// Integer entry exponent (integer-bounded generator).
    #[arg(long)]
    c_exp: Option<u32>,
    /// Norm levels (geometric-norm generator).
    #[arg(long)]
    levels: Option<usize>,
    /// Rows per norm level (geometric-norm generator).
    #[arg(long)]
    rows_per_level: Option<usize>,
    /// Per-level norm ratio (geometric-norm generator).
    #[arg(long)]
    ratio: Option<f64>,
    /// Hard-instance accuracy (index-hard generator).
    #[arg(long)]
    gen_eps: Option<f64>,
}

impl GenParams {
    fn build(&self, name: &str) -> Result<Generator, Error> {
        Ok(match name {
            "gaussian" => Generator::Gaussian,
            "integer-bounded" => Generator::IntegerBounded { c_exp: self.c_exp.unwrap_or(1) },
            "hypercube" => Generator::Hypercube,
            "duplicate-heavy" => Generator::DuplicateHeavy,
            "geometric-norm" => Generator::GeometricNorm {
                levels: self.levels.unwrap_or(4),
                rows_per_level: self.rows_per_level.unwrap_or(8),
                ratio: self.ratio.unwrap_or(0.5),
            },
            "index-hard" => Generator::IndexHard {
                eps: self
                    .gen_eps
                    .ok_or_else(|| Error::invalid("index-hard requires --gen-eps"))?,
            },
            "nonsmooth-lra" => Generator::NonsmoothLra { alpha: self.alpha.unwrap_or(0.5) },
            "nonsmooth-regression" => {
                Generator::NonsmoothRegression { alpha: self.alpha.unwrap_or(0.5) }
            }
            other => return Err(Error::invalid(format!("unknown generator {other:?}"))),
        })
    }
}

#[derive(Args)]
struct RunArgs {
    /// Stream file (text or binary). Omitted: generate per --generator.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report destination (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 48)]
    length: usize,
    #[arg(long, default_value_t = 16)]
    window: usize,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    rank: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Evaluate oracle metrics every N steps.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Algorithm variant: words|bits (cov), c1|c2 (l1).
    #[arg(long)]
    mode: Option<String>,
    /// Required trial success rate (default depends on the algorithm).
    #[arg(long)]
    min_success: Option<f64>,
    /// Stream family for generated runs.
    #[arg(long, default_value = "gaussian")]
    generator: String,
    #[command(flatten)]
    gen: GenParams,
}

#[derive(Args)]
struct CheckArgs {
    /// Experiment config (JSON, same shape `check` echoes into reports).
    #[arg(long)]
    config: PathBuf,
    /// Report destination (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Stream destination (default: stdout, text only).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the binary format instead of text.
    #[arg(long, default_value_t = false)]
    binary: bool,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 48)]
    length: usize,
    #[arg(long, default_value_t = 16)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "gaussian")]
    generator: String,
    #[command(flatten)]
    gen: GenParams,
}

fn emit_report(report: &Report, output: Option<&PathBuf>) -> Result<(), Error> {
    let json = report.to_json()?;
    match output {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(())
}

fn run_command(algorithm: Algorithm, args: &RunArgs) -> Result<bool, Error> {
    let generator = args.gen.build(&args.generator)?;
    let input = match &args.input {
        Some(path) => Some(formats::read_stream(path)?),
        None => None,
    };
    let stream = match &input {
        // File streams: dims and length come from the file; the generator
        // field is a placeholder recorded as such in the report.
        Some((rows, dim)) => StreamSpec {
            dim: *dim,
            length: rows.len(),
            window: args.window,
            generator: Generator::Gaussian,
            seed: args.seed,
        },
        None => StreamSpec {
            dim: args.dim,
            length: args.length,
            window: args.window,
            generator,
            seed: args.seed,
        },
    };
    let cfg = ExperimentConfig {
        algorithm,
        stream,
        eps: args.eps,
        rank: args.rank,
        batch: args.batch,
        trials: args.trials,
        mode: args.mode.clone(),
        min_success: args.min_success,
    };
    let mut report = match &input {
        Some((rows, _)) => run_experiment_on_rows(&cfg, rows)?,
        None => run_experiment(&cfg)?,
    };
    if let (Some(path), serde_json::Value::Object(map)) = (&args.input, &mut report.config) {
        map.insert("input".into(), serde_json::Value::String(path.display().to_string()));
    }
    emit_report(&report, args.output.as_ref())?;
    Ok(report.passed)
}

fn check_command(args: &CheckArgs) -> Result<bool, Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)?;
    let report = run_experiment(&cfg)?;
    emit_report(&report, args.output.as_ref())?;
    Ok(report.passed)
}

fn gen_command(args: &GenArgs) -> Result<bool, Error> {
    let spec = StreamSpec {
        dim: args.dim,
        length: args.length,
        window: args.window,
        generator: args.gen.build(&args.generator)?,
        seed: args.seed,
    };
    spec.validate()?;
    let rows = gen::generate(&spec)?;
    match &args.output {
        Some(path) => formats::write_stream(path, &rows, spec.dim, args.binary)?,
        None => {
            if args.binary {
                return Err(Error::invalid("binary output requires --output"));
            }
            print!("{}", formats::to_text(&rows, spec.dim)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::SpectralDet(a) => run_command(Algorithm::SpectralDet, a),
        Cmd::SpectralSample(a) => run_command(Algorithm::SpectralSample, a),
        Cmd::Pcp(a) => run_command(Algorithm::Pcp, a),
        Cmd::OnlineLra(a) => run_command(Algorithm::OnlineLra, a),
        Cmd::L1(a) => run_command(Algorithm::L1, a),
        Cmd::Cov(a) => run_command(Algorithm::Cov, a),
        Cmd::Check(a) => check_command(a),
        Cmd::Gen(a) => gen_command(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("swnla: {e}");
            ExitCode::from(2)
        }
    }
}
