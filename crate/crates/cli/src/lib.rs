//! Command-line runner: dataset generators, verification suites, pipeline
//! runs and calibration management on top of the `quasinorm` library.

pub mod config;
pub mod output;
pub mod params;
pub mod pipelines;
pub mod sources;
pub mod suites;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use quasinorm::Result;

use config::{extract_constants, Overrides, RunConfig};
use output::{emit, Report};
use params::Params;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "quasinorm", version, about = "Geometric-hull certificates and cube quotients for p-normed spaces")]
#[command(after_help = "Parameters are key=value words after the subcommand. Constants are overridden with \
--const.NAME=VALUE (names: c, C, c0, c1, c2, elton_C, corollary_c, corollary_C, cubic_c).\n\
Exit codes: 0 pass, 1 verification failure, 2 input error, 3 numerical failure, 4 budget exhausted.")]
pub struct Cli {
    /// Random seed (recorded in every report).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// json or csv.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Numerical tolerance override.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a dataset: lp-ball, cube-vertices, random-vertex-subset, sphere-sample.
    Generate {
        kind: String,
        params: Vec<String>,
    },
    /// Run a verification suite: pconv, approx2, type1, alesker, counting, main, dvoretzky, delta.
    Verify {
        lemma: String,
        params: Vec<String>,
    },
    /// Run a pipeline: cube-quotient, pnormed-quotient, cubic-from-delta, dvoretzky-search.
    Run {
        pipeline: String,
        params: Vec<String>,
    },
    /// Show the effective constants; fit=chain also fits C on random instances.
    Calibrate {
        params: Vec<String>,
    },
}

/// What a command produced: the text to emit and the exit code.
pub struct Outcome {
    pub text: String,
    pub code: i32,
    pub summary: Option<String>,
}

fn config_for(cli: &Cli, constants: Vec<(String, f64)>, words: &[String]) -> Result<RunConfig> {
    let overrides = Overrides {
        seed: cli.seed,
        tol: cli.tol,
        format: cli.format.as_deref().map(str::parse).transpose()?,
        out: cli.out.clone(),
        constants,
        params: Params::from_args(words)?,
    };
    RunConfig::build(cli.config.as_deref(), overrides)
}

/// Runs an already parsed command.
pub fn execute(cli: &Cli, constants: Vec<(String, f64)>) -> Result<(Outcome, RunConfig)> {
    let words = match &cli.command {
        Command::Generate { params, .. } | Command::Verify { params, .. } | Command::Run { params, .. } => params,
        Command::Calibrate { params } => params,
    };
    let cfg = config_for(cli, constants, words)?;
    let outcome = match &cli.command {
        Command::Generate { kind, .. } => {
            let data = sources::generate(kind, &cfg.params, &cfg)?;
            cfg.params.finish()?;
            Outcome {
                text: data.render(cfg.format),
                code: EXIT_PASS,
                summary: None,
            }
        }
        Command::Verify { lemma, .. } => {
            let o = suites::run_suite(lemma, &cfg)?;
            let report = Report {
                json: suites::outcome_json(&o, &cfg),
                table: o.table.clone(),
            };
            Outcome {
                text: report.render(cfg.format)?,
                code: if o.pass { EXIT_PASS } else { EXIT_FAIL },
                summary: Some(format!(
                    "verify {}: {} (realized {} {} target {})",
                    o.lemma,
                    if o.pass { "pass" } else { "FAIL" },
                    o.realized,
                    o.relation,
                    o.target
                )),
            }
        }
        Command::Run { pipeline, .. } => Outcome {
            text: pipelines::run_pipeline(pipeline, &cfg)?.render(cfg.format)?,
            code: EXIT_PASS,
            summary: None,
        },
        Command::Calibrate { .. } => Outcome {
            text: pipelines::calibrate(&cfg)?.render(cfg.format)?,
            code: EXIT_PASS,
            summary: None,
        },
    };
    Ok((outcome, cfg))
}

/// Full process behavior for an argument vector; returns the exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let (rest, constants) = match extract_constants(args) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = execute(&cli, constants).and_then(|(o, cfg)| {
        emit(&o.text, &cfg)?;
        if let Some(s) = &o.summary {
            eprintln!("{s}");
        }
        Ok(o.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
