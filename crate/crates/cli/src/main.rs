//! `tempest`: stability certificates, exact-condition oracles and SIS
//! simulation over aggregated-Markovian dynamic graphs.
//!
//! Exit status: 0 success, 1 configuration error, 2 numerical failure,
//! 3 resource cap exceeded.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod graph;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use config::{ExperimentConfig, RunConfig, Task};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "tempest", version, about, propagate_version = true)]
struct Cli {
    /// Master seed; every random stream is derived from it [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on it
    #[arg(long, global = true, env = "TEMPEST_THREADS")]
    threads: Option<usize>,
    /// Output directory; single-artifact tasks print to stdout without it
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// JSON experiment config `{"seed", "threads", "out", "task": {"<task>": {..}}}`;
    /// flags given alongside it override seed, threads and out
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    task: Option<Task>,
}

fn resolve(cli: Cli) -> CliResult<ExperimentConfig> {
    let from_file = match &cli.config {
        Some(p) => Some(ExperimentConfig::load(p)?),
        None => None,
    };
    let cfg = match (from_file, cli.task) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either a subcommand or --config, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "no task: give a subcommand or --config".into(),
            ))
        }
        (None, Some(task)) => ExperimentConfig {
            seed: cli.seed,
            threads: cli.threads,
            out: cli.out,
            task,
        },
        (Some(file), None) => ExperimentConfig {
            seed: cli.seed.or(file.seed),
            threads: cli.threads.or(file.threads),
            out: cli.out.or(file.out),
            task: file.task,
        },
    };
    Ok(cfg)
}

fn execute(cfg: ExperimentConfig) -> CliResult<()> {
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(CliError::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Resource(format!("thread pool: {e}")))?;
    }
    let run_cfg = RunConfig {
        seed: cfg.seed.unwrap_or(0),
        task: cfg.task,
    };
    if cfg.out.is_none() && matches!(run_cfg.task, Task::Figure456(_)) {
        return Err(CliError::Config(format!(
            "{} writes several files; pass --out DIR",
            run_cfg.task.name()
        )));
    }
    let out = run::run(&run_cfg.task, run_cfg.seed)?;
    match &cfg.out {
        Some(dir) => {
            for p in output::write_dir(dir, &run_cfg, &out)? {
                println!("{p}");
            }
        }
        None => output::write_stream(&mut std::io::stdout().lock(), &run_cfg, &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match resolve(cli).and_then(execute) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tempest: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
