//! Seeded experiment runner: each subcommand compares a sampler or a
//! numerical routine of `gcrm` against its exact value and writes one CSV
//! row per comparison.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod experiments;
pub mod params;
pub mod report;

use std::process::ExitCode;

pub use config::ExperimentConfig;
use experiments::Run;
use params::Params;
pub use report::{Gate, Report, Row};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] gcrm::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Runs the experiment and returns its report without writing it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, CliError> {
    let p = Params::new(config.params.clone());
    let run = Run { seed: config.seed, samples: config.samples };
    let rows = match config.experiment.as_str() {
        "orthogonality" => experiments::orthogonality(&p)?,
        "genfun-check" => experiments::genfun_check(&p)?,
        "pair-corr" => experiments::pair_corr(&p, &run)?,
        "merge-check" => experiments::merge_check(&p)?,
        "dirichlet-moments" => experiments::dirichlet_moments(&p, &run)?,
        "stieltjes-check" => experiments::stieltjes_check(&p, &run)?,
        "density-check" => experiments::density_check(&p)?,
        "laplace-ratio" => experiments::laplace_ratio(&p)?,
        "subordinate" => experiments::subordinate(&p, &run)?,
        "poisson-embed" => experiments::poisson_embed(&p, &run)?,
        other => return Err(CliError::Config(format!("unknown subcommand '{other}'"))),
    };
    let param_json = p.finish()?;
    Ok(Report { experiment: config.experiment.clone(), param_json, rows })
}

/// Runs the experiment, writes the CSV to `config.out` (or standard output)
/// and reports whether every gate passed.
pub fn run(config: &ExperimentConfig) -> Result<bool, CliError> {
    let report = run_experiment(config)?;
    match &config.out {
        Some(path) => report.write_atomic(path)?,
        None => report.write_csv(std::io::stdout().lock())?,
    }
    let failures = report.failures();
    for row in &failures {
        eprintln!("gate failed: {} {} (z {:.2})", report.experiment, row.n_index, row.z_score);
    }
    Ok(failures.is_empty())
}

/// Full command-line entry: 0 when all gates pass, 1 on a gate failure,
/// 2 on a configuration error.
pub fn main_with_args<I, T>(args: I, env_seed: Option<&str>) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match config::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("gcrm: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let outcome = config::from_matches(&matches, env_seed).and_then(|c| run(&c));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("gcrm: {e}");
            ExitCode::from(2)
        }
    }
}
