//! Command-line front end: `fracspec <command> --config path [--out dir]
//! [--seed n] [--override key=value]...`.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 hypothesis
//! violation, 4 numerical or I/O failure. Failures print one JSON object on
//! stderr.

pub mod config;
mod output;
mod run;

use std::path::PathBuf;

use clap::Parser;
use serde_json::json;

pub use config::{CommandName, RunConfig};
pub use output::{format_number, FileRecord};
pub use run::{run, RunOutcome};

use crate::error::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fracspec",
    version,
    about = "Time-fractional diffusion: spectral solver, kernels and inversion"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: CommandName,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace a config field, e.g. `problem.alpha=0.4`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub field: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn config(field: Option<String>, message: String) -> Self {
        Self {
            code: EXIT_CONFIG,
            kind: "config",
            field,
            message,
        }
    }

    pub fn io(message: String) -> Self {
        Self {
            code: EXIT_NUMERIC,
            kind: "io",
            field: None,
            message,
        }
    }

    pub fn from_library(e: Error) -> Self {
        let (code, kind) = match e {
            Error::Parameter(_) | Error::Domain(_) | Error::Validation(_) => (EXIT_CONFIG, "invalid_input"),
            Error::Hypothesis(_) | Error::Compatibility(_) | Error::DegeneratePotential(_) => {
                (EXIT_HYPOTHESIS, "hypothesis")
            }
            Error::Numeric(_) | Error::Normalization { .. } | Error::PoleProximity { .. } | Error::NoDecay(_) => {
                (EXIT_NUMERIC, "numeric")
            }
        };
        Self {
            code,
            kind,
            field: None,
            message: e.to_string(),
        }
    }

    pub fn with_field(mut self, field: &str) -> Self {
        self.field.get_or_insert_with(|| field.to_string());
        self
    }

    pub fn to_json(&self) -> String {
        json!({
            "error": self.kind,
            "exit_code": self.code,
            "field": self.field,
            "message": self.message,
        })
        .to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::from_library(e)
    }
}

/// Caps the global rayon pool at `FRACSPEC_THREADS` when it is set.
fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("FRACSPEC_THREADS") {
        let n: usize =
            v.parse().ok().filter(|n| *n > 0).ok_or_else(|| {
                CliError::config(Some("FRACSPEC_THREADS".into()), format!("invalid thread count '{v}'"))
            })?;
        // a pool built earlier in the process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point of the binary; returns the process exit code.
pub fn main_entry() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code
        }
    }
}
