//! Command-line orchestration for the `inflap` solvers: JSON config in, CSV
//! fields and JSON reports out.

pub mod commands;
pub mod config;
pub mod io;

use std::path::Path;

use thiserror::Error;

pub use commands::{run, Outcome};
pub use config::{LoadedConfig, RunConfig};

/// Exit status for a run that hit an iteration cap.
pub const EXIT_NOT_CONVERGED: i32 = 3;
/// Exit status for a malformed or out-of-range config.
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) | CliError::Runtime(_) => 1,
        }
    }
}

impl From<inflap::Error> for CliError {
    fn from(e: inflap::Error) -> Self {
        use inflap::Error as E;
        match e {
            E::IllegalMove { .. } | E::OrderingViolation(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<std::path::PathBuf>,
    pub eps: Option<f64>,
    pub start: Option<Vec<f64>>,
    pub runs: Option<usize>,
    pub max_strategy: Option<String>,
    pub min_strategy: Option<String>,
}

/// Reads, overrides and validates a config file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let mut config = config::parse(&text)?;
    let game_flag = overrides.start.is_some()
        || overrides.runs.is_some()
        || overrides.max_strategy.is_some()
        || overrides.min_strategy.is_some();
    if game_flag {
        let game = config.game.as_mut().ok_or_else(|| {
            CliError::Validation(format!(
                "config key `game`: game flags given but the config (command `{}`) has no game section",
                config.command
            ))
        })?;
        if let Some(s) = &overrides.start {
            game.start = s.clone();
        }
        if let Some(r) = overrides.runs {
            game.runs = r;
        }
        if let Some(s) = &overrides.max_strategy {
            game.max_strategy = s.clone();
        }
        if let Some(s) = &overrides.min_strategy {
            game.min_strategy = s.clone();
        }
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(eps) = overrides.eps {
        config.solver.eps = Some(eps);
    }
    if let Some(dir) = &overrides.out_dir {
        // relative to the working directory, unlike paths inside the file
        config.output.dir = std::env::current_dir()
            .map(|c| c.join(dir))
            .unwrap_or_else(|_| dir.clone());
    }
    let loaded = LoadedConfig {
        config,
        base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    config::validate(&loaded)?;
    Ok(loaded)
}
