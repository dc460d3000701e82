//! Batch front-end: configuration, solve/sweep/validate/gen commands and
//! plot-script generation from CSV output.

pub mod commands;
pub mod config;
pub mod ini;
pub mod report;

pub use ini::ConfigError;

/// Environment variable overriding `[run] seed`.
pub const SEED_ENV: &str = "CONTACT_SPLIT_SEED";

pub mod exit {
    pub const CONVERGED: i32 = 0;
    pub const THRESHOLD: i32 = 1;
    pub const DIVERGED: i32 = 2;
    pub const MAX_ITER: i32 = 3;
    pub const CONFIG: i32 = 4;
    pub const SOLVE: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Unusable input other than the config text itself (bundles, traces, grids).
    #[error("{0}")]
    Input(String),
    /// Factorization, oracle or output failure.
    #[error("{0}")]
    Solve(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => exit::CONFIG,
            CliError::Solve(_) => exit::SOLVE,
        }
    }
}

pub fn seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Input(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Input(format!("{SEED_ENV}: {e}"))),
    }
}

pub(crate) fn write_file(path: &std::path::Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Solve(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Solve(format!("{}: {e}", path.display())))
}
