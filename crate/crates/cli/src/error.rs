use std::path::PathBuf;

use soliton_core::continuity::FailureKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("cannot read `{}`: {source}", path.display())]
    Input { path: PathBuf, source: soliton_core::Error },

    #[error("cannot write `{}`: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] soliton_core::Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 0 success, 1 usage, 2 solver stall, 3 positivity loss, 4 verification.
    pub fn exit_code(&self) -> u8 {
        use soliton_core::Error as E;
        match self {
            CliError::Verification(_) => 4,
            CliError::Core(E::Continuity(f)) => match f.kind {
                FailureKind::PositivityLost => 3,
                FailureKind::Stalled | FailureKind::NewtonDiverged => 2,
            },
            CliError::Core(E::PositivityLost { .. }) => 3,
            CliError::Core(E::NewtonDiverged { .. } | E::NotConverged(_) | E::Singular { .. }) => 2,
            _ => 1,
        }
    }
}
