use std::path::PathBuf;

use oscgraph_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("count did not converge: {0}")]
    NotConverged(String),
    #[error("oracle bracket violated: {0}")]
    Bracket(String),
    #[error("selfcheck failed: {0}")]
    SelfCheck(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2: non-convergence, 3: invalid configuration, 4: oracle bracket
    /// failure, 1: anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 3,
            Self::NotConverged(_) => 2,
            Self::Bracket(_) => 4,
            Self::Core(CoreError::NotConverged(_)) => 2,
            Self::Core(
                CoreError::InvalidParameter { .. } | CoreError::Supercritical { .. } | CoreError::DecoupledOscillator { .. },
            ) => 3,
            _ => 1,
        }
    }
}
