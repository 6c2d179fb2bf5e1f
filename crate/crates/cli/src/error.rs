use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::ValidationFailed(_) => 1,
            Self::BadInput(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        })
    }

    /// Input errors stay input errors; everything else the engine reports
    /// is a numerical failure at `context`.
    pub fn from_engine(e: sacs_engine::Error, context: &str) -> Self {
        use sacs_engine::Error as E;
        match e {
            E::InvalidParams(_)
            | E::WrongConfiguration { .. }
            | E::UnsupportedFrame(_)
            | E::DimensionTooLarge { .. } => Self::BadInput(format!("{context}: {e}")),
            _ => Self::Numerical(format!("{context}: {e}")),
        }
    }
}
