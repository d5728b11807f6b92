use joma_dynamics::DynError;
use joma_hblt::HbltError;
use joma_num::NumError;
use joma_transformer::TransformerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0} check(s) failed")]
    Failed(usize),
}

impl CliError {
    /// Process exit code: 1 config, 2 runtime or failed checks, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) | CliError::Failed(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<NumError> for CliError {
    fn from(e: NumError) -> Self {
        match e {
            NumError::Domain(_) | NumError::Dimension(_) | NumError::InvalidDistribution(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<DynError> for CliError {
    fn from(e: DynError) -> Self {
        match e {
            DynError::Num(n) => n.into(),
            DynError::Dimension(_) | DynError::Invalid(_) | DynError::ZeroDelta(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<HbltError> for CliError {
    fn from(e: HbltError) -> Self {
        match e {
            HbltError::Io(io) => io.into(),
            HbltError::InvalidSpec(_) | HbltError::Domain(_) | HbltError::TooLarge(..) | HbltError::Token(_) => {
                CliError::Config(e.to_string())
            }
            HbltError::Parse { .. } | HbltError::Json(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<TransformerError> for CliError {
    fn from(e: TransformerError) -> Self {
        match e {
            TransformerError::Io(io) => io.into(),
            TransformerError::Config(_) | TransformerError::Dimension(_) => CliError::Config(e.to_string()),
            TransformerError::Num(n) => n.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
