use std::fmt;
use std::path::Path;

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flags, configuration or input data; one entry per problem.
    Config(Vec<String>),
    Io(String),
    /// A numerical abort or a draw store that is incomplete.
    Numerical(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(problems) if problems.len() == 1 => write!(f, "invalid configuration: {}", problems[0]),
            CliError::Config(problems) => {
                write!(f, "invalid configuration ({} problems):", problems.len())?;
                for p in problems {
                    write!(f, "\n  - {p}")?;
                }
                Ok(())
            }
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fssm::Error> for CliError {
    fn from(e: fssm::Error) -> Self {
        match e {
            fssm::Error::Numerical(_) | fssm::Error::Invariant(_) | fssm::Error::Accuracy { .. } => {
                CliError::Numerical(e.to_string())
            }
            fssm::Error::Config(m) => CliError::config(m),
            fssm::Error::Domain(_) | fssm::Error::Shape(_) => CliError::config(e.to_string()),
        }
    }
}
