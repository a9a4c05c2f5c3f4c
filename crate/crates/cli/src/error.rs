use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {message}", Location(path, *line))]
    Config {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Threads(String),
    #[error(transparent)]
    Numerics(#[from] ngssv::Error),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("repeated run produced different output for {0}")]
    Nondeterministic(String),
}

struct Location<'a>(&'a PathBuf, Option<usize>);

impl fmt::Display for Location<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.1 {
            Some(line) => write!(f, "{}:{line}", self.0.display()),
            None => write!(f, "{}", self.0.display()),
        }
    }
}

impl CliError {
    /// 1 for anything the user can fix in the config or invocation, 2 for
    /// numerical or validation failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Output { .. } | CliError::Threads(_) => 1,
            CliError::Numerics(ngssv::Error::InvalidParameter(_)) => 1,
            CliError::Numerics(_) | CliError::Validation(_) | CliError::Nondeterministic(_) => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_carry_line() {
        let e = CliError::Config { path: "a.toml".into(), line: Some(4), message: "bad".into() };
        assert_eq!(e.to_string(), "a.toml:4: bad");
        assert_eq!(e.exit_code(), 1);
        assert_eq!(CliError::Validation("x".into()).exit_code(), 2);
    }
}
