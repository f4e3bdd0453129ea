use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ccsim_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    /// Decode failures or failed acceptance criteria.
    #[error("{0}")]
    Verification(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Core(_) => "scenario",
            CliError::Io(_) => "io",
            CliError::Csv(_) => "csv",
            CliError::Verification(_) => "verification",
        }
    }

    /// 1 for verification failures, 2 for everything the user got wrong.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            _ => 2,
        }
    }

    /// `error: kind=<kind> msg=<message>` on a single line.
    pub fn one_line(&self) -> String {
        let msg: String = self
            .to_string()
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        format!("error: kind={} msg={}", self.kind(), msg)
    }
}

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config(msg.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_format() {
        let e = CliError::Usage("empty\ngrid".into());
        assert_eq!(e.one_line(), "error: kind=usage msg=empty grid");
        assert_eq!(e.exit_code(), 2);
        assert_eq!(CliError::Verification("x".into()).exit_code(), 1);
    }
}
