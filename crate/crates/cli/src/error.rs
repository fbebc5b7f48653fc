use hopgr::ErrorClass;
use thiserror::Error;

pub const EXIT_DATA: i32 = 2;
pub const EXIT_COMPATIBILITY: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid-config: line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("missing-setting: `{0}` is required for this command")]
    Missing(&'static str),

    #[error(transparent)]
    Core(#[from] hopgr::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Missing(_) => EXIT_DATA,
            CliError::Core(e) => match e.class() {
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Compatibility => EXIT_COMPATIBILITY,
                ErrorClass::Io => EXIT_IO,
            },
        }
    }

    /// The single-line, machine-parseable failure report.
    pub fn report_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error: {msg}")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(hopgr::Error::Io(e))
    }
}
