use std::fmt;

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Malformed flags, config files or expressions: exit 2.
    Config(anyhow::Error),
    /// Anything that goes wrong while running a valid configuration: exit 1.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e:#}"),
            Failure::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

pub trait Classify<T> {
    fn config(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

/// `Err(Failure::Config(..))` from a format string.
macro_rules! config_error {
    ($($arg:tt)*) => {
        return Err($crate::failure::Failure::Config(anyhow::anyhow!($($arg)*)))
    };
}
pub(crate) use config_error;
