use thiserror::Error;

/// Top-level failure categories, mapped to process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("blow-up: non-finite state at t = {t} on path {path_id} (snapshot written: {snapshot})")]
    BlowUp {
        t: f64,
        path_id: u64,
        snapshot: String,
    },

    #[error("selftest: {failures} check(s) failed")]
    SelfTest { failures: usize },

    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::BlowUp { .. } => 3,
            CliError::SelfTest { .. } => 4,
            CliError::Other(_) => 1,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::BlowUp { .. } => "blow-up",
            CliError::SelfTest { .. } => "selftest",
            CliError::Other(_) => "runtime",
        }
    }
}

impl From<ecnv_core::Error> for CliError {
    fn from(e: ecnv_core::Error) -> Self {
        match e {
            ecnv_core::Error::BlowUp { t, .. } => CliError::BlowUp {
                t,
                path_id: u64::MAX,
                snapshot: String::from("<none>"),
            },
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("io: {e}"))
    }
}
