use std::fmt;

/// Failure of a CLI run, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing configuration. Exit code 2.
    Config(String),
    /// Unusable input data. Exit code 3.
    Data(String),
    /// Anything else: I/O failures, replay mismatches. Exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Config key that corresponds to a core parameter name.
fn config_key(core_name: &str) -> &str {
    match core_name {
        "p" => "er_p",
        "k" => "ws_k",
        "beta" => "ws_beta",
        "m" => "sf_m",
        "m0" => "sf_m0",
        "n" | "nodes" => "nodes",
        "eta" => "eta_min",
        "grid" => "t_steps",
        "initial_coop" => "initial_coop",
        "users" => "synth_users",
        "days" => "synth_days",
        "streets" => "synth_streets",
        "start_date" => "synth_start",
        other => other,
    }
}

impl From<megt_core::Error> for CliError {
    fn from(e: megt_core::Error) -> Self {
        use megt_core::Error as E;
        match e {
            E::Parameter { name, reason } => {
                CliError::Config(format!("invalid value for `{}`: {reason}", config_key(name)))
            }
            E::Format { .. } | E::Schema(_) => CliError::Data(e.to_string()),
            E::Io(io) => CliError::Runtime(io.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
