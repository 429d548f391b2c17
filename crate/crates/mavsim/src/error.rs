use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("simulation fault at t={t:.6} s: {reason}")]
    SimulationFault { t: f64, reason: String },

    #[error("schedulability error: {0}")]
    Schedulability(String),

    #[error("unknown series `{name}`; available: {available}")]
    UnknownSeries { name: String, available: String },

    #[error("parameter update rejected for `{path}`: {reason}")]
    ParamRejected { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}

impl SimError {
    pub fn domain(msg: impl Into<String>) -> Self {
        SimError::Domain(msg.into())
    }

    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
