use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("invalid plan: {0}")]
    Plan(String),

    #[error("agent {agent} failed to bind port {port}: {source}")]
    Bind {
        agent: String,
        port: u16,
        #[source]
        source: std::io::Error,
    },

    #[error("run aborted: {0}")]
    Aborted(String),

    #[error(transparent)]
    Core(#[from] monlab_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
