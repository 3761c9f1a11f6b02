use crate::engine::EngineError;

/// Failures of an explanation request, each with a stable machine code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExplainError {
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
    #[error("`{value}` is not a state of `{device}`")]
    UnknownState { device: String, value: String },
    #[error("`{device}` already is `{value}`; there is nothing to explain")]
    NoExplanandum { device: String, value: String },
    #[error("no rule can set `{device}` to `{foil}` and the device cannot be set directly")]
    UnachievableFoil { device: String, foil: String },
    #[error("no change set of at most {cap} changes makes `{device}` `{foil}`")]
    NoCandidates { device: String, foil: String, cap: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl ExplainError {
    pub fn code(&self) -> &'static str {
        match self {
            ExplainError::UnknownDevice(_) | ExplainError::UnknownState { .. } => "invalid-request",
            ExplainError::NoExplanandum { .. } => "no-explanandum",
            ExplainError::UnachievableFoil { .. } => "unachievable-foil",
            ExplainError::NoCandidates { .. } => "no-candidates",
            ExplainError::InvalidConfig(_) => "invalid-config",
            ExplainError::Engine(e) => e.code(),
        }
    }
}
