//! Error taxonomy shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("superluminal velocity: |v| = {speed:e} with c = {c:e}")]
    Superluminal { speed: f64, c: f64 },

    #[error("non-finite component in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid input: {0}")]
    Invalid(String),

    /// A query required source state past the end of a sampled history.
    #[error("history exhausted: query at t = {t:e} past last node at t = {last:e}")]
    HistoryExhausted { t: f64, last: f64 },

    /// Field evaluation inside the singularity radius around a point source.
    #[error("singular field: source distance {r:e} below r_min = {r_min:e}")]
    SingularField { r: f64, r_min: f64 },

    #[error("root solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: u32, residual: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Integrator failure with the failing time attached.
    #[error("step failed at t = {t:e}: {source}")]
    StepFailed {
        t: f64,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    /// Time at which a propagated integration failure occurred, if any.
    pub fn failure_time(&self) -> Option<f64> {
        match self {
            SimError::StepFailed { t, .. } => Some(*t),
            _ => None,
        }
    }
}
