use thiserror::Error;

/// Errors raised by model evaluation, wave construction and time integration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("expression cannot be differentiated: {0}")]
    NotDifferentiable(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("v = {v} lies outside the model domain {domain}")]
    DomainViolation { v: f64, domain: String },

    #[error("capillarity must be positive, got kappa({v}) = {kappa}")]
    NonPositiveCapillarity { v: f64, kappa: f64 },

    #[error("model evaluation produced a non-finite value at v = {v}")]
    NonFiniteModel { v: f64 },

    #[error("no subsonic speed window at v* = {v_star}: p'(v*) = {p_prime} >= 0")]
    NoSubsonicWindow { v_star: f64, p_prime: f64 },

    #[error("no solitary wave at v* = {v_star}, c = {c}: {reason}")]
    NoSolitaryWave { v_star: f64, c: f64, reason: String },

    #[error("sonic degeneracy at v* = {v_star}, c = {c}: {reason}")]
    SonicDegenerate { v_star: f64, c: f64, reason: String },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("periodic domain too small: seam mismatch {mismatch:e} exceeds {threshold:e}")]
    DomainTooSmall { mismatch: f64, threshold: f64 },

    #[error("field left the model domain at t = {t} (last good time {last_good_t})")]
    DomainEscape { t: f64, last_good_t: f64 },

    #[error("non-finite field at t = {t} (last good time {last_good_t})")]
    Diverged { t: f64, last_good_t: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Time of the last successfully completed step, for aborted runs.
    pub fn last_good_time(&self) -> Option<f64> {
        match self {
            Error::DomainEscape { last_good_t, .. } | Error::Diverged { last_good_t, .. } => {
                Some(*last_good_t)
            }
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
