use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed configuration text.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A parameter value violates a documented constraint.
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },

    /// Inputs outside the domain of a closed-form expression.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("steady state did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The linear response has a pole at the requested operating point.
    #[error("singular {what}: |denominator| = {magnitude:e}")]
    Singular { what: &'static str, magnitude: f64 },

    #[error("isolation ratio undefined: T_cw = {t_cw:e}, T_ccw = {t_ccw:e}")]
    UndefinedIsolation { t_cw: f64, t_ccw: f64 },

    #[error("|t| = {magnitude:e} at delta_p = {delta_p} Hz: phase undefined at transmission dip")]
    DipSingularity { delta_p: f64, magnitude: f64 },

    #[error("unknown figure `{0}` (expected fig2, fig3 or fig4)")]
    UnknownFigure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(key: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.to_string(),
            message: message.into(),
        }
    }
}
