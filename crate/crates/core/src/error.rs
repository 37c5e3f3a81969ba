use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("Mittag-Leffler E_{{{a},{b}}}({z}) not evaluated to tolerance {tol:e}")]
    AccuracyNotAchieved { a: f64, b: f64, z: f64, tol: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("Picard iteration did not converge after {iterations} iterations (last increment {last_increment:e}, contraction ratio {ratio:.3})")]
    NonConvergence {
        iterations: usize,
        last_increment: f64,
        ratio: f64,
    },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures caused by the numerics rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::AccuracyNotAchieved { .. }
                | Error::NonConvergence { .. }
                | Error::InsufficientResolution(_)
        )
    }
}

/// Non-fatal numerical diagnostics attached to a result.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Discrete derivative exceeded `max|φ|/dt²`.
    DerivativeBlowUp {
        order: f64,
        max_abs: f64,
        bound: f64,
    },
    /// Kernel symbol at the Nyquist wavenumber is not negligible.
    UnderResolvedKernel { nyquist_symbol: f64, reference: f64 },
    /// The last time interval carries too much of a singular time integral.
    SingularQuadrature { last_fraction: f64 },
    /// Picard increments grew between two iterations.
    LipschitzViolation { iteration: usize, ratio: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DerivativeBlowUp { order, max_abs, bound } => write!(
                f,
                "derivative of order {order} reached {max_abs:e}, above the stability bound {bound:e}"
            ),
            Warning::UnderResolvedKernel {
                nyquist_symbol,
                reference,
            } => write!(
                f,
                "kernel under-resolved: Nyquist symbol {nyquist_symbol:e} vs zero-mode {reference:e}"
            ),
            Warning::SingularQuadrature { last_fraction } => write!(
                f,
                "singular time quadrature: last interval carries {:.1}% of the integral",
                100.0 * last_fraction
            ),
            Warning::LipschitzViolation { iteration, ratio } => write!(
                f,
                "Picard increment grew at iteration {iteration} (ratio {ratio:.3})"
            ),
        }
    }
}

/// A value together with the warnings raised while computing it.
#[derive(Debug, Clone)]
pub struct Diagnosed<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Diagnosed<T> {
    pub fn clean(value: T) -> Self {
        Diagnosed {
            value,
            warnings: Vec::new(),
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Diagnosed<U> {
        Diagnosed {
            value: f(self.value),
            warnings: self.warnings,
        }
    }

    pub fn into_value(self) -> T {
        for w in &self.warnings {
            log::warn!("{w}");
        }
        self.value
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!("{what}[{i}] = {}", values[i]))),
        None => Ok(()),
    }
}
