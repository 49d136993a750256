use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a documented invariant. `name` is the parameter.
    #[error("{name}: {message}")]
    Domain { name: &'static str, message: String },

    /// The integrand produced NaN or an infinity inside the open interval.
    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },

    /// Quadrature hit its depth or panel budget before meeting tolerance.
    #[error(
        "quadrature did not converge on [{lo}, {hi}]: value {value}, error estimate {err_estimate}"
    )]
    QuadratureNonConvergence {
        lo: f64,
        hi: f64,
        value: f64,
        err_estimate: f64,
    },

    /// Root finding exhausted `max_iter` with neither tolerance met.
    #[error("root finding did not converge after {iterations} iterations (target {target})")]
    RootNonConvergence { iterations: usize, target: f64 },
}

impl Error {
    pub(crate) fn domain(name: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            name,
            message: message.into(),
        }
    }

    /// True for failures of an iterative numerical method, as opposed to bad input.
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNonConvergence { .. } | Error::RootNonConvergence { .. }
        )
    }
}
