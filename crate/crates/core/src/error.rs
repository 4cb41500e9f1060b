use thiserror::Error;

/// Errors produced by the solvers and evaluators in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter tuple violates one of the admissibility inequalities.
    /// The message is the violated inequality, e.g. `requires mu < ((N-p)/p)^p`.
    #[error("{0}")]
    InvalidParams(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root bracket could not be established or bisection did not converge.
    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("step size underflow at x = {x} (h = {h:e})")]
    StepUnderflow { x: f64, h: f64 },

    #[error("solution overflow at x = {x}")]
    Overflow { x: f64 },

    #[error("step budget of {0} exhausted")]
    StepBudget(usize),

    /// Shooting found no sign change of the boundary defect in the amplitude bracket.
    #[error("no sign change of the shooting defect on [{lo:e}, {hi:e}]")]
    NoSignChange { lo: f64, hi: f64 },

    /// Shooting found more than one positive solution where exactly one is expected.
    /// Reported as a verification failure.
    #[error("multiple shooting roots found: {0:?}")]
    MultipleRoots(Vec<f64>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors that signal a numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootFinding(_)
                | Error::Quadrature { .. }
                | Error::StepUnderflow { .. }
                | Error::Overflow { .. }
                | Error::StepBudget(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
