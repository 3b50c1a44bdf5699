use crate::numerics::roots::RootError;
use thiserror::Error;

/// Errors raised by the library. [`SmotError::category`] groups them for exit codes.
#[derive(Debug, Error)]
pub enum SmotError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what}: value {value} outside the admissible domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },
    #[error("convex-decreasing order violated between t={s} and t={t} at strike k={k} (put {put_s} > {put_t})")]
    OrderViolation {
        s: f64,
        t: f64,
        k: f64,
        put_s: f64,
        put_t: f64,
    },
    #[error("{context}: {source}")]
    Convergence {
        context: String,
        #[source]
        source: RootError,
    },
    #[error("{context}: root not bracketed on [{a}, {b}] (values {fa}, {fb})")]
    RootBracket {
        context: String,
        a: f64,
        b: f64,
        fa: f64,
        fb: f64,
    },
    #[error("monotonicity violated in {context} near x={x}")]
    Monotonicity { context: String, x: f64 },
    #[error("{count} sign changes of the spatial derivative of dtF at t={t}; expected a single minimiser")]
    MultipleExtrema { t: f64, count: usize },
    #[error("inversion failed in {context}")]
    Inversion { context: String },
    #[error("step overflow at t={t}, x={x}: {detail}")]
    StepOverflow { t: f64, x: f64, detail: String },
    #[error("cost function violates the cost assumption (c(x,x)=c_y(x,x)=0, c_xy>0, c_xyy<0): {0}")]
    CostAssumption(String),
    #[error("dispersion assumption fails: {0}")]
    Dispersion(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Coarse classification used by the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Numerical,
    Io,
}

impl SmotError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            SmotError::InvalidInput(_)
            | SmotError::Domain { .. }
            | SmotError::OrderViolation { .. }
            | SmotError::CostAssumption(_)
            | SmotError::Dispersion(_)
            | SmotError::Parse(_) => ErrorCategory::Validation,
            SmotError::Convergence { .. }
            | SmotError::RootBracket { .. }
            | SmotError::Monotonicity { .. }
            | SmotError::MultipleExtrema { .. }
            | SmotError::Inversion { .. }
            | SmotError::StepOverflow { .. } => ErrorCategory::Numerical,
            SmotError::Io(_) => ErrorCategory::Io,
        }
    }

    pub(crate) fn root(context: impl Into<String>, err: RootError) -> Self {
        let context = context.into();
        match err {
            RootError::NotBracketed { a, b, fa, fb } => SmotError::RootBracket { context, a, b, fa, fb },
            other => SmotError::Convergence { context, source: other },
        }
    }
}

pub type Result<T> = std::result::Result<T, SmotError>;
