use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible equilibrium parameters: {0}")]
    Feasibility(String),

    #[error("fermion density {density:e} is at or above 0.999 of the grid saturation {limit:e}")]
    Saturation { density: f64, limit: f64 },

    #[error("newton solver did not converge after {iterations} iterations (scaled residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("hessian is not positive definite at iteration {iteration}")]
    SingularHessian { iteration: usize },

    #[error("cell {cell}: {source}")]
    Cell {
        cell: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("diagnostic error: {0}")]
    Diagnostic(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Broad classes used by the command line front end to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Solver,
    Invariant,
    Other,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Parse { .. } => ErrorKind::Config,
            Error::Domain(_)
            | Error::Feasibility(_)
            | Error::Saturation { .. }
            | Error::NonConvergence { .. }
            | Error::SingularHessian { .. }
            | Error::Diagnostic(_) => ErrorKind::Solver,
            Error::Invariant(_) => ErrorKind::Invariant,
            Error::Cell { source, .. } => source.kind(),
            Error::Io(_) | Error::Csv(_) => ErrorKind::Other,
        }
    }

    pub(crate) fn in_cell(self, cell: usize) -> Error {
        match self {
            e @ Error::Cell { .. } => e,
            e => Error::Cell {
                cell,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
