use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Adaptive quadrature gave up before reaching the requested tolerance.
    #[error(
        "quadrature did not converge: estimate {estimate:e} with error {error:e} \
         (tolerance {tolerance:e}, {evaluations} evaluations)"
    )]
    NonConvergence {
        estimate: f64,
        error: f64,
        tolerance: f64,
        evaluations: usize,
    },

    #[error("tail bound {bound:e} not reachable within {max_periods} periods (tolerance {tolerance:e})")]
    TailUnreachable {
        bound: f64,
        tolerance: f64,
        max_periods: usize,
    },

    #[error("grid is not commensurate with the operator lattice: {0}")]
    IncommensurateGrid(String),

    #[error("grid is under-resolved: {0}")]
    UnderResolved(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::TailUnreachable { .. }
                | Error::IncommensurateGrid(_)
                | Error::UnderResolved(_)
                | Error::DegenerateFit(_)
        )
    }
}
