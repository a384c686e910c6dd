use thiserror::Error;

/// Errors raised by the constructions and maps of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A coupling-constant inequality failed. The payload names the inequality.
    #[error("parameter constraint violated: {0}")]
    Parameter(String),

    /// A point lies on or outside the domain required by an operation.
    #[error("domain violation: {0}")]
    Domain(String),

    /// The dual point sits on the boundary of the closed chamber, where the
    /// angle chart is undefined. Use the oscillator chart there.
    #[error("degenerate torus: {0}")]
    DegenerateTorus(String),

    /// The oscillator point has a vanishing component, so angles are undefined.
    #[error("degenerate chart: z_{index} = 0")]
    DegenerateChart { index: usize },

    /// A matrix failed its structure check before a decomposition.
    #[error("structure check failed for {tag}: residual {residual:e} > {tol:e}")]
    Structure { tag: &'static str, residual: f64, tol: f64 },

    /// A matrix that must be invertible was (numerically) singular.
    #[error("singular matrix")]
    Singular,

    /// Eigenvalues could not be matched in the expected pairs.
    #[error("spectrum pairing failed: {0}")]
    Pairing(String),

    /// An internal self-check between two independent routes disagreed.
    #[error("consistency violation: {0}")]
    Consistency(String),

    /// Division by a quantity that vanishes when strong regularity fails.
    #[error("strong regularity violated: {0}")]
    StrongRegularity(String),

    /// Newton iteration of an implicit step did not converge.
    #[error("newton iteration did not converge at t = {t} (residual {residual:e})")]
    Newton { t: f64, residual: f64 },

    /// A trajectory came within the safety margin of the chart boundary.
    #[error("trajectory approached the domain boundary at t = {t}")]
    BoundaryApproach { t: f64 },

    /// Invalid argument to an operation (dimensions, indices, options).
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
