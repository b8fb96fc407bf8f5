use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree overflow: {0} + {1} > 4")]
    DegreeOverflow(usize, usize),

    #[error("expected a form of degree {expected}, got degree {found}")]
    WrongDegree { expected: usize, found: usize },

    #[error("operation requires exact polynomial coefficients")]
    NotExact,

    #[error("sampled coefficient has no partial derivatives and finite differences are not permitted")]
    MissingPartials,

    #[error("interior product of a 0-form")]
    InteriorOfFunction,

    #[error("form does not vanish at the point (max |coefficient| = {0:e})")]
    NotAZero(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("gradient image is not self-dual (residual {0:e}); metric and model disagree")]
    NotSelfDual(f64),

    #[error("eigenvalues nearly degenerate (gap {0:e})")]
    DegenerateEigenvalues(f64),

    #[error("orientation inconsistent: signature (-,-,+) for both tangent directions")]
    OrientationInconsistent,

    #[error("singular point: |det| = {0:e}")]
    Singular(f64),

    #[error("family invalid: {0}")]
    FamilyInvalid(String),

    #[error("unsupported spin-c index {0}")]
    UnsupportedIndex(i64),

    #[error("regular value selection failed after {0} attempts")]
    NoRegularValue(usize),

    #[error("malformed form json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;
