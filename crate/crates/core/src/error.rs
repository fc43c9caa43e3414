use std::fmt;

use thiserror::Error;

/// Pipeline stage tag attached to errors raised inside [`crate::solver::solve_ups_perspective`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Factorize,
    Constraint,
    Minors,
    Ambiguity,
    Extract,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Factorize => "factorize",
            Stage::Constraint => "sh1-constraint",
            Stage::Minors => "minor-system",
            Stage::Ambiguity => "ambiguity-recovery",
            Stage::Extract => "extract",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty domain: no pixel has a valid stencil")]
    EmptyDomain,
    #[error("wrong projection: operation requires a {expected} camera")]
    WrongProjection { expected: &'static str },
    #[error("non-positive depth at {count} masked pixels")]
    NonPositiveDepth { count: usize },
    #[error("log-depth denominator vanishes at every masked pixel")]
    SingularDenominator,
    #[error("c4 vanishes at every masked pixel")]
    VanishingC4,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("masks of the inputs differ")]
    MaskMismatch,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("lighting matrix is rank deficient (singular value ratio {ratio:e})")]
    RankDeficientLighting { ratio: f64 },
    #[error("matrix is not a scaled Lorentz transformation (residual {residual:e})")]
    NotLorentz { residual: f64 },
    #[error("boost velocity must satisfy |v| < 1, got {norm}")]
    BadBoost { norm: f64 },
    #[error("minor index out of bounds")]
    IndexOutOfBounds,
    #[error("too few pixels: {rows} rows for {cols} unknowns")]
    TooFewPixels { rows: usize, cols: usize },
    #[error("image matrix is not rank 4 (sigma4/sigma1 = {ratio:e})")]
    RankDeficientImages { ratio: f64 },
    #[error("quadratic form has signature ({negative}-, {positive}+), expected (1-, 3+)")]
    BadSignature { negative: usize, positive: usize },
    #[error("degenerate surface: integrability matrix condition ratio {ratio:e}")]
    DegenerateSurface { ratio: f64 },
    #[error("minor matrix Delta is singular")]
    SingularDelta,
    #[error("least-squares system for v is ill conditioned (cond {cond:e})")]
    IllConditionedLS { cond: f64 },
    #[error("column {index} of the recovered surface matrix vanishes")]
    ZeroColumn { index: usize },
    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
