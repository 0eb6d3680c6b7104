use thiserror::Error;

/// Errors raised by the construction and verification pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `offset` is the 1-based byte position where parsing stopped.
    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },

    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),

    #[error("singular jet operation: {0}")]
    SingularJet(String),

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("protected vectors are linearly dependent")]
    DependentProtected,

    #[error("degenerate metric (determinant {0:e})")]
    DegenerateMetric(f64),

    #[error("normal part of the conjugate surface vanishes (|h^N| = {0:e})")]
    DegeneratePoint(f64),

    #[error("conjugate surface passes through the origin (|h| = {0:e})")]
    NullConjugate(f64),

    #[error("rank deficiency: {0}")]
    RankDeficiency(String),

    #[error("a = sqrt(1 - |grad r|^2) nearly vanishes ({0:e})")]
    NearVanishingA(f64),

    #[error("grid has no points inside the curve domain")]
    EmptyGrid,

    #[error("immersion is singular (rank margin {0:e})")]
    SingularPoint(f64),

    #[error("mean curvature vanishes; no distinguished normal direction")]
    MinimalPoint,

    #[error("shape operators are not in equality form: {0}")]
    NotEqualityForm(String),

    #[error("matrix is not traceless (trace {0:e})")]
    NotTraceless(f64),

    #[error("point lies on the singular set of the map: {0}")]
    MapSingularity(String),

    #[error("tangent frames do not correspond: {0}")]
    FrameMismatch(String),

    #[error("curve lies in the null quadric; holomorphic inversion undefined")]
    NullQuadricCurve,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
