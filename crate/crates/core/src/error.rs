use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoseError {
    #[error("matrix is not a rotation (|R Rᵀ - I| = {orthogonality:e}, det = {determinant})")]
    NotARotation { orthogonality: f64, determinant: f64 },
    #[error("invalid line: {0}")]
    InvalidLine(String),
    #[error("Plücker constraint violated (direction·moment = {residual:e})")]
    PlueckerConstraint { residual: f64 },
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("nearest rotation is ambiguous (reflection with repeated singular values)")]
    AmbiguousProjection,
    #[error("translation system is singular")]
    SingularTranslationSystem,
    #[error("objective evaluated to a non-finite value")]
    NonFiniteObjective,
    #[error("no correspondences given")]
    EmptyData,
    #[error("stacked depth system is rank deficient (smallest eigenvalue {min_eigenvalue:e})")]
    RankDeficientSystem { min_eigenvalue: f64 },
    #[error("need at least {needed} correspondences, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("null space of the linear system is not one-dimensional")]
    DegenerateNullspace,
    #[error("linear stationarity system is singular")]
    SingularSystem,
}
