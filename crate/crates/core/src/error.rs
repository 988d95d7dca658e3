use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("eigensolver failed to converge")]
    NumericalFailure,
    #[error("rank deficient: requested {requested} components, {available} available")]
    RankDeficient { requested: usize, available: usize },
    #[error("automatic rule retained no component")]
    NoComponent,
    #[error("input is not whitened (max deviation {deviation:e})")]
    NotWhitened { deviation: f64 },
    #[error("spatial extents of mask and volume differ")]
    ExtentMismatch,
    #[error("mask selects no voxel")]
    EmptyMask,
    #[error("component index {index} out of range (have {count})")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("no dominant frequency bin")]
    NoDominantBin,
    #[error("zero-variance signal")]
    ZeroVariance,
    #[error("signal is identically zero")]
    AllZero,
    #[error("both binary sequences are all zero")]
    BothAllZero,
    #[error("energy threshold is zero")]
    DegenerateThreshold,
    #[error("singular normal equations")]
    SingularNormalEquations,
}
