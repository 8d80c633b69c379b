use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent must be positive, got {0}")]
    InvalidExponent(String),
    #[error("exponent {0} not supported on the exact path")]
    InexactExponent(String),
    #[error("cell at scale 2^{scale} is too coarse for W_{index} to be constant")]
    CellTooCoarse { index: u64, scale: i32 },
    #[error("dyadic rectangle violates the area-{expected} invariant")]
    BadRectangle { expected: u32 },
    #[error("translation would move support off the half-line")]
    NegativePosition,
    #[error("normalization 2^({num}/{den}) is not representable in Q(\u{221a}2)")]
    InexactNormalization { num: i64, den: i64 },
    #[error("collection of quartiles is not convex")]
    NotConvex,
    #[error("quartile is not below the tree top in the Fefferman order")]
    NotBelowTop,
    #[error("tree is not a {0}-tree")]
    NotJTree(u8),
    #[error("size bound violated: {0}")]
    SizeBound(String),
    #[error("forest hypothesis violated: {0}")]
    ForestHypothesis(String),
    #[error("Calderon-Zygmund input rejected: {0}")]
    CzInput(String),
    #[error("parse error: {0}")]
    Parse(String),
}
