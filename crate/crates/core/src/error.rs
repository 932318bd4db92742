use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("generator index {index} outside rank {rank}")]
    InvalidGenerator { index: u32, rank: u32 },
    #[error("rank mismatch: operand uses generator {index}, context rank is {rank}")]
    RankMismatch { index: u32, rank: u32 },
    #[error("unsupported quotient: {0}")]
    UnsupportedQuotient(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("element is not in the subgroup")]
    NotInSubgroup,
    #[error("subgroup generators do not form a free basis")]
    NotFreeBasis,
    #[error("element is not in the kernel of the quotient map")]
    NotInKernel,
    #[error("element is not in the verbal subgroup N11")]
    NotInVerbal,
    #[error("identity element has no lower-central class")]
    IdentityElement,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("lower-central class {class} exceeds the signature bound {max}")]
    LevelOutOfRange { class: usize, max: usize },
    #[error("inconclusive at truncation degree {0}")]
    Inconclusive(usize),
    #[error("zero element has no leading form")]
    ZeroElement,
    #[error("no layer assigned to factor {0}")]
    UnknownLayer(usize),
    #[error("elementary transformation with zero factor")]
    ZeroFactor,
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("shadow of the matrix is not triangular: {0}")]
    ShadowNotTriangular(String),
    #[error("unsupported ring: {0}")]
    UnsupportedRing(String),
    #[error("{m} relators is not fewer than rank {n}")]
    TooManyRelators { m: usize, n: usize },
    #[error("rank {0} is too small; the freedom test needs rank > 2")]
    RankTooSmall(u32),
    #[error("parse error at column {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}
