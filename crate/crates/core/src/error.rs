use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("register `{0}` declared twice")]
    DuplicateRegister(String),
    #[error("register `{0}` has dimension 0")]
    ZeroDimension(String),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("total Hilbert dimension does not fit in a 64-bit basis key")]
    DimensionOverflow,
    #[error("expected {expected} register values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("value {value} out of range for register `{register}` of dimension {dim}")]
    ValueOutOfRange {
        register: String,
        value: u64,
        dim: u64,
    },
    #[error("register `{0}` is not |0> in every branch")]
    RegisterNotZero(String),
    #[error("registers `{src}` ({src_dim}) and `{dst}` ({dst_dim}) differ in dimension")]
    DimensionMismatch {
        src: String,
        src_dim: u64,
        dst: String,
        dst_dim: u64,
    },
    #[error("oracle writes into its own input register `{0}`")]
    OracleAliasing(String),
    #[error("phase {0} is not of unit modulus")]
    NonUnitPhase(f64),
    #[error("state has zero norm")]
    ZeroNorm,

    #[error("period {period} does not divide modulus {modulus}")]
    PeriodDoesNotDivide { period: u64, modulus: u64 },
    #[error("promise violated: {0}")]
    PromiseViolation(String),
    #[error("no period up to {0}")]
    NoPeriodFound(u64),
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("gcd({a}, {n}) = {gcd} != 1")]
    NotCoprime { a: u64, n: u64, gcd: u64 },
    #[error("{0} is prime")]
    Prime(u64),
    #[error("{n} = {base}^{exp} is a prime power")]
    PrimePower { n: u64, base: u64, exp: u32 },
    #[error("{n} exceeds the quantum simulation bound {bound}")]
    BeyondSimulationBound { n: u64, bound: u64 },
    #[error("prime factor {0} of the encoding lies outside the universe")]
    OutsideUniverse(u64),
    #[error("{0} is not squarefree and cannot encode a set")]
    NotSquarefree(u64),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("protocol rejected: {0}")]
    Rejected(String),
    #[error("register `{register}` is held by party {holder}, not party {party}")]
    NotHolder {
        register: String,
        holder: usize,
        party: usize,
    },
}
