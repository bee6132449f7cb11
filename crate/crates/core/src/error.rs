use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative probability {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("input pair (a={a}, b={b}) sums to {sum}, expected 1")]
    NotNormalized { a: u8, b: u8, sum: f64 },

    #[error("expected {expected} entries, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("negative mixing weight {0}")]
    NegativeWeight(f64),

    #[error("mixing weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("box index {0} out of range 0..8")]
    BoxIndex(usize),

    #[error("CHSH value {0} is below 2; the fragment only holds boxes with Λ in [2, 4]")]
    OutOfFragment(f64),

    #[error("no non-negative decomposition over the sixteen extreme boxes: {0}")]
    NotInFragment(String),

    #[error("parameter {name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("inconsistent conditioning: {0}")]
    Conditioning(String),

    #[error("unsupported subset: {0}")]
    UnsupportedSubset(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid variant: {0}")]
    Variant(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("linear program: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
