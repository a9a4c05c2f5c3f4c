use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("polynomial layouts differ")]
    LayoutMismatch,

    #[error("exponential requires a zero constant term")]
    NonzeroConstantTerm,

    #[error("derivative orders {orders:?} exceed truncation caps {caps:?}")]
    OrdersExceedCaps { orders: Vec<u8>, caps: Vec<u8> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A physical output violated its range; signals a convention or matrix bug.
    #[error("numerical validation failed: {0}")]
    Validation(String),

    /// The heralding event has zero probability, so the conditional state is undefined.
    #[error("heralding probability vanishes ({0:e})")]
    VanishingProbability(f64),

    #[error("objective is non-finite over the whole search interval")]
    FlatObjective,

    #[error("Fock cutoff exceeded the hard limit of {0} photons")]
    CutoffExceeded(usize),
}
