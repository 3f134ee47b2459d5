use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),

    #[error("{what} is not available on this lattice: {why}")]
    Incompatible { what: String, why: String },

    #[error("site {0} appears in more than one pair")]
    OverlappingPairs(usize),

    #[error("site index {index} out of range for {len} sites")]
    SiteOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("gap closed (min gap {gap:.3e} at E={at}): no invariant defined")]
    GapClosed { gap: f64, at: GapCenter },

    #[error("invariant not quantized: raw value {raw} is {residual:.3e} from the nearest integer")]
    NotQuantized { raw: f64, residual: f64 },

    #[error("Bloch vector undefined at a gap-closing point (|sin E| = {0:.3e})")]
    UndefinedDirection(f64),

    #[error("neighbor site {site} is resonant with the target pair")]
    ResonantCollision { site: usize },

    #[error("target fidelity {0} is unreachable at any drive strength")]
    Unreachable(f64),

    #[error("integration failed: {0}")]
    Integration(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapCenter {
    Zero,
    Pi,
}

impl std::fmt::Display for GapCenter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GapCenter::Zero => write!(f, "0"),
            GapCenter::Pi => write!(f, "pi"),
        }
    }
}
