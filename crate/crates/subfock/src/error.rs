use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants map onto the CLI exit-code contract:
/// configuration/parse problems exit 2, validation failures exit 1 and
/// truncation-headroom violations exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("letter {letter} out of range 1..={n}")]
    LetterOutOfRange { letter: usize, n: usize },

    #[error("matrix of {rows}x{cols} entries exceeds the dense size cap {cap}")]
    SizeCap { rows: usize, cols: usize, cap: usize },

    #[error("ambient dimension {ambient} exceeds the hard cap {cap} (n={n}, level {m})")]
    AmbientCap {
        ambient: usize,
        cap: usize,
        n: usize,
        m: usize,
    },

    #[error("tolerance must be positive, got {0}")]
    NonPositiveTol(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("polynomial is not homogeneous: degrees {found} and {expected} in the same expression")]
    NotHomogeneous { expected: usize, found: usize },

    #[error("mixed polynomial modes in one ideal")]
    MixedModes,

    #[error("generators act on different variable counts")]
    MixedVariableCounts,

    #[error("subproduct law violated at split (m,l)=({m},{l}): residual {residual:.3e} > {tol:.1e}")]
    SubproductLaw { m: usize, l: usize, residual: f64, tol: f64 },

    #[error("weight invariance violated at level {m}: relative residual {residual:.3e} > {tol:.1e}")]
    WeightInvariance { m: usize, residual: f64, tol: f64 },

    #[error("level {level} out of range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("degree mismatch: expected {expected}, got {found}")]
    DegreeMismatch { expected: i64, found: i64 },

    #[error("operator ranges do not chain: {0}")]
    RangeMismatch(String),

    #[error("insufficient truncation headroom: need M >= {needed}, have {have}")]
    Headroom { needed: usize, have: usize },

    #[error("unknown system name '{0}' (expected full | symmetric | quantum_plane | monomial)")]
    UnknownSystem(String),

    #[error("empty level range")]
    EmptyRange,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SubproductLaw { .. } | Error::WeightInvariance { .. } => 1,
            Error::Headroom { .. } => 3,
            _ => 2,
        }
    }
}
