use crate::histogram::Topology;

/// Errors raised by distance computations, solvers and file parsers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty distribution")]
    EmptyDistribution,

    #[error("invalid weight {value} at index {index}: weights must be finite and nonnegative")]
    InvalidWeight { index: usize, value: f64 },

    #[error("invalid mass {value} at index {index}: point masses must be finite and positive")]
    InvalidMass { index: usize, value: f64 },

    #[error("position {0} outside [0, 1)")]
    PositionOutOfRange(f64),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("zero total mass")]
    ZeroMass,

    #[error("bin count mismatch: {0} vs {1}")]
    BinMismatch(usize, usize),

    #[error("operation requires {0:?} topology")]
    WrongTopology(Topology),

    #[error("bin index {index} out of range for {bins} bins")]
    BinOutOfRange { index: usize, bins: usize },

    #[error("circular distances need at least 2 bins")]
    TooFewBins,

    #[error("use exact_oracle for concave costs")]
    NonConvexCost,

    #[error("cost is convex increasing; use the quantile solvers (line_ot / circle_ot)")]
    ConvexCost,

    #[error("precision must be positive, got {0}")]
    InvalidPrecision(f64),

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("transport problem of {entries} entries exceeds the cap of {cap}")]
    SizeCapExceeded { entries: usize, cap: usize },

    #[error("infeasible transport: total masses {0} and {1} differ")]
    Infeasible(f64, f64),

    #[error("coincident points: the uncrossed-point search needs pairwise different points")]
    CoincidentPoints,

    #[error("invalid permutation")]
    InvalidPermutation,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown distance `{0}`")]
    UnknownDistance(String),

    #[error("image has no chromatic pixels")]
    NoChromaticPixels,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
