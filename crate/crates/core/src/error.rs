use alloc::string::String;

use crate::tiling::Hypothesis;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("encoding length {0} is outside 1..=4")]
    RankOutOfRange(usize),
    #[error("encoding length mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("set is empty")]
    EmptySet,
    #[error("epsilon must be positive")]
    InvalidEpsilon,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TilingError {
    #[error("delta = {0} must satisfy 0 < δ ≤ 0.1")]
    DeltaOutOfRange(f64),
    #[error("packing constant c must be at least 1")]
    InvalidPacking,
    #[error("formula requires {required} scales, above the cap of {cap}")]
    ScaleCountExceeded { required: usize, cap: usize },
    #[error("no epsilon on the 1/10000 grid satisfies the growth inequality")]
    NoValidEpsilon,
    #[error("empty set in sequence at position {0}")]
    EmptyMember(usize),
    #[error("density {0} must lie in (0, 1]")]
    InvalidDensity(f64),
    #[error("hypothesis violated: {hypothesis}: {detail}")]
    Precondition { hypothesis: Hypothesis, detail: String },
    #[error("cannot satisfy {hypothesis} at this scale: {hint}")]
    Unsatisfiable { hypothesis: Hypothesis, hint: String },
    #[error("internal invariant failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SectionError {
    #[error("point {0} is not in the castle base")]
    NotInBase(usize),
    #[error("castle base is empty")]
    EmptyBase,
    #[error("epsilon must be positive")]
    InvalidEpsilon,
    #[error("castle range has measure {range} which does not exceed delta = {delta}")]
    RangeTooSmall { range: f64, delta: f64 },
    #[error("invalid castle: {0}")]
    InvalidCastle(String),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("section rule never fired on any orbit")]
    NoHits,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EntropyError {
    #[error("cover element {0} is not contained in the base")]
    CoverNotInBase(usize),
    #[error("base of size {size} exceeds the brute-force cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("pattern space too large: |F| log2|alphabet| = {0:.2} > 40")]
    PatternGuard(f64),
    #[error("sample size {0} is below the minimum of 10000")]
    SampleTooSmall(usize),
    #[error("cylinder has probability zero")]
    NullCylinder,
    #[error("castle covers {coverage:.4} of the sample, need more than {need:.4}")]
    Coverage { coverage: f64, need: f64 },
    #[error("U-translates of the section overlap at {0:?}")]
    Overlap(crate::group::Element),
    #[error("window is empty")]
    EmptyWindow,
    #[error("partition labels do not match the sample size")]
    LabelMismatch,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Section(#[from] SectionError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("probability vector must be nonnegative and sum to 1")]
    BadProbabilities,
    #[error("transition matrix must be square with rows summing to 1")]
    BadMatrix,
    #[error("stationary vector does not satisfy pi P = pi")]
    BadStationary,
    #[error("roof values must be at least 1")]
    BadRoof,
    #[error("cylinder has probability zero")]
    NullCylinder,
    #[error("system cannot act on {0}")]
    IncompatibleGroup(&'static str),
    #[error("no closed-form entropy for this composition")]
    NoClosedForm,
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("matrix is reducible or periodic")]
    Reducible,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MixingError {
    #[error("cannot place {size} separated points in the window")]
    Infeasible { size: usize },
    #[error("gaps must be at least 1")]
    BadGap,
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Group(#[from] GroupError),
}
