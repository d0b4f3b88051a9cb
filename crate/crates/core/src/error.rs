use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure conditions surfaced by the library. Every operation that can
/// reject its input does so through one of these variants; none of them is
/// recoverable by retrying with the same arguments.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("use table must be nondecreasing (violation at position {position})")]
    NonMonotone { position: u64 },

    #[error("leftmost change is undefined for equal inputs")]
    EqualInputs,

    #[error("interval ({lo}, {hi}] is empty or reversed")]
    EmptyInterval { lo: String, hi: String },

    #[error("truncated sum depth {depth} requires a signature index below {limit}")]
    DepthOutOfRange { depth: usize, limit: usize },

    #[error("signature index {index} out of range for signature of length {len}")]
    SignatureIndex { index: usize, len: usize },

    #[error("position {position} is not covered by the signature or table")]
    PositionUncovered { position: String },

    #[error("signature exhausted before a block boundary satisfied the threshold")]
    SignatureExhausted,

    #[error("{what} exceeded its budget of {budget}")]
    BudgetExceeded { what: &'static str, budget: String },

    #[error("stepwise run of {steps} moves exceeds the step cap {cap}")]
    StepCapExceeded { steps: String, cap: u64 },

    #[error("fast evaluation requires a nondecreasing demand map")]
    FastEvalNonMonotone,

    #[error("strategy response at step {step} leaves the demanded prefix unchanged")]
    DemandUnsatisfied { step: u64 },

    #[error("offset spans position {offset_len}, but the run demands position {demand} inside it")]
    OffsetTooCoarse { offset_len: u64, demand: u64 },

    #[error("approximation values must be nondecreasing (violation at stage {stage})")]
    NotNondecreasing { stage: usize },

    #[error("approximation value at stage {stage} lies outside [0, 1]")]
    ValueOutOfRange { stage: usize },

    #[error("stage {stage} out of range for a sequence of {len} stages")]
    StageOutOfRange { stage: usize, len: usize },

    #[error("sequences must have equal length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("approximation changes its integer part at stage {stage}; digit items are undefined there")]
    IntegerPartChange { stage: usize },

    #[error("coded set has length {len}, expected {expected}")]
    CorruptCodedSet { len: usize, expected: usize },

    #[error("coded set block {block} is not of the form ones-then-zeros")]
    CorruptBlock { block: u32 },

    #[error("codeword space exhausted: no free string of length at most {requested}")]
    CapacityExceeded { requested: u64 },

    #[error("tail weight never drops below 1 within the table (threshold search reached {reached})")]
    WeightUnsatisfiable { reached: u64 },

    #[error("argument {n} was enumerated more than once")]
    DuplicateEnumeration { n: u64 },

    #[error("argument {n} does not exceed the weight threshold {threshold}")]
    BelowThreshold { n: u64, threshold: u64 },

    #[error("no stage of the approximation matches the supplied oracle prefix")]
    NoMatchingStage,

    #[error("position {position} does not fit in a machine word, so the quantum cannot be materialized")]
    PositionOverflow { position: String },

    #[error("construction plan references block {block}, but only {blocks} blocks exist")]
    BlockOutOfRange { block: usize, blocks: usize },

    #[error("adversary count {got} does not match the plan's {want} requirements")]
    AdversaryCount { got: usize, want: usize },

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },
}
