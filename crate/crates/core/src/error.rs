use alloc::string::String;

use crate::formula::ParseError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("channel `{0}` already exists")]
    DuplicateChannel(String),
    #[error("time index {t} out of range (t_final = {t_final})")]
    TimeOutOfRange { t: usize, t_final: usize },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("predicate evaluation is undefined: {0}")]
    UndefinedPredicate(String),
    #[error("signals are not comparable: {0}")]
    Mismatch(String),
    #[error("temporal window starts beyond the end of the trace")]
    IntervalBeyondTrace,
    #[error("formula has unbounded intervals; a horizon is required")]
    HorizonRequired,
    #[error("formula was laid out for horizon {expected:?}, signal has t_final = {found}")]
    HorizonMismatch { expected: Option<usize>, found: usize },
    #[error("pinned weight block at {path} has {found} entries, expected {expected}")]
    PinnedBlockLength {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("no value for weight slot {0}")]
    MissingWeight(String),
    #[error("unknown weight slot {0}")]
    UnknownSlot(String),
    #[error("weight for slot {slot} must be positive and finite, got {value}")]
    InvalidWeight { slot: String, value: f64 },
    #[error("formula has no weighted operator")]
    NoWeightedOperator,
    #[error("formula has no parameter slots")]
    NoParameters,
    #[error("constant weight slots cannot be rescaled")]
    ConstantSlots,
    #[error("infinity sentinel {sentinel} is smaller than a finite leaf value {value}")]
    SentinelTooSmall { sentinel: f64, value: f64 },
    #[error("preference dataset is empty")]
    EmptyDataset,
    #[error("unknown signal id `{0}`")]
    UnknownSignal(String),
    #[error("pair compares signal `{0}` with itself")]
    SelfPair(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parameters out of range: {0}")]
    ParamsOutOfRange(String),
    #[error("rejection sampling accepted {accepted} of {draws} draws; ranges are inconsistent")]
    LowAcceptance { accepted: usize, draws: usize },
    #[error("cannot form {requested} pairs above threshold {threshold} (only {available} available)")]
    InfeasiblePairs {
        requested: usize,
        available: usize,
        threshold: f64,
    },
}
