use thiserror::Error;

use crate::dp::Eps;

/// Reason a ledger block failed verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptKind {
    /// Line is not a well-formed block.
    Malformed,
    /// Recomputed hash differs from the stored one.
    HashMismatch,
    /// prev_hash does not equal the previous block's hash.
    BrokenLink,
    /// First block is not a well-formed config block.
    BadGenesis,
    /// Release sequence numbers are not dense from zero.
    BadSeq,
    /// A release block carries a non-positive or non-finite amount.
    BadAmount,
}

impl std::fmt::Display for CorruptKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CorruptKind::Malformed => "malformed block",
            CorruptKind::HashMismatch => "hash mismatch",
            CorruptKind::BrokenLink => "broken chain link",
            CorruptKind::BadGenesis => "bad genesis block",
            CorruptKind::BadSeq => "non-dense sequence numbers",
            CorruptKind::BadAmount => "invalid spend amount",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),
    #[error("attribute `{attr}` is {actual}, but the operation needs it {expected}")]
    KindMismatch {
        attr: String,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("comparator `{cmp}` orders values; attribute `{attr}` is categorical")]
    OrderingOnCategorical { attr: String, cmp: &'static str },
    #[error("{kind} requires a numeric target attribute")]
    MissingTarget { kind: &'static str },
    #[error("selection is empty; {kind} is undefined")]
    EmptySelection { kind: &'static str },
    #[error("true value is zero, relative error is undefined")]
    ZeroTrueValue,
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("sensitivity must be positive and finite, got {0}")]
    BadSensitivity(f64),
    #[error("required accuracy must lie in (0, 1), got {0}")]
    BadAccuracyTarget(f64),
    #[error("charging {charge} would exceed the remaining budget {remaining}")]
    BudgetExceeded { charge: Eps, remaining: Eps },
    #[error("refusing to record a release with non-positive cost")]
    ZeroCharge,
    #[error("ledger block {index}: {kind}")]
    LedgerCorrupt { index: u64, kind: CorruptKind },
    #[error("ledger head changed on disk (file truncated or rewritten)")]
    LedgerHeadMismatch,
    #[error("released value must be finite")]
    NonFiniteValue,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed request: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
