use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HybridError {
    #[error("registry mismatch: {0}")]
    RegistryMismatch(String),

    #[error("base amplitude mismatch: {0} vs {1}")]
    AlphaMismatch(f64, f64),

    #[error("duplicate mode name `{0}`")]
    DuplicateMode(String),

    #[error("unknown mode `{0}`")]
    UnknownMode(String),

    #[error("mode `{mode}` has kind {found}, expected {expected}")]
    ModeKind {
        mode: String,
        expected: &'static str,
        found: &'static str,
    },

    #[error("label for mode `{0}` does not match its kind")]
    LabelKind(String),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("state has support outside the logical span (relative residual {0:.3e})")]
    OutsideLogicalSpan(f64),

    #[error("mode `{0}` carries labels of more than one nonzero magnitude")]
    NonuniformMagnitude(String),

    #[error("exact mode requires a seeded random number generator")]
    MissingRng,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("inconsistent helper outcomes: {0}")]
    InconsistentHelpers(String),

    #[error("no unique correction restores the secret: {0}")]
    CorrectionSearch(String),

    #[error("malformed state dump: {0}")]
    Dump(String),
}

pub type Result<T> = std::result::Result<T, HybridError>;
