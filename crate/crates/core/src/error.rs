use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("truncation mismatch: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },

    #[error("rational power needs constant term 1")]
    NonUnitConstant,

    #[error("cyclic substitution through symbol `{0}`")]
    CyclicSubstitution(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),

    #[error("primitive `{primitive}` has no place `{place}`")]
    UnknownPlace { primitive: String, place: String },

    #[error("variable `{variable}` is not a scale variable of primitive `{primitive}`")]
    ForeignVariable { primitive: String, variable: String },

    #[error("Mellin series of `{primitive}` is materialized to degree {truncation}, needed {needed}")]
    MellinTruncation {
        primitive: String,
        truncation: usize,
        needed: usize,
    },

    #[error("no Mellin series for primitive `{0}`")]
    MissingMellin(String),

    #[error("spec has no charge structure")]
    MissingCharge,

    #[error("invalid charge structure: {0}")]
    InvalidCharge(String),

    #[error("quasi-linear reduction not applicable: {0}")]
    NotQuasiLinear(String),

    #[error("anomalous-dimension equation needs single-place primitives; `{0}` has several places")]
    MultiPlaceGamma(String),

    #[error("invalid spec at {pointer}: {msg}")]
    InvalidSpec { pointer: String, msg: String },

    #[error("arity mismatch: expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
