use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("instance base is empty")]
    EmptyBase,
    #[error("instance {index} has arity {found}, expected {expected}")]
    MixedArity {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("feature {feature} mixes symbolic and vector values (or vector dimensions)")]
    MixedKind { feature: usize },
    #[error("negative count {count} for class {label}")]
    NegativeCount { label: String, count: f64 },
    #[error("distribution has no positive mass")]
    EmptyDistribution,
    #[error("feature {feature} holds numeric vectors")]
    NumericFeature { feature: usize },
    #[error("feature index {feature} out of range for arity {arity}")]
    FeatureOutOfRange { feature: usize, arity: usize },
    #[error("invalid weight {weight} for feature {feature}")]
    NegativeWeight { feature: usize, weight: f64 },
    #[error("expected {expected} weights, got {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("bin count must be at least 1")]
    ZeroBins,
    #[error("feature values differ in kind")]
    KindMismatch,
    #[error("vector dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("query arity {found} does not match {expected}")]
    QueryArity { expected: usize, found: usize },
    #[error("arity {0} is too large for schema enumeration (max 30)")]
    ArityTooLarge(usize),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("invalid interpolation weights: {0}")]
    InvalidLambdas(String),
    #[error("line {line}: expected {expected} tokens, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("file contains no cases")]
    EmptyFile,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("token `{0}` is not in the vector lexicon")]
    MissingToken(String),
    #[error("invalid feature template `{0}`")]
    InvalidTemplate(String),
    #[error("fold count must be at least 2, got {0}")]
    InvalidFolds(usize),
    #[error("need at least {needed} cases, got {found}")]
    TooFewCases { needed: usize, found: usize },
    #[error("sample lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("at least two paired samples are required")]
    TooFewSamples,
    #[error("differences have zero variance but nonzero mean")]
    DegenerateVariance,
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
