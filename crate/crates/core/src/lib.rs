//! Memory-based learning and back-off smoothing over symbolic feature
//! patterns.
//!
//! The k-NN classifier with the (optionally information-gain weighted)
//! overlap metric groups training instances into buckets of equal distance
//! from a query. Those buckets decompose into schemata, which are exactly the
//! terms of an explicit back-off estimator, so the two can be run side by
//! side and compared: see [`backoff::equivalence_check`].

pub mod backoff;
pub mod corpus_io;
pub mod error;
pub mod eval;
pub mod instance;
pub mod metrics;
pub mod neighbors;
pub mod weighting;

pub use error::{Error, Result};
pub use instance::{
    build_instance_base, normalize_counts, pattern, ClassDistribution, ClassLabel, FeatureKind,
    FeatureValue, Instance, InstanceBase, Symbol,
};

/// Absolute tolerance under which distances, weights and masses are tied.
pub const TIE_TOLERANCE: f64 = 1e-12;
