//! Class entropy, split info, and Information Gain feature weights.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{FeatureKind, FeatureValue, InstanceBase, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Uniform,
    InformationGain,
    UserSupplied,
}

/// How to obtain feature weights from a base.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    Uniform,
    InformationGain,
    UserSupplied(Vec<f64>),
}

/// Equal-width grid used by [`discretize_weights`]. The range is the one
/// observed when the weights were first discretized, so re-binning with the
/// same grid is a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinGrid {
    pub bins: usize,
    pub low: f64,
    pub high: f64,
}

impl BinGrid {
    fn index(&self, w: f64) -> usize {
        let width = (self.high - self.low) / self.bins as f64;
        if width <= 0.0 {
            return 0;
        }
        (((w - self.low) / width).floor().max(0.0) as usize).min(self.bins - 1)
    }

    fn midpoint(&self, index: usize) -> f64 {
        let width = (self.high - self.low) / self.bins as f64;
        self.low + (index as f64 + 0.5) * width
    }
}

/// One nonnegative weight per feature.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureWeights {
    values: Vec<f64>,
    scheme: WeightKind,
    grid: Option<BinGrid>,
}

impl FeatureWeights {
    pub fn uniform(arity: usize) -> Self {
        FeatureWeights {
            values: vec![1.0; arity],
            scheme: WeightKind::Uniform,
            grid: None,
        }
    }

    /// Validates user weights: each must be finite and nonnegative.
    pub fn user(values: Vec<f64>) -> Result<Self> {
        for (feature, &weight) in values.iter().enumerate() {
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(Error::NegativeWeight { feature, weight });
            }
        }
        Ok(FeatureWeights {
            values,
            scheme: WeightKind::UserSupplied,
            grid: None,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scheme(&self) -> WeightKind {
        self.scheme
    }

    pub fn grid(&self) -> Option<BinGrid> {
        self.grid
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Multiplies every weight by `factor` (must be positive).
    pub fn scaled(&self, factor: f64) -> Self {
        FeatureWeights {
            values: self.values.iter().map(|w| w * factor).collect(),
            scheme: WeightKind::UserSupplied,
            grid: None,
        }
    }
}

/// Entropy in bits of a distribution given as nonnegative masses.
pub fn entropy<I>(masses: I) -> Result<f64>
where
    I: IntoIterator<Item = f64>,
{
    let masses: Vec<f64> = masses.into_iter().collect();
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyDistribution);
    }
    let h = masses
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| {
            let p = m / total;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

fn symbolic_column(base: &InstanceBase, feature: usize) -> Result<impl Iterator<Item = &Symbol>> {
    base.check_feature(feature)?;
    if base.kinds()[feature] != FeatureKind::Symbolic {
        return Err(Error::NumericFeature { feature });
    }
    Ok(base
        .instances()
        .iter()
        .map(move |inst| match &inst.values[feature] {
            FeatureValue::Symbol(s) => s,
            FeatureValue::Vector(_) => unreachable!("kind checked at construction"),
        }))
}

/// Entropy of the feature's own value distribution over the base.
pub fn split_info(base: &InstanceBase, feature: usize) -> Result<f64> {
    let mut freq: HashMap<&Symbol, f64> = HashMap::new();
    for v in symbolic_column(base, feature)? {
        *freq.entry(v).or_insert(0.0) += 1.0;
    }
    entropy(freq.into_values())
}

/// Split-info-normalized information gain of `feature`. A constant feature
/// has zero split info and gets weight 0.
pub fn information_gain(base: &InstanceBase, feature: usize) -> Result<f64> {
    let column: Vec<&Symbol> = symbolic_column(base, feature)?.collect();
    let n = column.len() as f64;

    let class_entropy = entropy(base.class_counts().into_values())?;

    let mut per_value: HashMap<&Symbol, HashMap<&Symbol, f64>> = HashMap::new();
    for (value, inst) in column.iter().zip(base.instances()) {
        *per_value
            .entry(value)
            .or_default()
            .entry(&inst.label)
            .or_insert(0.0) += 1.0;
    }

    let mut conditional = 0.0;
    let mut value_freq = Vec::with_capacity(per_value.len());
    for classes in per_value.values() {
        let n_v: f64 = classes.values().sum();
        value_freq.push(n_v);
        conditional += n_v / n * entropy(classes.values().copied())?;
    }

    let si = entropy(value_freq)?;
    if si <= 0.0 {
        return Ok(0.0);
    }
    let gain = (class_entropy - conditional).max(0.0);
    Ok(gain / si)
}

/// Weights for every feature under `scheme`.
pub fn compute_weights(base: &InstanceBase, scheme: &WeightScheme) -> Result<FeatureWeights> {
    match scheme {
        WeightScheme::Uniform => Ok(FeatureWeights::uniform(base.arity())),
        WeightScheme::InformationGain => {
            let values = (0..base.arity())
                .map(|f| information_gain(base, f))
                .collect::<Result<Vec<_>>>()?;
            Ok(FeatureWeights {
                values,
                scheme: WeightKind::InformationGain,
                grid: None,
            })
        }
        WeightScheme::UserSupplied(values) => {
            if values.len() != base.arity() {
                return Err(Error::WeightCount {
                    expected: base.arity(),
                    found: values.len(),
                });
            }
            FeatureWeights::user(values.clone())
        }
    }
}

/// Information gain on symbolic features, with explicit weights for the
/// positions given in `overrides` (required for vector features).
pub fn compute_weights_with_overrides(
    base: &InstanceBase,
    overrides: &[Option<f64>],
) -> Result<FeatureWeights> {
    if overrides.len() != base.arity() {
        return Err(Error::WeightCount {
            expected: base.arity(),
            found: overrides.len(),
        });
    }
    let mut values = Vec::with_capacity(base.arity());
    for (feature, o) in overrides.iter().enumerate() {
        match o {
            Some(w) if w.is_finite() && *w >= 0.0 => values.push(*w),
            Some(w) => {
                return Err(Error::NegativeWeight {
                    feature,
                    weight: *w,
                })
            }
            None => values.push(information_gain(base, feature)?),
        }
    }
    Ok(FeatureWeights {
        values,
        scheme: WeightKind::InformationGain,
        grid: None,
    })
}

/// Maps weights onto the midpoints of `n_bins` equal-width bins spanning
/// their range. Already-binned weights reuse their recorded grid.
pub fn discretize_weights(weights: &FeatureWeights, n_bins: usize) -> Result<FeatureWeights> {
    if n_bins == 0 {
        return Err(Error::ZeroBins);
    }
    if weights.is_empty() {
        return Ok(weights.clone());
    }
    let grid = match weights.grid {
        Some(g) => BinGrid { bins: n_bins, ..g },
        None => {
            let low = weights.values.iter().copied().fold(f64::INFINITY, f64::min);
            let high = weights
                .values
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            BinGrid {
                bins: n_bins,
                low,
                high,
            }
        }
    };
    let values = weights
        .values
        .iter()
        .map(|&w| grid.midpoint(grid.index(w)))
        .collect();
    Ok(FeatureWeights {
        values,
        scheme: weights.scheme,
        grid: Some(grid),
    })
}
