//! Per-feature distances and the weighted aggregate distance.

use crate::error::{Error, Result};
use crate::instance::{FeatureKind, FeatureValue};
use crate::weighting::FeatureWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMetric {
    Overlap,
    Cosine,
}

/// Per-feature metric choice plus feature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    metrics: Vec<FeatureMetric>,
    weights: FeatureWeights,
}

impl MetricConfig {
    pub fn new(metrics: Vec<FeatureMetric>, weights: FeatureWeights) -> Result<Self> {
        if metrics.len() != weights.len() {
            return Err(Error::WeightCount {
                expected: metrics.len(),
                found: weights.len(),
            });
        }
        Ok(MetricConfig { metrics, weights })
    }

    /// Overlap on symbolic positions, cosine on vector positions.
    pub fn for_kinds(kinds: &[FeatureKind], weights: FeatureWeights) -> Result<Self> {
        let metrics = kinds
            .iter()
            .map(|k| match k {
                FeatureKind::Symbolic => FeatureMetric::Overlap,
                FeatureKind::Vector(_) => FeatureMetric::Cosine,
            })
            .collect();
        MetricConfig::new(metrics, weights)
    }

    pub fn overlap(weights: FeatureWeights) -> Self {
        MetricConfig {
            metrics: vec![FeatureMetric::Overlap; weights.len()],
            weights,
        }
    }

    pub fn arity(&self) -> usize {
        self.metrics.len()
    }

    pub fn metrics(&self) -> &[FeatureMetric] {
        &self.metrics
    }

    pub fn weights(&self) -> &FeatureWeights {
        &self.weights
    }

    /// Checks that each metric fits the feature kind at its position.
    pub fn check_kinds(&self, kinds: &[FeatureKind]) -> Result<()> {
        if kinds.len() != self.arity() {
            return Err(Error::QueryArity {
                expected: self.arity(),
                found: kinds.len(),
            });
        }
        for (m, k) in self.metrics.iter().zip(kinds) {
            match (m, k) {
                (FeatureMetric::Overlap, FeatureKind::Symbolic)
                | (FeatureMetric::Cosine, FeatureKind::Vector(_)) => {}
                _ => return Err(Error::KindMismatch),
            }
        }
        Ok(())
    }
}

/// 0 for equal symbols, 1 otherwise.
pub fn overlap_delta(x: &FeatureValue, y: &FeatureValue) -> Result<f64> {
    match (x, y) {
        (FeatureValue::Symbol(a), FeatureValue::Symbol(b)) => Ok(if a == b { 0.0 } else { 1.0 }),
        _ => Err(Error::KindMismatch),
    }
}

/// Cosine dissimilarity rescaled to [0, 1]: (1 - cos) / 2.
///
/// A zero vector against a nonzero one is maximally distant (1.0); two zero
/// vectors are treated as identical (0.0).
pub fn cosine_delta(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    match (nu == 0.0, nv == 0.0) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(1.0),
        _ => {}
    }
    let cos = (dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0);
    Ok((1.0 - cos) / 2.0)
}

fn feature_delta(metric: FeatureMetric, x: &FeatureValue, y: &FeatureValue) -> Result<f64> {
    match metric {
        FeatureMetric::Overlap => overlap_delta(x, y),
        FeatureMetric::Cosine => match (x, y) {
            (FeatureValue::Vector(u), FeatureValue::Vector(v)) => cosine_delta(u, v),
            _ => Err(Error::KindMismatch),
        },
    }
}

/// Weighted sum of per-feature distances.
pub fn distance(x: &[FeatureValue], y: &[FeatureValue], config: &MetricConfig) -> Result<f64> {
    if x.len() != config.arity() || y.len() != config.arity() {
        return Err(Error::QueryArity {
            expected: config.arity(),
            found: if x.len() != config.arity() {
                x.len()
            } else {
                y.len()
            },
        });
    }
    let mut total = 0.0;
    for ((a, b), (&m, &w)) in x
        .iter()
        .zip(y)
        .zip(config.metrics.iter().zip(config.weights.values()))
    {
        total += w * feature_delta(m, a, b)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::pattern;

    #[test]
    fn overlap_examples() {
        let with = FeatureValue::symbol("with");
        assert_eq!(overlap_delta(&with, &with).unwrap(), 0.0);
        assert_eq!(
            overlap_delta(&with, &FeatureValue::symbol("of")).unwrap(),
            1.0
        );
        assert_eq!(
            overlap_delta(
                &FeatureValue::symbol("zyzzyva"),
                &FeatureValue::symbol("zyzzyva")
            )
            .unwrap(),
            0.0
        );
        assert_eq!(
            overlap_delta(&with, &FeatureValue::vector(vec![1.0])),
            Err(Error::KindMismatch)
        );
    }

    #[test]
    fn cosine_examples() {
        let u = [0.3, -1.2, 2.0];
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        assert!(cosine_delta(&u, &u).unwrap().abs() < 1e-15);
        assert!((cosine_delta(&u, &neg).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_delta(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(cosine_delta(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(cosine_delta(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(
            cosine_delta(&[1.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn weighted_distance_examples() {
        let pp = MetricConfig::overlap(FeatureWeights::user(vec![0.03, 0.03, 0.10, 0.03]).unwrap());
        let x = pattern(&["ate", "pizza", "with", "fork"]);
        assert_eq!(distance(&x, &x, &pp).unwrap(), 0.0);
        let y = pattern(&["saw", "man", "on", "hill"]);
        assert!((distance(&x, &y, &pp).unwrap() - 0.19).abs() < 1e-12);
        let z = pattern(&["ate", "pizza", "on", "fork"]);
        assert!((distance(&x, &z, &pp).unwrap() - 0.10).abs() < 1e-12);
    }

    #[test]
    fn kind_checks() {
        let cfg = MetricConfig::overlap(FeatureWeights::uniform(2));
        assert!(cfg
            .check_kinds(&[FeatureKind::Symbolic, FeatureKind::Symbolic])
            .is_ok());
        assert_eq!(
            cfg.check_kinds(&[FeatureKind::Symbolic, FeatureKind::Vector(3)]),
            Err(Error::KindMismatch)
        );
        assert!(
            MetricConfig::new(vec![FeatureMetric::Overlap], FeatureWeights::uniform(2)).is_err()
        );
    }
}
