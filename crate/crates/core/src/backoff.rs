//! Explicit back-off estimators over schemata, and the check that k-NN with
//! the unweighted overlap metric reproduces Naive Back-off exactly.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{
    build_instance_base, normalize_counts, ClassDistribution, ClassLabel, FeatureKind,
    FeatureValue, Instance, InstanceBase, Symbol,
};
use crate::metrics::MetricConfig;
use crate::neighbors::{
    enumerate_schemata, majority_counts, masks_with_wildcards, retrieve_neighbors, schema_distance,
    Schema, MAX_SCHEMA_ARITY,
};
use crate::weighting::FeatureWeights;
use crate::TIE_TOLERANCE;

/// Per-instance mismatch masks against one query; schema `w` covers an
/// instance iff its mismatches all fall on wildcards of `w`.
struct SchemaCounter<'a> {
    mismatches: Vec<u32>,
    labels: Vec<&'a ClassLabel>,
}

impl<'a> SchemaCounter<'a> {
    fn new(base: &'a InstanceBase, query: &[FeatureValue]) -> Result<Self> {
        base.check_query(query)?;
        if base.arity() > MAX_SCHEMA_ARITY {
            return Err(Error::ArityTooLarge(base.arity()));
        }
        for (feature, (kind, q)) in base.kinds().iter().zip(query).enumerate() {
            if *kind != FeatureKind::Symbolic || q.as_symbol().is_none() {
                return Err(Error::NumericFeature { feature });
            }
        }
        let mismatches = base
            .instances()
            .iter()
            .map(|inst| {
                inst.values
                    .iter()
                    .zip(query)
                    .enumerate()
                    .filter(|(_, (v, q))| v != q)
                    .fold(0u32, |acc, (i, _)| acc | 1 << i)
            })
            .collect();
        Ok(SchemaCounter {
            mismatches,
            labels: base.instances().iter().map(|i| &i.label).collect(),
        })
    }

    /// Adds f(c, schema) into `counts` and returns f(schema).
    fn accumulate(&self, bits: u32, counts: &mut BTreeMap<ClassLabel, f64>) -> f64 {
        let mut total = 0.0;
        for (&mm, &label) in self.mismatches.iter().zip(&self.labels) {
            if mm & !bits == 0 {
                *counts.entry(label.clone()).or_insert(0.0) += 1.0;
                total += 1.0;
            }
        }
        total
    }

    /// Pooled counts over all schemata with `wildcards` wildcards.
    fn level(&self, arity: usize, wildcards: usize) -> (BTreeMap<ClassLabel, f64>, f64, Vec<u32>) {
        let mut counts = BTreeMap::new();
        let mut total = 0.0;
        let masks: Vec<u32> = masks_with_wildcards(arity, wildcards).collect();
        for &bits in &masks {
            total += self.accumulate(bits, &mut counts);
        }
        (counts, total, masks)
    }
}

/// Result of a back-off walk: the estimate, the schemata summed at the step
/// that produced it, and the raw pooled counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackoffEstimate {
    pub distribution: ClassDistribution,
    /// Wildcard count for naive back-off; step rank for weighted back-off.
    pub level: usize,
    /// Summed wildcard weight of the step (equals `level` when unweighted).
    pub distance: f64,
    pub schemata: Vec<Schema>,
    pub counts: BTreeMap<ClassLabel, f64>,
}

/// Naive Back-off: at wildcard level m = 0, 1, ..., F pool the counts of all
/// C(F, m) schemata and stop at the first level with nonzero frequency.
pub fn naive_backoff_estimate(
    base: &InstanceBase,
    query: &[FeatureValue],
) -> Result<BackoffEstimate> {
    let counter = SchemaCounter::new(base, query)?;
    let arity = base.arity();
    for level in 0..=arity {
        let (counts, total, masks) = counter.level(arity, level);
        if total > 0.0 {
            return Ok(BackoffEstimate {
                distribution: normalize_counts(&counts)?,
                level,
                distance: level as f64,
                schemata: masks
                    .into_iter()
                    .map(|b| Schema::from_bits(query, b))
                    .collect(),
                counts,
            });
        }
    }
    unreachable!("the all-wildcard schema matches every instance of a nonempty base")
}

/// A group of schemata with equal summed wildcard weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackoffStep {
    pub level: usize,
    pub distance: f64,
    pub schemata: Vec<Schema>,
}

/// All schemata of `query` grouped into steps of equal weighted distance,
/// most specific first. Distances within 1e-12 share a step.
pub fn backoff_steps(query: &[FeatureValue], weights: &FeatureWeights) -> Result<Vec<BackoffStep>> {
    if weights.len() != query.len() {
        return Err(Error::WeightCount {
            expected: query.len(),
            found: weights.len(),
        });
    }
    let mut scored: Vec<(f64, Schema)> = enumerate_schemata(query)?
        .into_iter()
        .map(|s| (schema_distance(&s, weights), s))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut steps: Vec<BackoffStep> = Vec::new();
    for (distance, schema) in scored {
        match steps.last_mut() {
            Some(step) if distance - step.distance <= TIE_TOLERANCE => step.schemata.push(schema),
            _ => steps.push(BackoffStep {
                level: steps.len(),
                distance,
                schemata: vec![schema],
            }),
        }
    }
    Ok(steps)
}

/// Back-off along the weighted schema ordering: the first step (by summed
/// wildcard weight) with nonzero pooled frequency supplies the estimate.
pub fn ig_backoff_estimate(
    base: &InstanceBase,
    query: &[FeatureValue],
    weights: &FeatureWeights,
) -> Result<BackoffEstimate> {
    let counter = SchemaCounter::new(base, query)?;
    for step in backoff_steps(query, weights)? {
        let mut counts = BTreeMap::new();
        let total: f64 = step
            .schemata
            .iter()
            .map(|s| counter.accumulate(s.bits(), &mut counts))
            .sum();
        if total > 0.0 {
            return Ok(BackoffEstimate {
                distribution: normalize_counts(&counts)?,
                level: step.level,
                distance: step.distance,
                schemata: step.schemata,
                counts,
            });
        }
    }
    unreachable!("the all-wildcard schema matches every instance of a nonempty base")
}

/// Fixed interpolation weights, one per wildcard level 0..=F.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolationConfig {
    lambdas: Vec<f64>,
}

impl InterpolationConfig {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidLambdas("no weights given".into()));
        }
        if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::InvalidLambdas(format!(
                "weight {l} is negative or not finite"
            )));
        }
        let sum: f64 = lambdas.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidLambdas(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(InterpolationConfig { lambdas })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }
}

/// Linear interpolation of the pooled level estimates. Levels with zero
/// frequency drop out and their weight is spread proportionally over the
/// defined levels; if no defined level carries weight, the most specific
/// defined level is used alone.
pub fn interpolation_estimate(
    base: &InstanceBase,
    query: &[FeatureValue],
    config: &InterpolationConfig,
) -> Result<ClassDistribution> {
    let arity = base.arity();
    if config.lambdas.len() != arity + 1 {
        return Err(Error::InvalidLambdas(format!(
            "expected {} weights (levels 0..={arity}), got {}",
            arity + 1,
            config.lambdas.len()
        )));
    }
    let counter = SchemaCounter::new(base, query)?;

    let mut levels = Vec::with_capacity(arity + 1);
    for level in 0..=arity {
        let (counts, total, _) = counter.level(arity, level);
        if total > 0.0 {
            levels.push((config.lambdas[level], normalize_counts(&counts)?));
        }
    }
    let defined_mass: f64 = levels.iter().map(|(l, _)| l).sum();
    if defined_mass <= 0.0 {
        return Ok(levels.swap_remove(0).1);
    }

    let mut mixed: BTreeMap<ClassLabel, f64> = BTreeMap::new();
    for (lambda, dist) in &levels {
        for (label, p) in dist.mass() {
            *mixed.entry(label.clone()).or_insert(0.0) += lambda / defined_mass * p;
        }
    }
    normalize_counts(&mixed)
}

/// Side-by-side result of Naive Back-off and 1-NN overlap majority voting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub passed: bool,
    pub backoff: ClassDistribution,
    pub backoff_level: usize,
    pub knn: ClassDistribution,
    pub knn_distance: f64,
    pub max_abs_diff: f64,
    /// Pooled back-off counts equal the raw vote counts of the nearest bucket.
    pub counts_match: bool,
}

/// Runs both estimators on one query and compares them exactly.
pub fn equivalence_check(base: &InstanceBase, query: &[FeatureValue]) -> Result<EquivalenceReport> {
    let backoff = naive_backoff_estimate(base, query)?;
    let config = MetricConfig::overlap(FeatureWeights::uniform(base.arity()));
    let neighbors = retrieve_neighbors(base, query, &config, 1)?;
    let knn_counts = majority_counts(&neighbors);
    let knn = normalize_counts(&knn_counts)?;
    let knn_distance = neighbors.nearest_distance().unwrap_or(f64::NAN);

    let max_abs_diff = backoff.distribution.max_abs_diff(&knn);
    let counts_match = backoff.counts == knn_counts;
    let passed =
        max_abs_diff <= TIE_TOLERANCE && backoff.level as f64 == knn_distance && counts_match;
    Ok(EquivalenceReport {
        passed,
        backoff: backoff.distribution,
        backoff_level: backoff.level,
        knn,
        knn_distance,
        max_abs_diff,
        counts_match,
    })
}

/// Bounds for randomly generated equivalence trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialShape {
    pub min_arity: usize,
    pub max_arity: usize,
    pub max_values: usize,
    pub max_classes: usize,
    pub max_instances: usize,
}

impl Default for TrialShape {
    fn default() -> Self {
        TrialShape {
            min_arity: 2,
            max_arity: 5,
            max_values: 4,
            max_classes: 3,
            max_instances: 50,
        }
    }
}

/// Draws a random symbolic base and a query. Query values come from the
/// same alphabet plus one value never used in training.
pub fn random_trial<R: Rng>(rng: &mut R, shape: &TrialShape) -> (InstanceBase, Vec<FeatureValue>) {
    let arity = rng.gen_range(shape.min_arity..=shape.max_arity);
    let values: Vec<usize> = (0..arity)
        .map(|_| rng.gen_range(1..=shape.max_values))
        .collect();
    let classes = rng.gen_range(1..=shape.max_classes);
    let n = rng.gen_range(1..=shape.max_instances);
    let instances = (0..n)
        .map(|_| {
            let feats = values
                .iter()
                .enumerate()
                .map(|(f, &nv)| {
                    FeatureValue::Symbol(Symbol::new(&format!("f{f}v{}", rng.gen_range(0..nv))))
                })
                .collect();
            Instance::new(
                feats,
                Symbol::new(&format!("c{}", rng.gen_range(0..classes))),
            )
        })
        .collect();
    let base = build_instance_base(instances).expect("generated instances share one arity");
    let query = values
        .iter()
        .enumerate()
        .map(|(f, &nv)| {
            FeatureValue::Symbol(Symbol::new(&format!("f{f}v{}", rng.gen_range(0..=nv))))
        })
        .collect();
    (base, query)
}

/// Draws a query over `base`: each position takes an observed value or, with
/// probability 1/4, a value never seen in training.
pub fn random_query<R: Rng>(rng: &mut R, base: &InstanceBase) -> Vec<FeatureValue> {
    (0..base.arity())
        .map(|f| {
            let observed: Vec<&Symbol> = base.values(f).iter().collect();
            match observed.choose(rng) {
                Some(s) if rng.gen_range(0..4) > 0 => FeatureValue::Symbol((*s).clone()),
                _ => FeatureValue::symbol("\u{2205}unseen"),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceFailure {
    pub trial: usize,
    pub query: Vec<String>,
    pub report: EquivalenceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceSummary {
    pub trials: usize,
    pub passed: usize,
    pub seed: u64,
    pub failures: Vec<EquivalenceFailure>,
}

impl EquivalenceSummary {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

fn summarize<F>(trials: usize, seed: u64, mut draw: F) -> Result<EquivalenceSummary>
where
    F: FnMut(&mut ChaCha8Rng) -> (Option<InstanceBase>, Vec<FeatureValue>),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    let mut failures = Vec::new();
    let mut fixed: Option<InstanceBase> = None;
    for trial in 0..trials {
        let (base, query) = draw(&mut rng);
        if let Some(b) = base {
            fixed = Some(b);
        }
        let base = fixed.as_ref().expect("draw supplies a base");
        let report = equivalence_check(base, &query)?;
        if report.passed {
            passed += 1;
        } else {
            failures.push(EquivalenceFailure {
                trial,
                query: query.iter().map(ToString::to_string).collect(),
                report,
            });
        }
    }
    Ok(EquivalenceSummary {
        trials,
        passed,
        seed,
        failures,
    })
}

/// Runs `trials` equivalence checks on freshly generated bases.
pub fn run_random_trials(
    trials: usize,
    seed: u64,
    shape: &TrialShape,
) -> Result<EquivalenceSummary> {
    summarize(trials, seed, |rng| {
        let (base, query) = random_trial(rng, shape);
        (Some(base), query)
    })
}

/// Runs `trials` equivalence checks with random queries against one base.
pub fn run_trials_on_base(
    base: &InstanceBase,
    trials: usize,
    seed: u64,
) -> Result<EquivalenceSummary> {
    let mut first = Some(base.clone());
    summarize(trials, seed, |rng| (first.take(), random_query(rng, base)))
}
