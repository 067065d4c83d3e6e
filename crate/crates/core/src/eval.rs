//! Train/test evaluation, k-fold cross-validation and the paired t-test.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::backoff::ig_backoff_estimate;
use crate::error::{Error, Result};
use crate::instance::{
    build_instance_base, ClassDistribution, ClassLabel, FeatureValue, Instance, InstanceBase,
};
use crate::metrics::MetricConfig;
use crate::neighbors::{classify, Voting};
use crate::weighting::{compute_weights, discretize_weights, FeatureWeights, WeightScheme};

/// Environment variable capping evaluation threads.
pub const THREADS_ENV: &str = "MBSMOOTH_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum Weighting {
    Uniform,
    InformationGain,
    /// Fixed weights, used as given for every training base.
    Fixed(FeatureWeights),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// k-NN over distance buckets.
    #[default]
    Knn,
    /// Explicit back-off along the weighted schema ordering.
    Backoff,
}

/// Everything needed to turn a training base into a classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub weighting: Weighting,
    pub bins: Option<usize>,
    pub k: usize,
    pub voting: Voting,
    pub estimator: Estimator,
}

impl ModelConfig {
    /// IB1: unweighted overlap, nearest bucket, majority vote.
    pub fn ib1() -> Self {
        ModelConfig {
            weighting: Weighting::Uniform,
            bins: None,
            k: 1,
            voting: Voting::Majority,
            estimator: Estimator::Knn,
        }
    }

    /// IB1-IG: as IB1 with information-gain weights.
    pub fn ib1_ig() -> Self {
        ModelConfig {
            weighting: Weighting::InformationGain,
            ..ModelConfig::ib1()
        }
    }
}

/// A training base with its resolved metric.
#[derive(Debug, Clone)]
pub struct Model {
    base: InstanceBase,
    metric: MetricConfig,
    config: ModelConfig,
}

impl Model {
    pub fn fit(base: InstanceBase, config: &ModelConfig) -> Result<Self> {
        let weights = match &config.weighting {
            Weighting::Uniform => compute_weights(&base, &WeightScheme::Uniform)?,
            Weighting::InformationGain => compute_weights(&base, &WeightScheme::InformationGain)?,
            Weighting::Fixed(w) => {
                compute_weights(&base, &WeightScheme::UserSupplied(w.values().to_vec()))?
            }
        };
        let weights = match config.bins {
            Some(n) => discretize_weights(&weights, n)?,
            None => weights,
        };
        let metric = MetricConfig::for_kinds(base.kinds(), weights)?;
        Ok(Model {
            base,
            metric,
            config: config.clone(),
        })
    }

    pub fn base(&self) -> &InstanceBase {
        &self.base
    }

    pub fn weights(&self) -> &FeatureWeights {
        self.metric.weights()
    }

    pub fn predict(&self, query: &[FeatureValue]) -> Result<(ClassLabel, ClassDistribution)> {
        match self.config.estimator {
            Estimator::Knn => {
                let c = classify(
                    &self.base,
                    query,
                    &self.metric,
                    self.config.k,
                    self.config.voting,
                )?;
                Ok((c.label, c.distribution))
            }
            Estimator::Backoff => {
                let e = ig_backoff_estimate(&self.base, query, self.metric.weights())?;
                let label = e
                    .distribution
                    .argmax()
                    .cloned()
                    .expect("back-off is always defined");
                Ok((label, e.distribution))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionCell {
    pub gold: ClassLabel,
    pub predicted: ClassLabel,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub n_cases: usize,
    pub correct: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_fold: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_fold_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stddev: Option<f64>,
    pub confusion: Vec<ConfusionCell>,
}

fn threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

fn in_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads() {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn predict_all(model: &Model, test: &[Instance]) -> Result<Vec<ClassLabel>> {
    test.par_iter()
        .map(|inst| model.predict(&inst.values).map(|(l, _)| l))
        .collect()
}

fn tally(
    confusion: &mut BTreeMap<(ClassLabel, ClassLabel), usize>,
    test: &[Instance],
    predicted: &[ClassLabel],
) -> usize {
    let mut correct = 0;
    for (inst, pred) in test.iter().zip(predicted) {
        correct += usize::from(inst.label == *pred);
        *confusion
            .entry((inst.label.clone(), pred.clone()))
            .or_insert(0) += 1;
    }
    correct
}

fn report(
    confusion: BTreeMap<(ClassLabel, ClassLabel), usize>,
    correct: usize,
    n_cases: usize,
) -> EvalReport {
    EvalReport {
        accuracy: if n_cases == 0 {
            0.0
        } else {
            correct as f64 / n_cases as f64
        },
        n_cases,
        correct,
        per_fold: None,
        mean_fold_accuracy: None,
        stddev: None,
        confusion: confusion
            .into_iter()
            .map(|((gold, predicted), count)| ConfusionCell {
                gold,
                predicted,
                count,
            })
            .collect(),
    }
}

/// Classifies every test case against `base`.
pub fn evaluate(
    base: &InstanceBase,
    test: &[Instance],
    config: &ModelConfig,
) -> Result<EvalReport> {
    let model = Model::fit(base.clone(), config)?;
    let predicted = in_pool(|| predict_all(&model, test))?;
    let mut confusion = BTreeMap::new();
    let correct = tally(&mut confusion, test, &predicted);
    Ok(report(confusion, correct, test.len()))
}

/// Test-fold indices: a seeded shuffle split into contiguous folds, the
/// first `n % folds` folds one case larger. With `stratify`, the shuffled
/// cases are ordered by class and dealt round-robin instead.
pub fn fold_assignment(
    labels: &[ClassLabel],
    folds: usize,
    seed: u64,
    stratify: bool,
) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidFolds(folds));
    }
    let n = labels.len();
    if n < folds {
        return Err(Error::TooFewCases {
            needed: folds,
            found: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    if stratify {
        let mut by_class: BTreeMap<&ClassLabel, Vec<usize>> = BTreeMap::new();
        for &i in &order {
            by_class.entry(&labels[i]).or_default().push(i);
        }
        let mut out = vec![Vec::new(); folds];
        for (j, i) in by_class.into_values().flatten().enumerate() {
            out[j % folds].push(i);
        }
        return Ok(out);
    }

    let (size, extra) = (n / folds, n % folds);
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = size + usize::from(f < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

/// k-fold cross-validation; weights are recomputed on each training split.
pub fn cross_validate(
    cases: &[Instance],
    folds: usize,
    seed: u64,
    config: &ModelConfig,
    stratify: bool,
) -> Result<EvalReport> {
    let labels: Vec<ClassLabel> = cases.iter().map(|c| c.label.clone()).collect();
    let assignment = fold_assignment(&labels, folds, seed, stratify)?;

    let mut fold_of = vec![0; cases.len()];
    for (f, members) in assignment.iter().enumerate() {
        for &i in members {
            fold_of[i] = f;
        }
    }

    let mut confusion = BTreeMap::new();
    let mut correct = 0;
    let mut per_fold = Vec::with_capacity(folds);
    for (f, members) in assignment.iter().enumerate() {
        let train: Vec<Instance> = cases
            .iter()
            .zip(&fold_of)
            .filter(|(_, &g)| g != f)
            .map(|(c, _)| c.clone())
            .collect();
        let test: Vec<Instance> = members.iter().map(|&i| cases[i].clone()).collect();
        let model = Model::fit(build_instance_base(train)?, config)?;
        let predicted = in_pool(|| predict_all(&model, &test))?;
        let fold_correct = tally(&mut confusion, &test, &predicted);
        per_fold.push(fold_correct as f64 / test.len() as f64);
        correct += fold_correct;
    }

    let mean = per_fold.iter().sum::<f64>() / folds as f64;
    let var = per_fold.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (folds - 1) as f64;
    let mut out = report(confusion, correct, cases.len());
    out.per_fold = Some(per_fold);
    out.mean_fold_accuracy = Some(mean);
    out.stddev = Some(var.sqrt());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTTest {
    pub t: f64,
    pub df: usize,
    /// Two-tailed p-value; `None` when every difference is zero.
    pub p_value: Option<f64>,
    pub significant: bool,
}

/// Two-tailed paired t-test on `a - b` at the 0.05 level.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewSamples);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let df = n - 1;

    if diffs.iter().all(|d| d.abs() <= 1e-12) {
        return Ok(PairedTTest {
            t: 0.0,
            df,
            p_value: None,
            significant: false,
        });
    }
    if sd <= 1e-12 {
        return Err(Error::DegenerateVariance);
    }

    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(PairedTTest {
        t,
        df,
        p_value: Some(p),
        significant: p < 0.05,
    })
}
