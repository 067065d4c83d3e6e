//! Schemata, distance buckets, nearest-neighbor retrieval and voting.
//!
//! Under the overlap metric the training instances at one distance from a
//! query form a bucket, and each bucket splits into schemata: the query
//! pattern with wildcards at the mismatching positions. `k` counts buckets,
//! never individual instances, so `k = 1` extrapolates from every instance
//! tied at the nearest distance.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{
    normalize_counts, ClassDistribution, ClassLabel, FeatureValue, Instance, InstanceBase,
};
use crate::metrics::{distance, MetricConfig};
use crate::weighting::FeatureWeights;
use crate::TIE_TOLERANCE;

/// Largest arity for which all 2^F schemata are enumerated.
pub const MAX_SCHEMA_ARITY: usize = 30;

/// A query pattern with a wildcard mask (`true` = wildcard).
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub pattern: Vec<FeatureValue>,
    pub mask: Vec<bool>,
}

impl Schema {
    pub fn from_bits(pattern: &[FeatureValue], bits: u32) -> Self {
        Schema {
            pattern: pattern.to_vec(),
            mask: (0..pattern.len()).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    /// Mask as an integer; bit `i` is feature `i`.
    pub fn bits(&self) -> u32 {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &w)| w)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    pub fn wildcards(&self) -> usize {
        self.mask.iter().filter(|&&w| w).count()
    }

    /// True iff `values` equals the pattern on every non-wildcard position.
    pub fn matches(&self, values: &[FeatureValue]) -> bool {
        self.mask
            .iter()
            .zip(self.pattern.iter().zip(values))
            .all(|(&wild, (p, v))| wild || p == v)
    }

    /// Pattern tokens with `*` at wildcard positions.
    pub fn render(&self) -> Vec<String> {
        self.mask
            .iter()
            .zip(&self.pattern)
            .map(|(&wild, v)| if wild { "*".to_string() } else { v.to_string() })
            .collect()
    }
}

impl Serialize for Schema {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.render().serialize(serializer)
    }
}

/// All `arity`-bit masks with exactly `wildcards` bits set, ascending.
pub fn masks_with_wildcards(arity: usize, wildcards: usize) -> impl Iterator<Item = u32> {
    let limit: u64 = 1 << arity;
    let start: u64 = if wildcards == 0 {
        0
    } else {
        (1u64 << wildcards) - 1
    };
    let mut next = if wildcards > arity { None } else { Some(start) };
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack: next integer with the same popcount.
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let n = (((r ^ cur) >> 2) / c) | r;
            (n < limit).then_some(n)
        };
        Some(cur as u32)
    })
}

/// Every schema of `query`, by wildcard count then mask value.
pub fn enumerate_schemata(query: &[FeatureValue]) -> Result<Vec<Schema>> {
    let arity = query.len();
    if arity > MAX_SCHEMA_ARITY {
        return Err(Error::ArityTooLarge(arity));
    }
    Ok((0..=arity)
        .flat_map(|m| masks_with_wildcards(arity, m))
        .map(|bits| Schema::from_bits(query, bits))
        .collect())
}

/// Distance from the most specific schema: the summed weight of the
/// wildcarded features.
pub fn schema_distance(schema: &Schema, weights: &FeatureWeights) -> f64 {
    schema
        .mask
        .iter()
        .zip(weights.values())
        .filter(|(&wild, _)| wild)
        .fold(0.0, |acc, (_, w)| acc + w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGroup<'a> {
    pub distance: f64,
    pub members: Vec<&'a Instance>,
}

/// The nearest distance groups, in increasing distance order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet<'a> {
    pub groups: Vec<NeighborGroup<'a>>,
    pub k_used: usize,
}

impl NeighborSet<'_> {
    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.members.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn nearest_distance(&self) -> Option<f64> {
        self.groups.first().map(|g| g.distance)
    }
}

/// Retrieves the `k` nearest distance groups of `query` by a flat scan.
/// Distances within 1e-12 of each other share a group.
pub fn retrieve_neighbors<'a>(
    base: &'a InstanceBase,
    query: &[FeatureValue],
    config: &MetricConfig,
    k: usize,
) -> Result<NeighborSet<'a>> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    base.check_query(query)?;
    config.check_kinds(base.kinds())?;

    let dists = base
        .instances()
        .iter()
        .map(|inst| distance(query, &inst.values, config))
        .collect::<Result<Vec<f64>>>()?;

    // k smallest distinct distances, ascending
    let mut levels: Vec<f64> = Vec::with_capacity(k + 1);
    for &d in &dists {
        if levels.len() == k && d > levels[k - 1] + TIE_TOLERANCE {
            continue;
        }
        let pos = levels.partition_point(|&l| l < d - TIE_TOLERANCE);
        if pos < levels.len() && (levels[pos] - d).abs() <= TIE_TOLERANCE {
            continue;
        }
        levels.insert(pos, d);
        levels.truncate(k);
    }

    let mut groups: Vec<NeighborGroup<'a>> = levels
        .iter()
        .map(|&distance| NeighborGroup {
            distance,
            members: Vec::new(),
        })
        .collect();
    for (inst, &d) in base.instances().iter().zip(&dists) {
        let pos = levels.partition_point(|&l| l < d - TIE_TOLERANCE);
        if pos < levels.len() && (levels[pos] - d).abs() <= TIE_TOLERANCE {
            groups[pos].members.push(inst);
        }
    }

    Ok(NeighborSet {
        k_used: groups.len(),
        groups,
    })
}

/// Raw class counts over all neighbors, each instance counted once.
pub fn majority_counts(neighbors: &NeighborSet<'_>) -> BTreeMap<ClassLabel, f64> {
    let mut counts = BTreeMap::new();
    for inst in neighbors.groups.iter().flat_map(|g| &g.members) {
        *counts.entry(inst.label.clone()).or_insert(0.0) += 1.0;
    }
    counts
}

pub fn majority_vote(neighbors: &NeighborSet<'_>) -> ClassDistribution {
    normalize_counts(&majority_counts(neighbors)).expect("counts are nonnegative")
}

/// Vote weight of each group: 1.0 for the nearest, 0.0 for the furthest,
/// linear in between. A single group (or equal extremes) gets weight 1.
pub fn dudani_weights(neighbors: &NeighborSet<'_>) -> Vec<f64> {
    let (Some(first), Some(last)) = (neighbors.groups.first(), neighbors.groups.last()) else {
        return Vec::new();
    };
    let (near, far) = (first.distance, last.distance);
    let span = far - near;
    neighbors
        .groups
        .iter()
        .map(|g| {
            if span <= TIE_TOLERANCE {
                1.0
            } else {
                ((far - g.distance) / span).clamp(0.0, 1.0)
            }
        })
        .collect()
}

/// Distance-weighted vote; falls back to the majority vote if every member
/// ends up with zero weight.
pub fn dudani_vote(neighbors: &NeighborSet<'_>) -> ClassDistribution {
    let mut counts = BTreeMap::new();
    for (group, w) in neighbors.groups.iter().zip(dudani_weights(neighbors)) {
        for inst in &group.members {
            *counts.entry(inst.label.clone()).or_insert(0.0) += w;
        }
    }
    let dist = normalize_counts(&counts).expect("weights are nonnegative");
    if dist.is_defined() {
        dist
    } else {
        majority_vote(neighbors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Voting {
    #[default]
    Majority,
    Dudani,
}

impl Voting {
    pub fn vote(self, neighbors: &NeighborSet<'_>) -> ClassDistribution {
        match self {
            Voting::Majority => majority_vote(neighbors),
            Voting::Dudani => dudani_vote(neighbors),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification<'a> {
    pub label: ClassLabel,
    pub distribution: ClassDistribution,
    pub neighbors: NeighborSet<'a>,
}

/// k-NN classification: retrieve, vote, take the argmax (ties go to the
/// lexicographically smallest label).
pub fn classify<'a>(
    base: &'a InstanceBase,
    query: &[FeatureValue],
    config: &MetricConfig,
    k: usize,
    voting: Voting,
) -> Result<Classification<'a>> {
    let neighbors = retrieve_neighbors(base, query, config, k)?;
    let distribution = voting.vote(&neighbors);
    let label = distribution
        .argmax()
        .cloned()
        .expect("a nonempty base always yields neighbors");
    Ok(Classification {
        label,
        distribution,
        neighbors,
    })
}
