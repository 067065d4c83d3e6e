//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function takes plain strings and returns a JSON string so
//! the page needs no generated type glue. The `*_json` functions hold the
//! logic and run natively in tests.

use mbsmooth::backoff::{
    backoff_steps, equivalence_check, ig_backoff_estimate, naive_backoff_estimate, BackoffEstimate,
};
use mbsmooth::corpus_io::{parse_cases, CaseFormat};
use mbsmooth::metrics::MetricConfig;
use mbsmooth::neighbors::{classify, dudani_weights, Voting};
use mbsmooth::weighting::{compute_weights, discretize_weights, FeatureWeights, WeightScheme};
use mbsmooth::{build_instance_base, FeatureValue, InstanceBase};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn csv_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn load_base(train: &str) -> Result<InstanceBase, String> {
    let cases = parse_cases(train, &CaseFormat::default()).map_err(|e| e.to_string())?;
    build_instance_base(cases).map_err(|e| e.to_string())
}

/// Back-off steps for a query labelled by feature names, ordered by summed
/// wildcard weight.
pub fn schema_ladder_json(names: &str, weights: &str, bins: u32) -> Result<String, String> {
    let names: Vec<&str> = names
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let values = csv_numbers(weights)?;
    if names.len() != values.len() {
        return Err(format!(
            "{} feature names but {} weights",
            names.len(),
            values.len()
        ));
    }
    let mut w = FeatureWeights::user(values).map_err(|e| e.to_string())?;
    if bins > 0 {
        w = discretize_weights(&w, bins as usize).map_err(|e| e.to_string())?;
    }
    let query: Vec<FeatureValue> = names.iter().map(|n| FeatureValue::symbol(n)).collect();
    let steps = backoff_steps(&query, &w).map_err(|e| e.to_string())?;
    let steps: Vec<_> = steps
        .iter()
        .map(|s| {
            json!({
                "distance": s.distance,
                "schemata": s.schemata.iter().map(|sc| json!({
                    "pattern": sc.render(),
                    "wildcards": sc.wildcards(),
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({ "weights": w.values(), "steps": steps }).to_string())
}

/// Weights of every scheme for a training text.
pub fn weights_json(train: &str) -> Result<String, String> {
    let base = load_base(train)?;
    let ig = compute_weights(&base, &WeightScheme::InformationGain).map_err(|e| e.to_string())?;
    Ok(json!({
        "arity": base.arity(),
        "cases": base.len(),
        "information_gain": ig.values(),
    })
    .to_string())
}

#[derive(Serialize)]
struct Group {
    distance: f64,
    vote_weight: f64,
    members: Vec<String>,
}

fn estimate_view(e: &BackoffEstimate) -> serde_json::Value {
    json!({
        "label": e.distribution.argmax(),
        "distribution": e.distribution.mass(),
        "level": e.level,
        "distance": e.distance,
        "schemata": e.schemata,
    })
}

/// k-NN, Naive Back-off and weighted back-off estimates for one query.
/// `weighting` is `uniform`, `ig`, or a comma-separated weight list.
pub fn compare_json(
    train: &str,
    query: &str,
    k: u32,
    voting: &str,
    weighting: &str,
) -> Result<String, String> {
    let base = load_base(train)?;
    let query: Vec<FeatureValue> = query.split_whitespace().map(FeatureValue::symbol).collect();
    if query.len() != base.arity() {
        return Err(format!(
            "query has {} features, training cases have {}",
            query.len(),
            base.arity()
        ));
    }
    let weights = match weighting.trim() {
        "uniform" => FeatureWeights::uniform(base.arity()),
        "ig" => {
            compute_weights(&base, &WeightScheme::InformationGain).map_err(|e| e.to_string())?
        }
        list => compute_weights(&base, &WeightScheme::UserSupplied(csv_numbers(list)?))
            .map_err(|e| e.to_string())?,
    };
    let voting = match voting {
        "dudani" => Voting::Dudani,
        _ => Voting::Majority,
    };
    let config = MetricConfig::overlap(weights.clone());
    let knn =
        classify(&base, &query, &config, k.max(1) as usize, voting).map_err(|e| e.to_string())?;
    let vote_weights = match voting {
        Voting::Dudani => dudani_weights(&knn.neighbors),
        Voting::Majority => vec![1.0; knn.neighbors.groups.len()],
    };
    let groups: Vec<Group> = knn
        .neighbors
        .groups
        .iter()
        .zip(vote_weights)
        .map(|(g, vote_weight)| Group {
            distance: g.distance,
            vote_weight,
            members: g
                .members
                .iter()
                .map(|i| {
                    let feats: Vec<String> = i.values.iter().map(ToString::to_string).collect();
                    format!("{} -> {}", feats.join(" "), i.label)
                })
                .collect(),
        })
        .collect();

    let naive = naive_backoff_estimate(&base, &query).map_err(|e| e.to_string())?;
    let weighted = ig_backoff_estimate(&base, &query, &weights).map_err(|e| e.to_string())?;
    let check = equivalence_check(&base, &query).map_err(|e| e.to_string())?;

    Ok(json!({
        "weights": weights.values(),
        "knn": {
            "label": knn.label,
            "distribution": knn.distribution.mass(),
            "groups": groups,
        },
        "naive_backoff": estimate_view(&naive),
        "weighted_backoff": estimate_view(&weighted),
        "equivalence": {
            "passed": check.passed,
            "max_abs_diff": check.max_abs_diff,
            "level": check.backoff_level,
        },
    })
    .to_string())
}

#[wasm_bindgen]
pub fn schema_ladder(names: &str, weights: &str, bins: u32) -> Result<String, JsValue> {
    schema_ladder_json(names, weights, bins).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn feature_weights(train: &str) -> Result<String, JsValue> {
    weights_json(train).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn compare_estimators(
    train: &str,
    query: &str,
    k: u32,
    voting: &str,
    weighting: &str,
) -> Result<String, JsValue> {
    compare_json(train, query, k, voting, weighting).map_err(|e| JsValue::from_str(&e))
}
