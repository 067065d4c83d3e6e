//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.
//!
//! The PP-attachment reproduction needs the Ratnaparkhi et al. files
//! (`training` and `test`, with their leading id column). Point
//! `MBSMOOTH_PP_DIR` at the directory holding them; otherwise that criterion
//! is skipped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mbsmooth::backoff::{
    ig_backoff_estimate, naive_backoff_estimate, random_trial, run_random_trials, TrialShape,
};
use mbsmooth::corpus_io::{
    extract_unknown_word_cases, parse_case_file, tag_lexicon_from_corpus, CaseFormat,
    FeatureTemplate, TaggedSentence, PENN_OPEN_CLASS,
};
use mbsmooth::eval::{cross_validate, evaluate, paired_t_test, ModelConfig};
use mbsmooth::metrics::{distance, MetricConfig};
use mbsmooth::neighbors::{
    classify, dudani_vote, dudani_weights, majority_vote, retrieve_neighbors, Voting,
};
use mbsmooth::weighting::{compute_weights, information_gain, FeatureWeights, WeightScheme};
use mbsmooth::{build_instance_base, FeatureValue, Instance, Symbol};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

// ---------------------------------------------------------------------------
// 1. Naive Back-off vs 1-NN overlap majority voting
// ---------------------------------------------------------------------------

fn equivalence_suite() -> Outcome {
    let start = Instant::now();
    let shape = TrialShape::default();
    let summary = match run_random_trials(1000, 20_240_601, &shape) {
        Ok(s) => s,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let elapsed = start.elapsed();
    let detail = format!(
        "{}/{} trials agree (F 2..5, <=4 values, <=3 classes, <=50 instances), {:.2}s",
        summary.passed,
        summary.trials,
        elapsed.as_secs_f64()
    );
    if summary.all_passed() && summary.trials >= 1000 && elapsed < Duration::from_secs(10) {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(format!(
            "{detail}; first failure: {:?}",
            summary.failures.first()
        ))
    }
}

// ---------------------------------------------------------------------------
// 2. Information gain against a brute-force oracle
// ---------------------------------------------------------------------------

type Row = (Vec<String>, String);

/// Brute-force split-info-normalized information gain, straight from counts.
fn oracle_ig(rows: &[Row], f: usize) -> f64 {
    fn h(counts: &HashMap<&str, usize>) -> f64 {
        let n: usize = counts.values().sum();
        let mut e = 0.0;
        for &c in counts.values() {
            let p = c as f64 / n as f64;
            if p > 0.0 {
                e -= p * p.log2();
            }
        }
        e
    }
    let n = rows.len() as f64;
    let mut classes: HashMap<&str, usize> = HashMap::new();
    let mut values: HashMap<&str, usize> = HashMap::new();
    let mut joint: HashMap<&str, HashMap<&str, usize>> = HashMap::new();
    for (feats, class) in rows {
        *classes.entry(class).or_default() += 1;
        *values.entry(&feats[f]).or_default() += 1;
        *joint
            .entry(&feats[f])
            .or_default()
            .entry(class)
            .or_default() += 1;
    }
    let si = h(&values);
    if si == 0.0 {
        return 0.0;
    }
    let mut conditional = 0.0;
    for (v, per_class) in &joint {
        conditional += values[v] as f64 / n * h(per_class);
    }
    (h(&classes) - conditional) / si
}

fn ig_oracle_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let arity = rng.gen_range(2..=6);
        let n = rng.gen_range(5..=80);
        let nvals: Vec<usize> = (0..arity).map(|_| rng.gen_range(1..=6)).collect();
        let nclass = rng.gen_range(1..=4);
        let rows: Vec<Row> = (0..n)
            .map(|_| {
                let feats = nvals
                    .iter()
                    .map(|&k| format!("v{}", rng.gen_range(0..k)))
                    .collect();
                (feats, format!("c{}", rng.gen_range(0..nclass)))
            })
            .collect();
        let base = build_instance_base(
            rows.iter()
                .map(|(f, c)| {
                    Instance::new(
                        f.iter().map(|v| FeatureValue::symbol(v)).collect(),
                        Symbol::new(c),
                    )
                })
                .collect(),
        )
        .unwrap();
        for f in 0..arity {
            let got = information_gain(&base, f).unwrap();
            worst = worst.max((got - oracle_ig(&rows, f)).abs());
        }
    }

    // forced cases: constant feature, and a feature that is a uniform
    // bijective copy of the class (weight H(C)/si = 2/2)
    let forced = build_instance_base(
        (0..12)
            .map(|i| Instance::symbolic(&["k", &format!("v{}", i % 4)], &format!("c{}", i % 4)))
            .collect(),
    )
    .unwrap();
    let constant = information_gain(&forced, 0).unwrap();
    let predictor = information_gain(&forced, 1).unwrap();

    let detail = format!("20 random bases, max |diff| {worst:.2e}; constant -> {constant}, uniform predictor -> {predictor}");
    if worst <= 1e-9 && constant == 0.0 && (predictor - 1.0).abs() <= 1e-12 {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---------------------------------------------------------------------------
// 3. PP-attachment reproduction (dataset-conditional)
// ---------------------------------------------------------------------------

fn pp_reproduction() -> Outcome {
    let Some(dir) = std::env::var_os("MBSMOOTH_PP_DIR").map(PathBuf::from) else {
        return Outcome::Skip(
            "set MBSMOOTH_PP_DIR to the directory holding the Ratnaparkhi PP-attachment `training` and `test` files"
                .into(),
        );
    };
    let (train_path, test_path) = (dir.join("training"), dir.join("test"));
    if !train_path.exists() || !test_path.exists() {
        return Outcome::Skip(format!("{} lacks `training` and `test`", dir.display()));
    }
    let format = CaseFormat {
        skip_columns: 1,
        arity: Some(4),
        ..Default::default()
    };
    let start = Instant::now();
    let (train, test) = match (
        parse_case_file(&train_path, &format),
        parse_case_file(&test_path, &format),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::Fail(e.to_string()),
    };
    let base = build_instance_base(train).unwrap();
    let weights = compute_weights(&base, &WeightScheme::InformationGain).unwrap();
    let ib1 = evaluate(&base, &test, &ModelConfig::ib1()).unwrap();
    let ib1_ig = evaluate(&base, &test, &ModelConfig::ib1_ig()).unwrap();
    let elapsed = start.elapsed();

    let w = weights.values();
    let expected_w = [0.03, 0.03, 0.10, 0.03];
    let weights_ok = w.iter().zip(expected_w).all(|(a, b)| (a - b).abs() <= 0.01);
    let prep_dominates = w[2] > w[0] + w[1] + w[3];
    let ib1_ok = (100.0 * ib1.accuracy - 83.7).abs() <= 0.5;
    let ig_ok = (100.0 * ib1_ig.accuracy - 84.1).abs() <= 0.5;
    let detail = format!(
        "{} train / {} test; IB1 {:.2}% (83.7 +-0.5), IB1-IG {:.2}% (84.1 +-0.5), weights {:.3?}, {:.1}s",
        base.len(),
        test.len(),
        100.0 * ib1.accuracy,
        100.0 * ib1_ig.accuracy,
        w,
        elapsed.as_secs_f64()
    );
    if weights_ok && prep_dominates && ib1_ok && ig_ok && elapsed < Duration::from_secs(300) {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---------------------------------------------------------------------------
// 4. Unknown-word tagging on a synthetic corpus with injected noise
// ---------------------------------------------------------------------------

/// Tagged sentences whose open-class tags are signalled by the last two
/// letters of the word (with 10% of words given a misleading ending).
fn synthetic_corpus(rng: &mut ChaCha8Rng, min_tokens: usize) -> Vec<TaggedSentence> {
    let endings: &[(&str, &[&str])] = &[
        ("NN", &["on", "nt", "ty"]),
        ("NNS", &["ns", "ts", "es"]),
        ("VBD", &["ed"]),
        ("VBG", &["ng"]),
        ("JJ", &["al", "ic", "us"]),
        ("RB", &["ly"]),
    ];
    let all_endings: Vec<&str> = endings
        .iter()
        .flat_map(|(_, e)| e.iter().copied())
        .collect();
    let word = |rng: &mut ChaCha8Rng, tag: &str| -> (String, String) {
        let stem: String = (0..rng.gen_range(2..6))
            .map(|_| rng.gen_range(b'a'..=b'z') as char)
            .collect();
        let choices = endings.iter().find(|(t, _)| *t == tag).unwrap().1;
        let ending = if rng.gen_bool(0.1) {
            all_endings.choose(rng).unwrap()
        } else {
            choices.choose(rng).unwrap()
        };
        (format!("{stem}{ending}"), tag.to_string())
    };
    let closed = |w: &str, t: &str| (w.to_string(), t.to_string());

    let mut corpus = Vec::new();
    let mut tokens = 0;
    while tokens < min_tokens {
        let mut s = vec![closed(["the", "a", "this"].choose(rng).unwrap(), "DT")];
        if rng.gen_bool(0.5) {
            s.push(word(rng, "JJ"));
        }
        let noun = if rng.gen_bool(0.5) { "NN" } else { "NNS" };
        s.push(word(rng, noun));
        let verb = if rng.gen_bool(0.7) { "VBD" } else { "VBG" };
        s.push(word(rng, verb));
        if rng.gen_bool(0.4) {
            s.push(word(rng, "RB"));
        }
        s.push(closed(["in", "on", "of"].choose(rng).unwrap(), "IN"));
        s.push(closed("the", "DT"));
        let noun = if rng.gen_bool(0.5) { "NN" } else { "NNS" };
        s.push(word(rng, noun));
        s.push(closed(".", "."));
        tokens += s.len();
        corpus.push(s);
    }
    corpus
}

fn pos_noise_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let corpus = synthetic_corpus(&mut rng, 6000);
    let tokens: usize = corpus.iter().map(Vec::len).sum();
    let lexicon = tag_lexicon_from_corpus(&corpus);
    let open: HashSet<String> = PENN_OPEN_CLASS.iter().map(|s| s.to_string()).collect();
    let template = FeatureTemplate::parse("pdddaaasss").unwrap();
    let clean = extract_unknown_word_cases(&corpus, &template, &lexicon, &open);

    // six irrelevant features with 12 values each
    let noisy: Vec<Instance> = clean
        .iter()
        .map(|c| {
            let mut values = c.values.clone();
            values.extend(
                (0..6).map(|i| FeatureValue::symbol(&format!("n{i}_{}", rng.gen_range(0..12)))),
            );
            Instance::new(values, c.label.clone())
        })
        .collect();

    let ib1 = cross_validate(&noisy, 10, 1, &ModelConfig::ib1(), false).unwrap();
    let ib1_ig = cross_validate(&noisy, 10, 1, &ModelConfig::ib1_ig(), false).unwrap();
    let t = paired_t_test(
        ib1_ig.per_fold.as_ref().unwrap(),
        ib1.per_fold.as_ref().unwrap(),
    );
    let (a, b) = (
        ib1_ig.mean_fold_accuracy.unwrap(),
        ib1.mean_fold_accuracy.unwrap(),
    );
    let detail = format!(
        "{tokens} tokens, {} cases, pdddaaasss + 6 noise features: IB1-IG {:.1}% ({:.1}) vs IB1 {:.1}% ({:.1}); paired t {}",
        noisy.len(),
        100.0 * a,
        100.0 * ib1_ig.stddev.unwrap(),
        100.0 * b,
        100.0 * ib1.stddev.unwrap(),
        match t {
            Ok(t) => format!("{:.2}, p {:.2e}", t.t, t.p_value.unwrap_or(f64::NAN)),
            Err(e) => e.to_string(),
        }
    );
    if tokens >= 5000 && a > b {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---------------------------------------------------------------------------
// 5. Invariant sweeps
// ---------------------------------------------------------------------------

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let shape = TrialShape::default();
    let mut checks: BTreeMap<&str, usize> = BTreeMap::new();
    let fail = |name: &str, why: String| Outcome::Fail(format!("{name}: {why}"));

    for _ in 0..500 {
        let (base, q) = random_trial(&mut rng, &shape);
        let arity = base.arity();
        let w =
            FeatureWeights::user((0..arity).map(|_| rng.gen_range(0.01..2.0)).collect()).unwrap();
        let cfg = MetricConfig::overlap(w.clone());
        let scale = rng.gen_range(0.1..10.0);

        for inst in base.instances() {
            let d = distance(&q, &inst.values, &cfg).unwrap();
            if d != distance(&inst.values, &q, &cfg).unwrap()
                || distance(&inst.values, &inst.values, &cfg).unwrap() != 0.0
            {
                return fail("distance symmetry/identity", format!("{q:?} vs {inst:?}"));
            }
        }
        *checks.entry("distance symmetry/identity").or_default() += 1;

        let k = rng.gen_range(1..4);
        for voting in [Voting::Majority, Voting::Dudani] {
            let a = classify(&base, &q, &cfg, k, voting).unwrap().label;
            let b = classify(
                &base,
                &q,
                &MetricConfig::overlap(w.scaled(scale)),
                k,
                voting,
            )
            .unwrap()
            .label;
            if a != b {
                return fail("rescaling argmax invariance", format!("{a} vs {b}"));
            }
        }
        *checks.entry("rescaling argmax invariance").or_default() += 1;

        let set = retrieve_neighbors(&base, &q, &cfg, k).unwrap();
        let dw = dudani_weights(&set);
        let bounds = dw[0] == 1.0
            && (set.groups.len() == 1 || *dw.last().unwrap() == 0.0)
            && dw.iter().all(|x| (0.0..=1.0).contains(x));
        let single = retrieve_neighbors(&base, &q, &cfg, 1).unwrap();
        if !bounds || dudani_vote(&single) != majority_vote(&single) {
            return fail("Dudani weight bounds", format!("{dw:?}"));
        }
        *checks
            .entry("Dudani bounds (nearest 1, furthest 0)")
            .or_default() += 1;

        let naive = naive_backoff_estimate(&base, &q).unwrap();
        let weighted = ig_backoff_estimate(&base, &q, &w).unwrap();
        for e in [&naive, &weighted] {
            if !e.distribution.is_defined() || (e.distribution.total() - 1.0).abs() > 1e-9 {
                return fail("back-off defined and normalized", format!("{e:?}"));
            }
        }
        *checks.entry("back-off defined and normalized").or_default() += 1;

        if ig_backoff_estimate(&base, &q, &FeatureWeights::uniform(arity)).unwrap() != naive {
            return fail("weighted back-off under uniform weights", format!("{q:?}"));
        }
        *checks
            .entry("weighted == naive back-off under uniform weights")
            .or_default() += 1;
    }
    Outcome::Pass(
        checks
            .iter()
            .map(|(k, v)| format!("{k} x{v}"))
            .collect::<Vec<_>>()
            .join("; "),
    )
}

// ---------------------------------------------------------------------------
// 6. CLI contract
// ---------------------------------------------------------------------------

fn cli_contract() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_mbsmooth");
    let eq = match Command::new(bin)
        .args(["check-equivalence", "--trials", "1000", "--quiet"])
        .output()
    {
        Ok(o) => o,
        Err(e) => return Outcome::Fail(e.to_string()),
    };

    let dir = std::env::temp_dir().join(format!("mbsmooth-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let ragged = dir.join("ragged.txt");
    std::fs::write(
        &ragged,
        "ate pizza with fork V\nate pizza with cheese N\nsaw man with V\n",
    )
    .unwrap();
    let bad = Command::new(bin)
        .args(["weights", "--train"])
        .arg(&ragged)
        .output()
        .unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    let stderr = String::from_utf8_lossy(&bad.stderr);

    let detail = format!(
        "check-equivalence --trials 1000 -> exit {:?}; ragged file -> exit {:?}, `{}`",
        eq.status.code(),
        bad.status.code(),
        stderr.trim()
    );
    if eq.status.code() == Some(0) && bad.status.code() == Some(1) && stderr.contains("line 3") {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 6] = [
        (
            "equivalence: naive back-off == IB1 k=1 on 1000 random bases",
            equivalence_suite,
        ),
        (
            "information gain matches brute-force oracle",
            ig_oracle_suite,
        ),
        (
            "PP-attachment reproduction (IB1 83.7, IB1-IG 84.1, IG weights)",
            pp_reproduction,
        ),
        (
            "synthetic unknown-word tagging: IB1-IG beats IB1 under noise",
            pos_noise_suite,
        ),
        ("invariant sweeps", property_suite),
        ("CLI contract", cli_contract),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Outcome::Pass(d) => println!("[PASS] {name}: {d}"),
            Outcome::Skip(d) => println!("[SKIP] {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("[FAIL] {name}: {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
