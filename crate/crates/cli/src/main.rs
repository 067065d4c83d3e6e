//! `mbsmooth`: memory-based classification and back-off smoothing from the
//! command line. Reports go to stdout as JSON; a human summary goes to
//! stderr unless `--quiet` is given.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mbsmooth::backoff::{
    ig_backoff_estimate, interpolation_estimate, naive_backoff_estimate, run_random_trials,
    run_trials_on_base, InterpolationConfig, TrialShape,
};
use mbsmooth::corpus_io::{
    extract_unknown_word_cases, load_vector_lexicon, parse_case_file, parse_queries,
    parse_tag_lexicon, parse_tagged_corpus, tag_lexicon_from_corpus, vectorize_cases,
    vectorize_pattern, write_cases, CaseFormat, Delimiter, FeatureTemplate, MissingPolicy,
    QueryCase, VectorLexicon, PENN_OPEN_CLASS,
};
use mbsmooth::eval::{
    cross_validate, evaluate, paired_t_test, Estimator, EvalReport, Model, ModelConfig, Weighting,
};
use mbsmooth::neighbors::Voting;
use mbsmooth::weighting::{compute_weights, discretize_weights, WeightScheme};
use mbsmooth::{build_instance_base, FeatureValue, Instance, InstanceBase};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "mbsmooth",
    version,
    about = "Memory-based learning and back-off smoothing"
)]
struct Cli {
    /// Suppress the human-readable summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print feature weights of a training file as a JSON array.
    Weights {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, value_enum, default_value_t = Scheme::Ig)]
        scheme: Scheme,
        #[arg(long)]
        bins: Option<usize>,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Classify each input row; one JSON object per line.
    Classify {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Explicit back-off (or fixed-weight interpolation) estimates per input row.
    Backoff {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = BackoffMode::Naive)]
        mode: BackoffMode,
        /// Interpolation weights for wildcard levels 0..=F, comma separated.
        #[arg(long)]
        lambdas: Option<String>,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Train on one file, report accuracy on another.
    Eval {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// k-fold cross-validation.
    Cv {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        stratify: bool,
        /// Also run this metric on the same folds and report a paired t-test.
        #[arg(long, value_enum)]
        compare: Option<Metric>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Build unknown-word cases from a tagged corpus; writes a case file.
    Extract {
        /// One sentence per line, `word/TAG` tokens.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        template: String,
        /// `word TAG1 TAG2 ...` per line; built from the corpus when omitted.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Comma-separated open-class tags (default: Penn nouns, verbs, adjectives, adverbs).
        #[arg(long)]
        open_class: Option<String>,
    },
    /// Compare Naive Back-off with 1-NN overlap voting on random trials.
    CheckEquivalence {
        /// Draw queries against this base instead of generating random bases.
        #[arg(long)]
        cases: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        format: FormatArgs,
    },
}

#[derive(Args, Clone)]
struct FormatArgs {
    /// Token separator: `whitespace` or a single character such as `,`.
    #[arg(long, default_value = "whitespace")]
    delimiter: String,
    /// Leading columns to ignore on every row (e.g. sentence ids).
    #[arg(long, default_value_t = 0)]
    skip_columns: usize,
}

impl FormatArgs {
    fn format(&self) -> Result<CaseFormat> {
        let delimiter = match self.delimiter.as_str() {
            "whitespace" | "ws" => Delimiter::Whitespace,
            s => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Delimiter::Char(c),
                    _ => bail!("delimiter must be `whitespace` or one character, got `{s}`"),
                }
            }
        };
        Ok(CaseFormat {
            delimiter,
            skip_columns: self.skip_columns,
            arity: None,
        })
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Metric::Overlap)]
    metric: Metric,
    /// Number of nearest distance groups.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value_t = VotingArg::Majority)]
    voting: VotingArg,
    /// Vector lexicon for `--metric cosine`.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Discretize weights into this many equal-width bins.
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Knn)]
    estimator: EstimatorArg,
    /// Out-of-lexicon tokens under `--metric cosine`.
    #[arg(long, value_enum, default_value_t = Missing::Zero)]
    missing: Missing,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Scheme {
    Ig,
    Uniform,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Metric {
    Overlap,
    Ig,
    Cosine,
}

#[derive(ValueEnum, Clone, Copy)]
enum VotingArg {
    Majority,
    Dudani,
}

#[derive(ValueEnum, Clone, Copy)]
enum EstimatorArg {
    Knn,
    Backoff,
}

#[derive(ValueEnum, Clone, Copy)]
enum BackoffMode {
    Naive,
    Ig,
}

#[derive(ValueEnum, Clone, Copy)]
enum Missing {
    Zero,
    Error,
}

fn read_cases(path: &Path, format: &CaseFormat) -> Result<Vec<Instance>> {
    parse_case_file(path, format).with_context(|| format!("reading {}", path.display()))
}

fn read_base(path: &Path, format: &CaseFormat) -> Result<InstanceBase> {
    Ok(build_instance_base(read_cases(path, format)?)?)
}

fn read_queries(path: &Path, format: &CaseFormat, arity: usize) -> Result<Vec<QueryCase>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_queries(&text, format, arity).with_context(|| format!("reading {}", path.display()))
}

/// A fitted model plus the lexicon queries must be mapped through.
struct Prepared {
    model: Model,
    config: ModelConfig,
    lexicon: Option<(VectorLexicon, MissingPolicy)>,
}

impl Prepared {
    fn query(&self, values: &[FeatureValue]) -> Result<Vec<FeatureValue>> {
        match &self.lexicon {
            Some((lex, policy)) => Ok(vectorize_pattern(values, lex, *policy)?),
            None => Ok(values.to_vec()),
        }
    }

    fn cases(&self, cases: Vec<Instance>) -> Result<Vec<Instance>> {
        match &self.lexicon {
            Some((lex, policy)) => Ok(vectorize_cases(&cases, lex, *policy)?),
            None => Ok(cases),
        }
    }
}

fn model_config(args: &ModelArgs, metric: Metric) -> ModelConfig {
    ModelConfig {
        weighting: match metric {
            Metric::Overlap => Weighting::Uniform,
            Metric::Ig | Metric::Cosine => Weighting::InformationGain,
        },
        bins: args.bins,
        k: args.k,
        voting: match args.voting {
            VotingArg::Majority => Voting::Majority,
            VotingArg::Dudani => Voting::Dudani,
        },
        estimator: match args.estimator {
            EstimatorArg::Knn => Estimator::Knn,
            EstimatorArg::Backoff => Estimator::Backoff,
        },
    }
}

fn prepare(args: &ModelArgs, train: Vec<Instance>) -> Result<Prepared> {
    let config = model_config(args, args.metric);
    if args.metric != Metric::Cosine {
        let model = Model::fit(build_instance_base(train)?, &config)?;
        return Ok(Prepared {
            model,
            config,
            lexicon: None,
        });
    }

    if matches!(args.estimator, EstimatorArg::Backoff) {
        bail!("the back-off estimator needs symbolic features; use --metric overlap or ig");
    }
    let path = args
        .vectors
        .as_ref()
        .context("--metric cosine requires --vectors")?;
    let lexicon =
        load_vector_lexicon(path).with_context(|| format!("reading {}", path.display()))?;
    let policy = match args.missing {
        Missing::Zero => MissingPolicy::Zero,
        Missing::Error => MissingPolicy::Error,
    };
    // weights come from the symbolic cases; each word slot is one feature
    let symbolic = build_instance_base(train.clone())?;
    let mut weights = compute_weights(&symbolic, &WeightScheme::InformationGain)?;
    if let Some(n) = args.bins {
        weights = discretize_weights(&weights, n)?;
    }
    let config = ModelConfig {
        weighting: Weighting::Fixed(weights),
        bins: None,
        ..config
    };
    let vectors = vectorize_cases(&train, &lexicon, policy)?;
    let model = Model::fit(build_instance_base(vectors)?, &config)?;
    Ok(Prepared {
        model,
        config,
        lexicon: Some((lexicon, policy)),
    })
}

fn print_report(quiet: bool, title: &str, r: &EvalReport) {
    if quiet {
        return;
    }
    eprintln!("{title}");
    eprintln!("  cases     {}", r.n_cases);
    eprintln!("  correct   {}", r.correct);
    eprintln!("  accuracy  {:.2}%", 100.0 * r.accuracy);
    if let (Some(folds), Some(mean), Some(sd)) = (&r.per_fold, r.mean_fold_accuracy, r.stddev) {
        let list: Vec<String> = folds.iter().map(|a| format!("{:.1}", 100.0 * a)).collect();
        eprintln!("  folds     {}", list.join(" "));
        eprintln!("  mean      {:.2}% ({:.2})", 100.0 * mean, 100.0 * sd);
    }
}

fn run(cli: Cli) -> Result<bool> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Weights {
            train,
            scheme,
            bins,
            format,
        } => {
            let base = read_base(&train, &format.format()?)?;
            let scheme = match scheme {
                Scheme::Ig => WeightScheme::InformationGain,
                Scheme::Uniform => WeightScheme::Uniform,
            };
            let mut weights = compute_weights(&base, &scheme)?;
            if let Some(n) = bins {
                weights = discretize_weights(&weights, n)?;
            }
            println!("{}", serde_json::to_string(weights.values())?);
        }

        Command::Classify {
            train,
            input,
            model,
            format,
        } => {
            let format = format.format()?;
            let prepared = prepare(&model, read_cases(&train, &format)?)?;
            let arity = prepared.model.base().arity();
            let (mut n, mut correct) = (0usize, 0usize);
            for (i, q) in read_queries(&input, &format, arity)?
                .into_iter()
                .enumerate()
            {
                let (label, distribution) = prepared.model.predict(&prepared.query(&q.values)?)?;
                if let Some(gold) = &q.gold {
                    n += 1;
                    correct += usize::from(*gold == label);
                }
                println!(
                    "{}",
                    json!({ "case": i, "label": label, "distribution": distribution, "gold": q.gold })
                );
            }
            if !quiet && n > 0 {
                eprintln!(
                    "{correct}/{n} labeled rows correct ({:.2}%)",
                    100.0 * correct as f64 / n as f64
                );
            }
        }

        Command::Backoff {
            train,
            input,
            mode,
            lambdas,
            format,
        } => {
            let format = format.format()?;
            let base = read_base(&train, &format)?;
            let interpolation = lambdas
                .map(|s| -> Result<InterpolationConfig> {
                    let values = s
                        .split(',')
                        .map(|t| {
                            t.trim()
                                .parse::<f64>()
                                .with_context(|| format!("bad lambda `{t}`"))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(InterpolationConfig::new(values)?)
                })
                .transpose()?;
            let weights = match mode {
                BackoffMode::Naive => None,
                BackoffMode::Ig => Some(compute_weights(&base, &WeightScheme::InformationGain)?),
            };
            for (i, q) in read_queries(&input, &format, base.arity())?
                .into_iter()
                .enumerate()
            {
                let line = if let Some(cfg) = &interpolation {
                    let d = interpolation_estimate(&base, &q.values, cfg)?;
                    json!({ "case": i, "label": d.argmax(), "distribution": d, "lambdas": cfg.lambdas(), "gold": q.gold })
                } else {
                    let e = match &weights {
                        None => naive_backoff_estimate(&base, &q.values)?,
                        Some(w) => ig_backoff_estimate(&base, &q.values, w)?,
                    };
                    json!({
                        "case": i,
                        "label": e.distribution.argmax(),
                        "distribution": e.distribution,
                        "level": e.level,
                        "distance": e.distance,
                        "schemata": e.schemata,
                        "gold": q.gold,
                    })
                };
                println!("{line}");
            }
        }

        Command::Eval {
            train,
            test,
            model,
            format,
        } => {
            let format = format.format()?;
            let prepared = prepare(&model, read_cases(&train, &format)?)?;
            let test = prepared.cases(read_cases(&test, &format)?)?;
            let report = evaluate(prepared.model.base(), &test, &prepared.config)?;
            print_report(quiet, "evaluation", &report);
            println!("{}", serde_json::to_string(&report)?);
        }

        Command::Cv {
            cases,
            folds,
            seed,
            stratify,
            compare,
            model,
            format,
        } => {
            if model.metric == Metric::Cosine || compare == Some(Metric::Cosine) {
                bail!("cross-validation supports --metric overlap and ig");
            }
            let cases = read_cases(&cases, &format.format()?)?;
            let report = cross_validate(
                &cases,
                folds,
                seed,
                &model_config(&model, model.metric),
                stratify,
            )?;
            print_report(quiet, "cross-validation", &report);
            match compare {
                None => println!("{}", serde_json::to_string(&report)?),
                Some(other) => {
                    let baseline = cross_validate(
                        &cases,
                        folds,
                        seed,
                        &model_config(&model, other),
                        stratify,
                    )?;
                    print_report(quiet, "comparison", &baseline);
                    let test = paired_t_test(
                        report.per_fold.as_deref().unwrap_or_default(),
                        baseline.per_fold.as_deref().unwrap_or_default(),
                    );
                    let test = match test {
                        Ok(t) => json!(t),
                        Err(e) => json!({ "error": e.to_string() }),
                    };
                    if !quiet {
                        eprintln!("paired t-test: {test}");
                    }
                    println!(
                        "{}",
                        json!({ "report": report, "comparison": baseline, "t_test": test })
                    );
                }
            }
        }

        Command::Extract {
            corpus,
            template,
            lexicon,
            open_class,
        } => {
            let template = FeatureTemplate::parse(&template)?;
            let text = std::fs::read_to_string(&corpus)
                .with_context(|| format!("reading {}", corpus.display()))?;
            let sentences = parse_tagged_corpus(&text)?;
            let tags: HashMap<String, BTreeSet<String>> = match lexicon {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    parse_tag_lexicon(&text)?
                }
                None => tag_lexicon_from_corpus(&sentences),
            };
            let open: HashSet<String> = match open_class {
                Some(list) => list
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect(),
                None => PENN_OPEN_CLASS.iter().map(|s| s.to_string()).collect(),
            };
            let cases = extract_unknown_word_cases(&sentences, &template, &tags, &open);
            print!("{}", write_cases(&cases, Delimiter::Whitespace)?);
            if !quiet {
                eprintln!("{} cases with template {}", cases.len(), template.code());
            }
        }

        Command::CheckEquivalence {
            cases,
            trials,
            seed,
            format,
        } => {
            let summary = match cases {
                Some(path) => {
                    run_trials_on_base(&read_base(&path, &format.format()?)?, trials, seed)?
                }
                None => run_random_trials(trials, seed, &TrialShape::default())?,
            };
            if !quiet {
                eprintln!(
                    "{}: {}/{} trials agree (seed {})",
                    if summary.all_passed() { "PASS" } else { "FAIL" },
                    summary.passed,
                    summary.trials,
                    summary.seed
                );
            }
            println!("{}", serde_json::to_string(&summary)?);
            return Ok(summary.all_passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
