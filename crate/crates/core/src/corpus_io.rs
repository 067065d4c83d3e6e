//! Case files, vector lexicons, and unknown-word feature extraction.
//!
//! A case file holds one case per line: feature tokens followed by the class
//! token. A vector lexicon holds `token v1 ... vd` per line. Tagged corpora
//! hold one sentence per line as `word/TAG` tokens.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::instance::{FeatureValue, Instance, Symbol};

/// Marker for positions outside the sentence or beyond the word's length.
pub const BOUNDARY: &str = "_";
/// Ambiguity class of a word missing from the tag lexicon.
pub const UNKNOWN_CLASS: &str = "UNK";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Whitespace,
    Char(char),
}

impl Delimiter {
    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self {
            Delimiter::Whitespace => line.split_whitespace().collect(),
            Delimiter::Char(c) => line.split(*c).map(str::trim).collect(),
        }
    }

    fn join(&self) -> String {
        match self {
            Delimiter::Whitespace => " ".to_string(),
            Delimiter::Char(c) => c.to_string(),
        }
    }
}

/// How to read case rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CaseFormat {
    pub delimiter: Delimiter,
    /// Leading columns to drop (e.g. a sentence id).
    pub skip_columns: usize,
    /// Expected feature count; inferred from the first row when `None`.
    pub arity: Option<usize>,
}

fn rows<'a>(
    text: &'a str,
    format: &'a CaseFormat,
) -> impl Iterator<Item = (usize, Vec<&'a str>)> + 'a {
    text.lines().enumerate().filter_map(move |(i, line)| {
        let line = line.trim();
        if line.is_empty() {
            return None;
        }
        let tokens = format.delimiter.split(line);
        Some((
            i + 1,
            tokens.into_iter().skip(format.skip_columns).collect(),
        ))
    })
}

/// Parses case rows; the last token of each row is the class label.
pub fn parse_cases(text: &str, format: &CaseFormat) -> Result<Vec<Instance>> {
    let mut expected = format.arity.map(|a| a + 1);
    let mut out = Vec::new();
    for (line, tokens) in rows(text, format) {
        let width = *expected.get_or_insert(tokens.len());
        if tokens.len() != width || width < 2 {
            return Err(Error::RaggedRow {
                line,
                expected: width.max(2) + format.skip_columns,
                found: tokens.len() + format.skip_columns,
            });
        }
        let (label, values) = tokens.split_last().expect("width >= 2");
        out.push(Instance::new(
            values.iter().map(|v| FeatureValue::symbol(v)).collect(),
            Symbol::new(label),
        ));
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(out)
}

pub fn parse_case_file(path: impl AsRef<Path>, format: &CaseFormat) -> Result<Vec<Instance>> {
    parse_cases(&std::fs::read_to_string(path)?, format)
}

/// Writes symbolic instances in case-file form, one per line.
pub fn write_cases(instances: &[Instance], delimiter: Delimiter) -> Result<String> {
    let sep = delimiter.join();
    let mut out = String::new();
    for inst in instances {
        for v in &inst.values {
            let s = v.as_symbol().ok_or(Error::KindMismatch)?;
            out.push_str(s.as_str());
            out.push_str(&sep);
        }
        let _ = writeln!(out, "{}", inst.label);
    }
    Ok(out)
}

/// A query row: features plus the gold label when the row carries one.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryCase {
    pub values: Vec<FeatureValue>,
    pub gold: Option<Symbol>,
}

/// Parses rows of either `arity` tokens (unlabeled) or `arity + 1` tokens
/// (labeled).
pub fn parse_queries(text: &str, format: &CaseFormat, arity: usize) -> Result<Vec<QueryCase>> {
    let mut out = Vec::new();
    for (line, tokens) in rows(text, format) {
        let gold = match tokens.len() {
            n if n == arity => None,
            n if n == arity + 1 => Some(Symbol::new(tokens[arity])),
            found => {
                return Err(Error::RaggedRow {
                    line,
                    expected: arity + 1 + format.skip_columns,
                    found: found + format.skip_columns,
                })
            }
        };
        out.push(QueryCase {
            values: tokens[..arity]
                .iter()
                .map(|v| FeatureValue::symbol(v))
                .collect(),
            gold,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorLexicon {
    pub dimension: usize,
    pub entries: HashMap<String, Arc<[f64]>>,
    /// Number of lines whose token had already been seen (last one wins).
    pub duplicates: usize,
}

impl VectorLexicon {
    pub fn get(&self, token: &str) -> Option<&Arc<[f64]>> {
        self.entries.get(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_vector_lexicon(text: &str) -> Result<VectorLexicon> {
    let mut dimension = None;
    let mut entries = HashMap::new();
    let mut duplicates = 0;
    for (i, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        let Some(token) = tokens.next() else { continue };
        let vector = tokens
            .map(|t| {
                t.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("`{t}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if vector.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("token `{token}` has no vector"),
            });
        }
        let d = *dimension.get_or_insert(vector.len());
        if vector.len() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: vector.len(),
            });
        }
        if entries
            .insert(token.to_string(), Arc::from(vector))
            .is_some()
        {
            duplicates += 1;
        }
    }
    let dimension = dimension.ok_or(Error::EmptyFile)?;
    Ok(VectorLexicon {
        dimension,
        entries,
        duplicates,
    })
}

pub fn load_vector_lexicon(path: impl AsRef<Path>) -> Result<VectorLexicon> {
    parse_vector_lexicon(&std::fs::read_to_string(path)?)
}

/// What to do with tokens missing from the lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    Zero,
    Error,
}

/// Replaces every symbol of `values` by its lexicon vector.
pub fn vectorize_pattern(
    values: &[FeatureValue],
    lexicon: &VectorLexicon,
    fallback: MissingPolicy,
) -> Result<Vec<FeatureValue>> {
    values
        .iter()
        .map(|v| match v {
            FeatureValue::Symbol(s) => match (lexicon.get(s.as_str()), fallback) {
                (Some(vec), _) => Ok(FeatureValue::Vector(vec.clone())),
                (None, MissingPolicy::Zero) => {
                    Ok(FeatureValue::vector(vec![0.0; lexicon.dimension]))
                }
                (None, MissingPolicy::Error) => Err(Error::MissingToken(s.to_string())),
            },
            FeatureValue::Vector(_) => Err(Error::KindMismatch),
        })
        .collect()
}

pub fn vectorize_cases(
    instances: &[Instance],
    lexicon: &VectorLexicon,
    fallback: MissingPolicy,
) -> Result<Vec<Instance>> {
    instances
        .iter()
        .map(|inst| {
            Ok(Instance::new(
                vectorize_pattern(&inst.values, lexicon, fallback)?,
                inst.label.clone(),
            ))
        })
        .collect()
}

/// Feature code over `p` (prefix letters), `d` (left-context tags),
/// `a` (ambiguity classes of right-context words) and `s` (suffix letters).
/// The n-th occurrence of a letter reads position n of its source, nearest
/// first; output features follow the code's letter order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureTemplate {
    code: String,
}

impl FeatureTemplate {
    pub fn parse(code: &str) -> Result<Self> {
        if code.is_empty() || !code.chars().all(|c| matches!(c, 'p' | 'd' | 'a' | 's')) {
            return Err(Error::InvalidTemplate(code.to_string()));
        }
        Ok(FeatureTemplate {
            code: code.to_string(),
        })
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn arity(&self) -> usize {
        self.code.len()
    }
}

impl std::str::FromStr for FeatureTemplate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FeatureTemplate::parse(s)
    }
}

pub type TaggedSentence = Vec<(String, String)>;

/// Penn Treebank tags for nouns, verbs, adjectives and adverbs.
pub const PENN_OPEN_CLASS: &[&str] = &[
    "NN", "NNS", "NNP", "NNPS", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "JJ", "JJR", "JJS", "RB",
    "RBR", "RBS",
];

/// Parses one sentence per line of `word/TAG` tokens (split at the last `/`).
pub fn parse_tagged_corpus(text: &str) -> Result<Vec<TaggedSentence>> {
    let mut sentences = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let sentence = tokens
            .iter()
            .map(|t| match t.rsplit_once('/') {
                Some((w, tag)) if !w.is_empty() && !tag.is_empty() => {
                    Ok((w.to_string(), tag.to_string()))
                }
                _ => Err(Error::Parse {
                    line: i + 1,
                    message: format!("`{t}` is not word/TAG"),
                }),
            })
            .collect::<Result<TaggedSentence>>()?;
        sentences.push(sentence);
    }
    Ok(sentences)
}

/// Parses `word TAG1 TAG2 ...` lines into a word -> possible-tags map.
pub fn parse_tag_lexicon(text: &str) -> Result<HashMap<String, BTreeSet<String>>> {
    let mut lexicon: HashMap<String, BTreeSet<String>> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        let Some(word) = tokens.next() else { continue };
        let tags: BTreeSet<String> = tokens.map(str::to_string).collect();
        if tags.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("word `{word}` has no tags"),
            });
        }
        lexicon.entry(word.to_string()).or_default().extend(tags);
    }
    Ok(lexicon)
}

/// Word -> set of tags observed for it in `corpus`.
pub fn tag_lexicon_from_corpus(corpus: &[TaggedSentence]) -> HashMap<String, BTreeSet<String>> {
    let mut lexicon: HashMap<String, BTreeSet<String>> = HashMap::new();
    for (word, tag) in corpus.iter().flatten() {
        lexicon.entry(word.clone()).or_default().insert(tag.clone());
    }
    lexicon
}

/// Sorted, `-`-joined tag set of `word`, or [`UNKNOWN_CLASS`].
pub fn ambiguity_class(word: &str, lexicon: &HashMap<String, BTreeSet<String>>) -> String {
    match lexicon.get(word) {
        Some(tags) if !tags.is_empty() => tags.iter().cloned().collect::<Vec<_>>().join("-"),
        _ => UNKNOWN_CLASS.to_string(),
    }
}

/// Emits one case per open-class word of `corpus`, labeled with its tag.
pub fn extract_unknown_word_cases(
    corpus: &[TaggedSentence],
    template: &FeatureTemplate,
    lexicon_tags: &HashMap<String, BTreeSet<String>>,
    open_class: &HashSet<String>,
) -> Vec<Instance> {
    let mut out = Vec::new();
    for sentence in corpus {
        for (i, (word, tag)) in sentence.iter().enumerate() {
            if !open_class.contains(tag) {
                continue;
            }
            let chars: Vec<char> = word.chars().collect();
            let (mut np, mut nd, mut na, mut ns) = (0, 0, 0, 0);
            let values = template
                .code
                .chars()
                .map(|letter| {
                    let token = match letter {
                        'p' => {
                            np += 1;
                            chars.get(np - 1).map(char::to_string)
                        }
                        'd' => {
                            nd += 1;
                            i.checked_sub(nd).map(|j| sentence[j].1.clone())
                        }
                        'a' => {
                            na += 1;
                            sentence
                                .get(i + na)
                                .map(|(w, _)| ambiguity_class(w, lexicon_tags))
                        }
                        's' => {
                            ns += 1;
                            chars.len().checked_sub(ns).map(|j| chars[j].to_string())
                        }
                        _ => unreachable!("validated template"),
                    };
                    FeatureValue::symbol(token.as_deref().unwrap_or(BOUNDARY))
                })
                .collect();
            out.push(Instance::new(values, Symbol::new(tag)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens(inst: &Instance) -> Vec<String> {
        inst.values.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn case_rows() {
        let cases = parse_cases(
            "ate pizza with fork V\n\nate pizza with cheese N\n",
            &CaseFormat::default(),
        )
        .unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(tokens(&cases[0]), ["ate", "pizza", "with", "fork"]);
        assert_eq!(cases[0].label.as_str(), "V");

        let comma = CaseFormat {
            delimiter: Delimiter::Char(','),
            ..Default::default()
        };
        let cases = parse_cases("ate,pizza,with,fork,V\n", &comma).unwrap();
        assert_eq!(cases[0].label.as_str(), "V");

        let err = parse_cases("a b c d V\na b c d\n", &CaseFormat::default()).unwrap_err();
        assert_eq!(
            err,
            Error::RaggedRow {
                line: 2,
                expected: 5,
                found: 4
            }
        );

        let fixed = CaseFormat {
            arity: Some(4),
            ..Default::default()
        };
        let err = parse_cases("ate pizza with fork\n", &fixed).unwrap_err();
        assert_eq!(
            err,
            Error::RaggedRow {
                line: 1,
                expected: 5,
                found: 4
            }
        );

        assert_eq!(
            parse_cases("\n  \n", &CaseFormat::default()),
            Err(Error::EmptyFile)
        );
    }

    #[test]
    fn skip_leading_id_column() {
        let fmt = CaseFormat {
            skip_columns: 1,
            ..Default::default()
        };
        let cases = parse_cases(
            "0 join board as director V\n1 is chairman of N.V. N\n",
            &fmt,
        )
        .unwrap();
        assert_eq!(tokens(&cases[1]), ["is", "chairman", "of", "N.V."]);
    }

    #[test]
    fn write_then_parse() {
        let text = "ate pizza with fork V\nate pizza with cheese N\n";
        let cases = parse_cases(text, &CaseFormat::default()).unwrap();
        assert_eq!(write_cases(&cases, Delimiter::Whitespace).unwrap(), text);
    }

    #[test]
    fn queries_with_and_without_gold() {
        let q = parse_queries("a b\na b N\n", &CaseFormat::default(), 2).unwrap();
        assert_eq!(q[0].gold, None);
        assert_eq!(q[1].gold.as_ref().map(Symbol::as_str), Some("N"));
        assert!(matches!(
            parse_queries("a b c d\n", &CaseFormat::default(), 2),
            Err(Error::RaggedRow { line: 1, .. })
        ));
    }

    #[test]
    fn lexicons() {
        let line: String = (1..=25).map(|i| format!(" {}", i as f64 / 10.0)).collect();
        let lex = parse_vector_lexicon(&format!("pizza{line}\n")).unwrap();
        assert_eq!(lex.dimension, 25);
        assert_eq!(lex.get("pizza").unwrap().len(), 25);

        let lex = parse_vector_lexicon("a 1 2\na 3 4\nb 0 1\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.duplicates, 1);
        assert_eq!(&*lex.entries["a"], &[3.0, 4.0]);

        let short: String = (1..=24).map(|i| format!(" {i}")).collect();
        assert_eq!(
            parse_vector_lexicon(&format!("pizza{line}\nfork{short}\n")),
            Err(Error::DimensionMismatch {
                left: 25,
                right: 24
            })
        );
        assert!(matches!(
            parse_vector_lexicon("a 1 x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn vectorization() {
        let lex = parse_vector_lexicon("ate 1 0\npizza 0 1\nwith 1 1\nfork 2 0\n").unwrap();
        let cases = parse_cases(
            "ate pizza with fork V\nate pizza with salad N\n",
            &CaseFormat::default(),
        )
        .unwrap();
        let v = vectorize_cases(&cases[..1], &lex, MissingPolicy::Error).unwrap();
        assert_eq!(v[0].values.len(), 4);
        assert_eq!(v[0].label.as_str(), "V");
        assert_eq!(v[0].values[3], FeatureValue::vector(vec![2.0, 0.0]));

        let v = vectorize_cases(&cases, &lex, MissingPolicy::Zero).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].values[3], FeatureValue::vector(vec![0.0, 0.0]));

        assert_eq!(
            vectorize_cases(&cases, &lex, MissingPolicy::Error),
            Err(Error::MissingToken("salad".into()))
        );
    }

    #[test]
    fn templates() {
        assert_eq!(FeatureTemplate::parse("pdass").unwrap().arity(), 5);
        assert_eq!(FeatureTemplate::parse("pdddaaasss").unwrap().arity(), 10);
        assert!(FeatureTemplate::parse("pdx").is_err());
        assert!(FeatureTemplate::parse("").is_err());
    }

    fn open() -> HashSet<String> {
        PENN_OPEN_CLASS.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn unknown_word_features() {
        let corpus = parse_tagged_corpus("The/DT Bonds/NNS rallied/VBD ./.\n").unwrap();
        let lexicon = parse_tag_lexicon("rallied VBN VBD\nThe DT\n").unwrap();
        let pdass = FeatureTemplate::parse("pdass").unwrap();
        let cases = extract_unknown_word_cases(&corpus, &pdass, &lexicon, &open());
        assert_eq!(cases.len(), 2);
        assert_eq!(tokens(&cases[0]), ["B", "DT", "VBD-VBN", "s", "d"]);
        assert_eq!(cases[0].label.as_str(), "NNS");
        // "." is absent from the lexicon
        assert_eq!(tokens(&cases[1]), ["r", "NNS", "UNK", "d", "e"]);

        let corpus = parse_tagged_corpus("Ox/NN\n").unwrap();
        let cases = extract_unknown_word_cases(&corpus, &pdass, &lexicon, &open());
        assert_eq!(tokens(&cases[0]), ["O", "_", "_", "x", "O"]);
        let sss = FeatureTemplate::parse("sss").unwrap();
        let cases = extract_unknown_word_cases(&corpus, &sss, &lexicon, &open());
        assert_eq!(tokens(&cases[0]), ["x", "O", "_"]);

        let wide = FeatureTemplate::parse("pdddaaasss").unwrap();
        let corpus = parse_tagged_corpus("a/DT big/JJ dog/NN barked/VBD loudly/RB\n").unwrap();
        let cases = extract_unknown_word_cases(&corpus, &wide, &HashMap::new(), &open());
        assert!(cases.iter().all(|c| c.arity() == 10));
        assert_eq!(tokens(&cases[2])[1..7], ["NN", "JJ", "DT", "UNK", "_", "_"]);
    }

    #[test]
    fn corpus_errors() {
        assert!(matches!(
            parse_tagged_corpus("dog NN\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_tag_lexicon("dog\n").is_err());
    }
}
