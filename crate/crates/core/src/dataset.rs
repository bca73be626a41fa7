//! Labeled sentence datasets: template generation, stratified splits and
//! the `label<TAB>sentence` file format.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pregroup::{Lexicon, PartOfSpeech, Polarity};

/// Label for positive sentiment.
pub const POSITIVE: usize = 0;
/// Label for negative sentiment.
pub const NEGATIVE: usize = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DataError {
    #[error("vocabulary can produce at most {max} distinct sentences, {requested} requested")]
    TooSmall { max: usize, requested: usize },
    #[error("split sizes {sizes:?} do not add up to {count}")]
    SplitSizes { sizes: [usize; 3], count: usize },
    #[error("{0} split does not contain both labels")]
    Unbalanced(&'static str),
    #[error("split index sets overlap or do not cover the dataset")]
    BadSplit,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub tokens: Vec<String>,
    pub label: usize,
}

impl Example {
    pub fn sentence(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn parts(&self) -> [(&'static str, &[usize]); 3] {
        [("train", &self.train), ("dev", &self.dev), ("test", &self.test)]
    }

    /// Disjoint and exhaustive over `0..n`.
    pub fn check(&self, n: usize) -> Result<(), DataError> {
        let mut seen = vec![false; n];
        for (_, idx) in self.parts() {
            for &i in idx {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(DataError::BadSplit);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(DataError::BadSplit)
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, idx) in self.parts() {
            out.push_str(name);
            for i in idx {
                let _ = write!(out, " {i}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, DataError> {
        let mut split = Split::default();
        for (idx, line) in text.lines().enumerate() {
            let err = |message: String| DataError::Parse { line: idx + 1, message };
            let mut toks = line.split_whitespace();
            let Some(name) = toks.next() else { continue };
            let indices = toks
                .map(|t| t.parse::<usize>().map_err(|_| err(format!("bad index {t:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            match name {
                "train" => split.train = indices,
                "dev" => split.dev = indices,
                "test" => split.test = indices,
                other => return Err(err(format!("unknown split {other:?}"))),
            }
        }
        Ok(split)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub split: Split,
}

impl Dataset {
    pub fn new(examples: Vec<Example>, split: Split) -> Result<Self, DataError> {
        split.check(examples.len())?;
        Ok(Self { examples, split })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self, idx: &[usize]) -> Vec<usize> {
        idx.iter().map(|&i| self.examples[i].label).collect()
    }

    /// `label<TAB>sentence` lines.
    pub fn to_text(&self) -> String {
        examples_to_text(&self.examples)
    }
}

pub fn examples_to_text(examples: &[Example]) -> String {
    let mut out = String::new();
    for e in examples {
        let _ = writeln!(out, "{}\t{}", e.label, e.sentence());
    }
    out
}

pub fn parse_examples(text: &str) -> Result<Vec<Example>, DataError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| DataError::Parse { line: idx + 1, message };
        let (label, sentence) = line.split_once('\t').ok_or_else(|| err("expected label<TAB>sentence".into()))?;
        let label = match label.trim() {
            "0" => POSITIVE,
            "1" => NEGATIVE,
            other => return Err(err(format!("label must be 0 or 1, got {other:?}"))),
        };
        let tokens: Vec<String> = sentence.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect();
        if tokens.is_empty() || tokens.iter().any(|t| !t.bytes().all(|b| b.is_ascii_lowercase())) {
            return Err(err("tokens must be lowercase [a-z]+".into()));
        }
        out.push(Example { tokens, label });
    }
    Ok(out)
}

/// Default train/dev/test sizes: 70/30/30 scaled to `count`.
pub fn default_split_sizes(count: usize) -> [usize; 3] {
    let side = (count as f64 * 30.0 / 130.0).round() as usize;
    let side = side.min(count / 2);
    [count - 2 * side, side, side]
}

/// Every sentence of the two clause templates, in a fixed order:
/// `NOUN VERB NOUN` then `NOUN VERB ADJ NOUN`. Verbs without a
/// positive/negative polarity are skipped.
pub fn template_sentences(lexicon: &Lexicon) -> Vec<Example> {
    let nouns = lexicon.words_with(PartOfSpeech::Noun);
    let adjectives = lexicon.words_with(PartOfSpeech::Adjective);
    let verbs: Vec<(&str, usize)> = lexicon
        .iter()
        .filter(|(_, e)| e.pos == PartOfSpeech::TransitiveVerb)
        .filter_map(|(w, e)| match e.polarity {
            Polarity::Positive => Some((w, POSITIVE)),
            Polarity::Negative => Some((w, NEGATIVE)),
            Polarity::Neutral => None,
        })
        .collect();
    let mut out = Vec::new();
    let words = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>();
    for &subj in &nouns {
        for &(verb, label) in &verbs {
            for &obj in &nouns {
                out.push(Example { tokens: words(&[subj, verb, obj]), label });
            }
        }
    }
    for &subj in &nouns {
        for &(verb, label) in &verbs {
            for &adj in &adjectives {
                for &obj in &nouns {
                    out.push(Example { tokens: words(&[subj, verb, adj, obj]), label });
                }
            }
        }
    }
    out
}

/// Draws `count` distinct template sentences and splits them, stratified
/// by label, into the given sizes. Deterministic for a fixed seed.
pub fn gen_data(lexicon: &Lexicon, count: usize, sizes: [usize; 3], seed: u64) -> Result<Dataset, DataError> {
    let mut pool = template_sentences(lexicon);
    if count > pool.len() {
        return Err(DataError::TooSmall { max: pool.len(), requested: count });
    }
    if sizes.iter().sum::<usize>() != count {
        return Err(DataError::SplitSizes { sizes, count });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool.truncate(count);
    let split = stratified_split(&pool, sizes)?;
    Dataset::new(pool, split)
}

fn stratified_split(examples: &[Example], sizes: [usize; 3]) -> Result<Split, DataError> {
    let count = examples.len();
    let by_label = |l: usize| -> Vec<usize> { (0..count).filter(|&i| examples[i].label == l).collect() };
    let positives = by_label(POSITIVE);
    let negatives = by_label(NEGATIVE);

    // largest-remainder share of positives per split
    let n0 = positives.len();
    let exact: Vec<f64> = sizes.iter().map(|&s| (n0 * s) as f64 / count.max(1) as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut left = n0 - quota.iter().sum::<usize>();
    for &s in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if quota[s] < sizes[s] {
            quota[s] += 1;
            left -= 1;
        }
    }

    let mut parts: [Vec<usize>; 3] = Default::default();
    let (mut p, mut n) = (positives.into_iter(), negatives.into_iter());
    for s in 0..3 {
        parts[s].extend(p.by_ref().take(quota[s]));
        parts[s].extend(n.by_ref().take(sizes[s] - quota[s]));
        parts[s].sort_unstable();
    }
    let [train, dev, test] = parts;
    let split = Split { train, dev, test };
    for (name, idx) in split.parts() {
        let labels: Vec<usize> = idx.iter().map(|&i| examples[i].label).collect();
        if !labels.contains(&POSITIVE) || !labels.contains(&NEGATIVE) {
            return Err(DataError::Unbalanced(name));
        }
    }
    Ok(split)
}
