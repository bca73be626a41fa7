//! Pregroup types, lexicons and reduction.
//!
//! A word's type is a sequence of simple types `x^z` where `x` is one of the
//! two atoms `n` / `s` and `z` is the adjoint winding (`-1` left, `+1` right).
//! A sentence is grammatical when its concatenated type reduces to exactly one
//! plain `s` through contractions `x^z · x^(z+1) → 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PregroupError {
    #[error("unknown type token {token:?} at column {column}")]
    UnknownToken { token: String, column: usize },
    #[error("out-of-vocabulary token {0:?}")]
    OutOfVocabulary(String),
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
}

/// The two atoms of the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomicType {
    N,
    S,
}

impl fmt::Display for AtomicType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AtomicType::N => "n",
            AtomicType::S => "s",
        })
    }
}

/// An atom with an adjoint winding in `{-1, 0, +1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimpleType {
    base: AtomicType,
    winding: i8,
}

impl SimpleType {
    /// Returns `None` if the winding is outside `{-1, 0, +1}`.
    pub fn new(base: AtomicType, winding: i8) -> Option<Self> {
        (-1..=1).contains(&winding).then_some(Self { base, winding })
    }

    pub const fn plain(base: AtomicType) -> Self {
        Self { base, winding: 0 }
    }

    pub const fn left(base: AtomicType) -> Self {
        Self { base, winding: -1 }
    }

    pub const fn right(base: AtomicType) -> Self {
        Self { base, winding: 1 }
    }

    pub fn base(self) -> AtomicType {
        self.base
    }

    pub fn winding(self) -> i8 {
        self.winding
    }

    /// True when `self · other → 1` is a valid contraction.
    pub fn contracts_with(self, other: SimpleType) -> bool {
        self.base == other.base && other.winding == self.winding + 1
    }

    pub fn is_sentence(self) -> bool {
        self == Self::plain(AtomicType::S)
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.winding {
            -1 => write!(f, "{}.l", self.base),
            1 => write!(f, "{}.r", self.base),
            _ => write!(f, "{}", self.base),
        }
    }
}

impl FromStr for SimpleType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let (base, rest) = match s.as_bytes().first() {
            Some(b'n') => (AtomicType::N, &s[1..]),
            Some(b's') => (AtomicType::S, &s[1..]),
            _ => return Err(()),
        };
        let winding = match rest {
            "" => 0,
            ".l" => -1,
            ".r" => 1,
            _ => return Err(()),
        };
        Ok(Self { base, winding })
    }
}

/// An ordered sequence of simple types.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PregroupType(Vec<SimpleType>);

impl PregroupType {
    pub fn new(simples: Vec<SimpleType>) -> Self {
        Self(simples)
    }

    pub fn noun() -> Self {
        Self(vec![SimpleType::plain(AtomicType::N)])
    }

    pub fn sentence() -> Self {
        Self(vec![SimpleType::plain(AtomicType::S)])
    }

    pub fn adjective() -> Self {
        Self(vec![SimpleType::plain(AtomicType::N), SimpleType::left(AtomicType::N)])
    }

    pub fn transitive_verb() -> Self {
        Self(vec![
            SimpleType::right(AtomicType::N),
            SimpleType::plain(AtomicType::S),
            SimpleType::left(AtomicType::N),
        ])
    }

    pub fn simples(&self) -> &[SimpleType] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for PregroupType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl FromStr for PregroupType {
    type Err = PregroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_type(s)
    }
}

/// Parses whitespace-separated tokens from `{n, s, n.l, n.r, s.l, s.r}`.
///
/// Columns in errors are 1-based character offsets into `text`.
pub fn parse_type(text: &str) -> Result<PregroupType, PregroupError> {
    let mut simples = Vec::new();
    let mut offset = 0;
    for token in text.split_whitespace() {
        let start = offset + text[offset..].find(token).unwrap_or(0);
        offset = start + token.len();
        let simple = token.parse::<SimpleType>().map_err(|_| PregroupError::UnknownToken {
            token: token.to_string(),
            column: text[..start].chars().count() + 1,
        })?;
        simples.push(simple);
    }
    Ok(PregroupType(simples))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartOfSpeech {
    Noun,
    Adjective,
    TransitiveVerb,
}

impl PartOfSpeech {
    /// The one type shape each part of speech may carry.
    pub fn canonical_type(self) -> PregroupType {
        match self {
            PartOfSpeech::Noun => PregroupType::noun(),
            PartOfSpeech::Adjective => PregroupType::adjective(),
            PartOfSpeech::TransitiveVerb => PregroupType::transitive_verb(),
        }
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Adjective => "adjective",
            PartOfSpeech::TransitiveVerb => "transitive-verb",
        })
    }
}

impl FromStr for PartOfSpeech {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "noun" => Ok(PartOfSpeech::Noun),
            "adjective" => Ok(PartOfSpeech::Adjective),
            "transitive-verb" => Ok(PartOfSpeech::TransitiveVerb),
            other => Err(format!("unknown part of speech {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        })
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            "neutral" => Ok(Polarity::Neutral),
            other => Err(format!("unknown polarity {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconEntry {
    pub ty: PregroupType,
    pub pos: PartOfSpeech,
    pub polarity: Polarity,
}

/// Word → (type, part of speech, polarity). One type per word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry, enforcing the token syntax and the part-of-speech shape.
    pub fn insert(
        &mut self,
        word: &str,
        pos: PartOfSpeech,
        polarity: Polarity,
    ) -> Result<(), String> {
        if word.is_empty() || !word.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(format!("word {word:?} must match [a-z]+"));
        }
        if self.entries.contains_key(word) {
            return Err(format!("duplicate word {word:?}"));
        }
        let ty = pos.canonical_type();
        self.entries.insert(word.to_string(), LexiconEntry { ty, pos, polarity });
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&LexiconEntry> {
        self.entries.get(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in lexicographic word order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &LexiconEntry)> {
        self.entries.iter().map(|(w, e)| (w.as_str(), e))
    }

    pub fn words_with(&self, pos: PartOfSpeech) -> Vec<&str> {
        self.iter().filter(|(_, e)| e.pos == pos).map(|(w, _)| w).collect()
    }

    /// Parses the tab-separated lexicon format:
    /// `word<TAB>type-string<TAB>pos<TAB>polarity`, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PregroupError> {
        let mut lexicon = Lexicon::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let err = |message: String| PregroupError::Lexicon { line, message };
            let fields: Vec<&str> = content.trim_end().split('\t').collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 tab-separated fields, got {}", fields.len())));
            }
            let ty = parse_type(fields[1]).map_err(|e| err(e.to_string()))?;
            let pos: PartOfSpeech = fields[2].trim().parse().map_err(err)?;
            let polarity: Polarity = fields[3].trim().parse().map_err(err)?;
            if ty != pos.canonical_type() {
                return Err(err(format!(
                    "{pos} must have type {}, found {ty}",
                    pos.canonical_type()
                )));
            }
            lexicon.insert(fields[0].trim(), pos, polarity).map_err(err)?;
        }
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> std::io::Result<Result<Self, PregroupError>> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# word\ttype\tpos\tpolarity\n");
        for (w, e) in self.iter() {
            out.push_str(&format!("{w}\t{}\t{}\t{}\n", e.ty, e.pos, e.polarity));
        }
        out
    }
}

/// A typed word.
pub type TypedWord = (String, PregroupType);

/// Looks up each token's type; token order is preserved.
pub fn assign_types<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &Lexicon,
) -> Result<Vec<TypedWord>, PregroupError> {
    tokens
        .iter()
        .map(|t| {
            let t = t.as_ref();
            lexicon
                .get(t)
                .map(|e| (t.to_string(), e.ty.clone()))
                .ok_or_else(|| PregroupError::OutOfVocabulary(t.to_string()))
        })
        .collect()
}

/// Concatenation of all word types.
pub fn concat_types(typed: &[TypedWord]) -> Vec<SimpleType> {
    typed.iter().flat_map(|(_, t)| t.simples().iter().copied()).collect()
}

/// Planar contraction structure proving that a type sequence reduces to `s`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReductionWitness {
    /// Contracted index pairs `(i, j)`, `i < j`, sorted by `i`.
    pub contractions: Vec<(usize, usize)>,
    /// Indices left after all contractions, ascending.
    pub residual: Vec<usize>,
}

impl ReductionWitness {
    /// Checks every structural invariant against `types`, including that
    /// the residual is exactly one plain `s`.
    pub fn validate(&self, types: &[SimpleType]) -> Result<(), String> {
        let mut seen = vec![false; types.len()];
        for &(i, j) in &self.contractions {
            if i >= j || j >= types.len() {
                return Err(format!("pair ({i}, {j}) out of order or range"));
            }
            if !types[i].contracts_with(types[j]) {
                return Err(format!("{} · {} does not contract", types[i], types[j]));
            }
            for k in [i, j] {
                if std::mem::replace(&mut seen[k], true) {
                    return Err(format!("index {k} used twice"));
                }
            }
        }
        for (a, &(i, j)) in self.contractions.iter().enumerate() {
            for &(k, l) in &self.contractions[a + 1..] {
                if (i < k && k < j && j < l) || (k < i && i < l && l < j) {
                    return Err(format!("pairs ({i}, {j}) and ({k}, {l}) cross"));
                }
            }
        }
        let residual: Vec<usize> = (0..types.len()).filter(|&k| !seen[k]).collect();
        if residual != self.residual {
            return Err("residual does not match contractions".into());
        }
        for &r in &residual {
            if self.contractions.iter().any(|&(i, j)| i < r && r < j) {
                return Err(format!("residual index {r} is enclosed by a contraction"));
            }
        }
        match residual.as_slice() {
            [r] if types[*r].is_sentence() => Ok(()),
            _ => Err("residual is not a single s".into()),
        }
    }
}

/// Outcome of [`reduce`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reduction {
    Grammatical(ReductionWitness),
    /// `residual` holds the indices left by the greedy stack pass.
    NotGrammatical { residual: Vec<usize> },
}

impl Reduction {
    pub fn is_grammatical(&self) -> bool {
        matches!(self, Reduction::Grammatical(_))
    }

    pub fn witness(&self) -> Option<&ReductionWitness> {
        match self {
            Reduction::Grammatical(w) => Some(w),
            Reduction::NotGrammatical { .. } => None,
        }
    }
}

/// Single left-to-right stack pass: each type cancels against the stack top
/// when they contract, otherwise it is pushed.
pub fn stack_reduce(types: &[SimpleType]) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut stack: Vec<usize> = Vec::with_capacity(types.len());
    let mut pairs = Vec::new();
    for (j, &u) in types.iter().enumerate() {
        match stack.last() {
            Some(&i) if types[i].contracts_with(u) => {
                stack.pop();
                pairs.push((i, j));
            }
            _ => stack.push(j),
        }
    }
    pairs.sort_unstable();
    (pairs, stack)
}

/// Decides whether `types` reduces to a single plain `s`.
///
/// The stack pass is tried first. It is incomplete for nested patterns such
/// as `n.l n n.r n s`, so when it fails an exact interval search settles the
/// question.
pub fn reduce(types: &[SimpleType]) -> Reduction {
    let (pairs, residual) = stack_reduce(types);
    if let [r] = residual.as_slice() {
        if types[*r].is_sentence() {
            return Reduction::Grammatical(ReductionWitness { contractions: pairs, residual });
        }
    }
    match interval_reduce(types) {
        Some(w) => Reduction::Grammatical(w),
        None => Reduction::NotGrammatical { residual },
    }
}

/// Exact search: `full[i][j]` holds whether `types[i..j]` cancels completely.
fn interval_reduce(types: &[SimpleType]) -> Option<ReductionWitness> {
    let n = types.len();
    if n.is_multiple_of(2) {
        return None;
    }
    // partner[i][j]: the index contracted with `i` inside a cancelling `i..j`.
    let mut full = vec![vec![false; n + 1]; n + 1];
    let mut partner = vec![vec![usize::MAX; n + 1]; n + 1];
    for (i, row) in full.iter_mut().enumerate() {
        row[i] = true;
    }
    for len in (2..=n).step_by(2) {
        for i in 0..=n - len {
            let j = i + len;
            for k in (i + 1..j).step_by(2) {
                if types[i].contracts_with(types[k]) && full[i + 1][k] && full[k + 1][j] {
                    full[i][j] = true;
                    partner[i][j] = k;
                    break;
                }
            }
        }
    }
    let mid = (0..n).find(|&m| types[m].is_sentence() && full[0][m] && full[m + 1][n])?;
    let mut pairs = Vec::with_capacity(n / 2);
    let mut todo = vec![(0, mid), (mid + 1, n)];
    while let Some((i, j)) = todo.pop() {
        if i < j {
            let k = partner[i][j];
            pairs.push((i, k));
            todo.push((i + 1, k));
            todo.push((k + 1, j));
        }
    }
    pairs.sort_unstable();
    Some(ReductionWitness { contractions: pairs, residual: vec![mid] })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(s: &str) -> Vec<SimpleType> {
        parse_type(s).unwrap().simples().to_vec()
    }

    #[test]
    fn parse_type_examples() {
        assert_eq!(ty("n.r s n.l"), PregroupType::transitive_verb().simples());
        assert_eq!(ty("n"), PregroupType::noun().simples());
        assert_eq!(
            parse_type("n x"),
            Err(PregroupError::UnknownToken { token: "x".into(), column: 3 })
        );
        assert!(matches!(parse_type("n.rr"), Err(PregroupError::UnknownToken { .. })));
    }

    #[test]
    fn display_round_trips() {
        for s in ["n", "s", "n.l", "n.r", "s.l", "s.r", "n.r s n.l"] {
            assert_eq!(parse_type(s).unwrap().to_string(), s);
        }
    }

    fn fig_lexicon() -> Lexicon {
        let mut lex = Lexicon::new();
        lex.insert("siva", PartOfSpeech::Noun, Polarity::Neutral).unwrap();
        lex.insert("comics", PartOfSpeech::Noun, Polarity::Neutral).unwrap();
        lex.insert("thrilling", PartOfSpeech::Adjective, Polarity::Positive).unwrap();
        lex.insert("hates", PartOfSpeech::TransitiveVerb, Polarity::Negative).unwrap();
        lex
    }

    #[test]
    fn assign_types_examples() {
        let lex = fig_lexicon();
        let typed = assign_types(&["siva", "hates", "thrilling", "comics"], &lex).unwrap();
        let types: Vec<_> = typed.iter().map(|(_, t)| t.to_string()).collect();
        assert_eq!(types, ["n", "n.r s n.l", "n n.l", "n"]);
        assert!(assign_types::<&str>(&[], &lex).unwrap().is_empty());
        assert_eq!(
            assign_types(&["siva", "xyzzy"], &lex),
            Err(PregroupError::OutOfVocabulary("xyzzy".into()))
        );
    }

    #[test]
    fn reduce_figure_sentence() {
        let types = ty("n n.r s n.l n n.l n");
        let w = reduce(&types).witness().cloned().unwrap();
        assert_eq!(w.contractions, vec![(0, 1), (3, 4), (5, 6)]);
        assert_eq!(w.residual, vec![2]);
        w.validate(&types).unwrap();
    }

    #[test]
    fn reduce_small_cases() {
        let w = reduce(&ty("s")).witness().cloned().unwrap();
        assert!(w.contractions.is_empty());
        assert!(!reduce(&ty("n s")).is_grammatical());
        assert!(!reduce(&ty("n n.l")).is_grammatical());
        assert!(!reduce(&[]).is_grammatical());
        assert_eq!(
            reduce(&ty("n n")),
            Reduction::NotGrammatical { residual: vec![0, 1] }
        );
    }

    #[test]
    fn nested_pattern_needs_interval_search() {
        let types = ty("n.l n n.r n s");
        let (_, residual) = stack_reduce(&types);
        assert_ne!(residual.len(), 1);
        let w = reduce(&types).witness().cloned().unwrap();
        assert_eq!(w.contractions, vec![(0, 3), (1, 2)]);
        w.validate(&types).unwrap();
    }

    #[test]
    fn lexicon_file_parsing() {
        let text = "# comment\nsiva\tn\tnoun\tneutral\nhates\tn.r s n.l\ttransitive-verb\tnegative # trailing\n\n";
        let lex = Lexicon::parse(text).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.get("hates").unwrap().polarity, Polarity::Negative);
        assert_eq!(Lexicon::parse(&lex.to_text()).unwrap(), lex);

        let bad_shape = Lexicon::parse("siva\tn n.l\tnoun\tneutral\n");
        assert!(matches!(bad_shape, Err(PregroupError::Lexicon { line: 1, .. })));
        let bad_word = Lexicon::parse("Siva\tn\tnoun\tneutral\n");
        assert!(matches!(bad_word, Err(PregroupError::Lexicon { .. })));
        let dup = Lexicon::parse("a\tn\tnoun\tneutral\na\tn\tnoun\tneutral\n");
        assert!(matches!(dup, Err(PregroupError::Lexicon { line: 2, .. })));
    }

    #[test]
    fn winding_bounded() {
        assert!(SimpleType::new(AtomicType::N, 2).is_none());
        assert!(SimpleType::new(AtomicType::S, -1).is_some());
    }
}
