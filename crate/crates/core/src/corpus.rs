//! NER and RE corpora: parsing, validation, downsampling and serialization.
//!
//! NER files are CoNLL-style, one `<token> <label>` pair per line with blank
//! lines between sentences. RE files are six-column TSV:
//! `tokens  e1_start  e1_end  e2_start  e2_end  relation`, spans half-open.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A single pre-tokenized surface form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    pub fn new(surface: impl Into<String>) -> Result<Self> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(Error::InvalidArgument("empty token".into()));
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "token {surface:?} contains whitespace"
            )));
        }
        Ok(Token(surface))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Token {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Token::new(s)
    }
}

impl From<Token> for String {
    fn from(t: Token) -> String {
        t.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BioKind {
    O,
    B,
    I,
}

/// `O`, `B-<type>` or `I-<type>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BioLabel {
    kind: BioKind,
    entity_type: Option<String>,
}

impl BioLabel {
    pub fn outside() -> Self {
        BioLabel {
            kind: BioKind::O,
            entity_type: None,
        }
    }

    pub fn begin(entity_type: impl Into<String>) -> Self {
        BioLabel {
            kind: BioKind::B,
            entity_type: Some(entity_type.into()),
        }
    }

    pub fn inside(entity_type: impl Into<String>) -> Self {
        BioLabel {
            kind: BioKind::I,
            entity_type: Some(entity_type.into()),
        }
    }

    pub fn kind(&self) -> BioKind {
        self.kind
    }

    pub fn entity_type(&self) -> Option<&str> {
        self.entity_type.as_deref()
    }

    pub fn is_outside(&self) -> bool {
        self.kind == BioKind::O
    }

    /// Same entity type with the kind switched to `B`.
    pub fn to_begin(&self) -> Self {
        match &self.entity_type {
            Some(t) => BioLabel::begin(t.clone()),
            None => BioLabel::outside(),
        }
    }
}

impl FromStr for BioLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(BioLabel::outside());
        }
        let (kind, ty) = match (s.strip_prefix("B-"), s.strip_prefix("I-")) {
            (Some(ty), _) => (BioKind::B, ty),
            (_, Some(ty)) => (BioKind::I, ty),
            _ => return Err(Error::UnknownLabel(s.to_string())),
        };
        if ty.is_empty() || ty.chars().any(char::is_whitespace) {
            return Err(Error::UnknownLabel(s.to_string()));
        }
        Ok(BioLabel {
            kind,
            entity_type: Some(ty.to_string()),
        })
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, &self.entity_type) {
            (BioKind::B, Some(t)) => write!(f, "B-{t}"),
            (BioKind::I, Some(t)) => write!(f, "I-{t}"),
            _ => f.write_str("O"),
        }
    }
}

/// First index at which `labels` breaks BIO validity, if any.
pub fn first_bio_violation(labels: &[BioLabel]) -> Option<usize> {
    labels.iter().enumerate().find_map(|(j, label)| {
        if label.kind != BioKind::I {
            return None;
        }
        let ok = j > 0
            && labels[j - 1].kind != BioKind::O
            && labels[j - 1].entity_type == label.entity_type;
        (!ok).then_some(j)
    })
}

/// Promote every dangling `I-X` to `B-X`.
pub fn repair_bio(labels: &mut [BioLabel]) {
    while let Some(j) = first_bio_violation(labels) {
        labels[j] = labels[j].to_begin();
    }
}

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A mention: a maximal `B-X I-X*` run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mention {
    pub span: Span,
    pub entity_type: String,
}

/// Extract mentions from a BIO-valid label sequence.
pub fn mentions(labels: &[BioLabel]) -> Vec<Mention> {
    let mut out = Vec::new();
    let mut j = 0;
    while j < labels.len() {
        let label = &labels[j];
        if label.kind == BioKind::O {
            j += 1;
            continue;
        }
        // a dangling I starts a mention as well, so the scan is total
        let ty = label.entity_type.clone().unwrap_or_default();
        let start = j;
        j += 1;
        while j < labels.len()
            && labels[j].kind == BioKind::I
            && labels[j].entity_type.as_deref() == Some(ty.as_str())
        {
            j += 1;
        }
        out.push(Mention {
            span: Span::new(start, j),
            entity_type: ty,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
    labels: Vec<BioLabel>,
}

impl Sentence {
    /// Build a sentence, checking lengths and BIO validity.
    pub fn new(tokens: Vec<Token>, labels: Vec<BioLabel>) -> Result<Self> {
        if tokens.is_empty() || tokens.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "sentence needs equal non-zero token/label counts, got {} and {}",
                tokens.len(),
                labels.len()
            )));
        }
        if let Some(position) = first_bio_violation(&labels) {
            return Err(Error::Bio {
                sentence: 0,
                position,
                message: format!("{} without a preceding B or I of the same type", labels[position]),
            });
        }
        Ok(Sentence { tokens, labels })
    }

    /// Convenience constructor from `(surface, label)` pairs.
    pub fn from_pairs<S: AsRef<str>, L: AsRef<str>>(pairs: &[(S, L)]) -> Result<Self> {
        let mut tokens = Vec::with_capacity(pairs.len());
        let mut labels = Vec::with_capacity(pairs.len());
        for (s, l) in pairs {
            tokens.push(Token::new(s.as_ref())?);
            labels.push(l.as_ref().parse()?);
        }
        Sentence::new(tokens, labels)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn labels(&self) -> &[BioLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn mentions(&self) -> Vec<Mention> {
        mentions(&self.labels)
    }
}

/// Insertion-ordered set of strings with index lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_items<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocab::new();
        for item in items {
            v.insert(item);
        }
        v
    }

    /// Insert if absent; returns the item's index either way.
    pub fn insert(&mut self, item: impl Into<String>) -> usize {
        let item = item.into();
        if let Some(&i) = self.index.get(&item) {
            return i;
        }
        let i = self.items.len();
        self.index.insert(item.clone(), i);
        self.items.push(item);
        i
    }

    pub fn get(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    pub fn item(&self, i: usize) -> &str {
        &self.items[i]
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Label vocabulary: `O` first, then labels in first-occurrence order.
fn label_vocab<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Vocab {
    let mut vocab = Vocab::new();
    vocab.insert("O");
    for s in sentences {
        for l in &s.labels {
            vocab.insert(l.to_string());
        }
    }
    vocab
}

fn token_vocab<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Vocab {
    let mut vocab = Vocab::new();
    for s in sentences {
        for t in &s.tokens {
            vocab.insert(t.as_str());
        }
    }
    vocab
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedCorpus {
    sentences: Vec<Sentence>,
    label_vocab: Vocab,
    token_vocab: Vocab,
}

impl TaggedCorpus {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        let label_vocab = label_vocab(&sentences);
        let token_vocab = token_vocab(&sentences);
        TaggedCorpus {
            sentences,
            label_vocab,
            token_vocab,
        }
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn label_vocab(&self) -> &Vocab {
        &self.label_vocab
    }

    pub fn token_vocab(&self) -> &Vocab {
        &self.token_vocab
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Promote dangling `I-X` to `B-X` instead of rejecting the sentence.
    pub repair_bio: bool,
}

fn finish_sentence(
    tokens: &mut Vec<Token>,
    labels: &mut Vec<BioLabel>,
    sentences: &mut Vec<Sentence>,
    options: ParseOptions,
    start_line: usize,
) -> Result<()> {
    if tokens.is_empty() {
        return Ok(());
    }
    let mut labels_taken = std::mem::take(labels);
    if options.repair_bio {
        repair_bio(&mut labels_taken);
    } else if let Some(position) = first_bio_violation(&labels_taken) {
        return Err(Error::Bio {
            sentence: sentences.len(),
            position,
            message: format!(
                "{} without a preceding B or I of the same type (line {})",
                labels_taken[position],
                start_line + position
            ),
        });
    }
    sentences.push(Sentence {
        tokens: std::mem::take(tokens),
        labels: labels_taken,
    });
    Ok(())
}

/// Parse a CoNLL-style NER stream with default options (reject BIO violations).
pub fn parse_conll<R: BufRead>(input: R) -> Result<TaggedCorpus> {
    parse_conll_with(input, ParseOptions::default())
}

pub fn parse_conll_with<R: BufRead>(input: R, options: ParseOptions) -> Result<TaggedCorpus> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    let mut start_line = 1;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("-DOCSTART-") {
            finish_sentence(&mut tokens, &mut labels, &mut sentences, options, start_line)?;
            start_line = lineno + 1;
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 2 fields (token, label), found {}", fields.len()),
            });
        }
        let token = Token::new(fields[0]).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let label: BioLabel = fields[1].parse().map_err(|e: Error| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        tokens.push(token);
        labels.push(label);
    }
    finish_sentence(&mut tokens, &mut labels, &mut sentences, options, start_line)?;
    Ok(TaggedCorpus::new(sentences))
}

pub fn write_conll<W: Write>(corpus: &TaggedCorpus, mut out: W) -> Result<()> {
    for (i, s) in corpus.sentences.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        for (t, l) in s.tokens.iter().zip(&s.labels) {
            writeln!(out, "{t}\t{l}")?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RESample {
    tokens: Vec<Token>,
    e1: Span,
    e2: Span,
    relation: String,
}

impl RESample {
    pub fn new(tokens: Vec<Token>, e1: Span, e2: Span, relation: impl Into<String>) -> Result<Self> {
        let relation = relation.into();
        let n = tokens.len();
        for (name, span) in [("e1", e1), ("e2", e2)] {
            if span.is_empty() || span.end > n {
                return Err(Error::InvalidArgument(format!(
                    "{name} span [{}, {}) invalid for {n} tokens",
                    span.start, span.end
                )));
            }
        }
        if e1.overlaps(&e2) {
            return Err(Error::InvalidArgument("e1 and e2 overlap".into()));
        }
        if relation.is_empty() || relation.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("bad relation label {relation:?}")));
        }
        Ok(RESample {
            tokens,
            e1,
            e2,
            relation,
        })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn e1(&self) -> Span {
        self.e1
    }

    pub fn e2(&self) -> Span {
        self.e2
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn e1_tokens(&self) -> &[Token] {
        &self.tokens[self.e1.start..self.e1.end]
    }

    pub fn e2_tokens(&self) -> &[Token] {
        &self.tokens[self.e2.start..self.e2.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RECorpus {
    samples: Vec<RESample>,
    relation_vocab: Vocab,
    token_vocab: Vocab,
}

impl RECorpus {
    pub fn new(samples: Vec<RESample>) -> Self {
        let relation_vocab = Vocab::from_items(samples.iter().map(|s| s.relation.as_str()));
        let mut token_vocab = Vocab::new();
        for s in &samples {
            for t in &s.tokens {
                token_vocab.insert(t.as_str());
            }
        }
        RECorpus {
            samples,
            relation_vocab,
            token_vocab,
        }
    }

    pub fn samples(&self) -> &[RESample] {
        &self.samples
    }

    pub fn relation_vocab(&self) -> &Vocab {
        &self.relation_vocab
    }

    pub fn token_vocab(&self) -> &Vocab {
        &self.token_vocab
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn parse_re<R: BufRead>(input: R) -> Result<RECorpus> {
    let mut samples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(perr(format!("expected 6 tab-separated fields, found {}", fields.len())));
        }
        let tokens = fields[0]
            .split_whitespace()
            .map(Token::new)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| perr(e.to_string()))?;
        let mut offsets = [0usize; 4];
        for (slot, field) in offsets.iter_mut().zip(&fields[1..5]) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| perr(format!("bad offset {field:?}")))?;
        }
        let sample = RESample::new(
            tokens,
            Span::new(offsets[0], offsets[1]),
            Span::new(offsets[2], offsets[3]),
            fields[5].trim(),
        )
        .map_err(|e| perr(e.to_string()))?;
        samples.push(sample);
    }
    Ok(RECorpus::new(samples))
}

pub fn write_re<W: Write>(corpus: &RECorpus, mut out: W) -> Result<()> {
    for s in &corpus.samples {
        let text = s
            .tokens
            .iter()
            .map(Token::as_str)
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(
            out,
            "{text}\t{}\t{}\t{}\t{}\t{}",
            s.e1.start, s.e1.end, s.e2.start, s.e2.end, s.relation
        )?;
    }
    Ok(())
}

/// Corpora that can be uniformly subsampled.
pub trait Subsample: Sized {
    fn size(&self) -> usize;
    /// Corpus restricted to `indices`, vocabularies rebuilt.
    fn select(&self, indices: &[usize]) -> Self;
}

impl Subsample for TaggedCorpus {
    fn size(&self) -> usize {
        self.len()
    }

    fn select(&self, indices: &[usize]) -> Self {
        TaggedCorpus::new(indices.iter().map(|&i| self.sentences[i].clone()).collect())
    }
}

impl Subsample for RECorpus {
    fn size(&self) -> usize {
        self.len()
    }

    fn select(&self, indices: &[usize]) -> Self {
        RECorpus::new(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }
}

/// Uniform subset of `size` units without replacement, in corpus order.
pub fn downsample<C: Subsample>(corpus: &C, size: usize, seed: u64) -> Result<C> {
    let n = corpus.size();
    if size > n {
        return Err(Error::InvalidArgument(format!(
            "cannot downsample {n} examples to {size}"
        )));
    }
    let mut rng = rng::stream(seed, "downsample", 0);
    let mut picked = index::sample(&mut rng, n, size).into_vec();
    picked.sort_unstable();
    Ok(corpus.select(&picked))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = "New B-LOC\nYork I-LOC\nCity I-LOC\n\nMarcello B-PER\nCuttitta I-PER\n";

    fn write_string(c: &TaggedCorpus) -> String {
        let mut buf = Vec::new();
        write_conll(c, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn parses_two_sentence_example() {
        let c = parse_conll(FIG1.as_bytes()).unwrap();
        assert_eq!(c.len(), 2);
        let m0 = c.sentences()[0].mentions();
        assert_eq!(m0, vec![Mention { span: Span::new(0, 3), entity_type: "LOC".into() }]);
        let m1 = c.sentences()[1].mentions();
        assert_eq!(m1, vec![Mention { span: Span::new(0, 2), entity_type: "PER".into() }]);
        assert_eq!(c.label_vocab().items(), ["O", "B-LOC", "I-LOC", "B-PER", "I-PER"]);
        assert_eq!(c.token_vocab().len(), 5);
    }

    #[test]
    fn empty_stream_is_empty_corpus() {
        let c = parse_conll("".as_bytes()).unwrap();
        assert_eq!(c.len(), 0);
        assert_eq!(c.label_vocab().items(), ["O"]);
    }

    #[test]
    fn dangling_inside_is_rejected_or_repaired() {
        match parse_conll("a I-LOC\n".as_bytes()) {
            Err(Error::Bio { sentence: 0, position: 0, .. }) => {}
            other => panic!("expected BIO error, got {other:?}"),
        }
        let c = parse_conll_with("a I-LOC\nb I-PER\n".as_bytes(), ParseOptions { repair_bio: true }).unwrap();
        let labels: Vec<String> = c.sentences()[0].labels().iter().map(|l| l.to_string()).collect();
        assert_eq!(labels, ["B-LOC", "B-PER"]);
    }

    #[test]
    fn wrong_field_count_reports_line() {
        match parse_conll("a O\nb c O\n".as_bytes()) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error on line 2, got {other:?}"),
        }
    }

    #[test]
    fn docstart_lines_are_skipped() {
        let c = parse_conll("-DOCSTART- -X- O O\n\nEU B-ORG\nrejects O\n".as_bytes()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.sentences()[0].len(), 2);
    }

    #[test]
    fn conll_round_trips() {
        for text in [FIG1, "x O\n", "a B-X\nb I-X\nc B-X\n\nd O\ne B-Y\n"] {
            let c = parse_conll(text.as_bytes()).unwrap();
            let again = parse_conll(write_string(&c).as_bytes()).unwrap();
            assert_eq!(c, again);
        }
    }

    #[test]
    fn parses_re_line() {
        let line = "the statue topped by an imposing head\t1\t2\t6\t7\tComponent-Whole(e2,e1)";
        let c = parse_re(line.as_bytes()).unwrap();
        assert_eq!(c.len(), 1);
        let s = &c.samples()[0];
        assert_eq!(s.e1_tokens()[0].as_str(), "statue");
        assert_eq!(s.e2_tokens()[0].as_str(), "head");
        assert_eq!(s.relation(), "Component-Whole(e2,e1)");
    }

    #[test]
    fn re_span_errors() {
        for bad in [
            "a b c\t1\t1\t2\t3\tOther",
            "a b c\t0\t1\t2\t4\tOther",
            "a b c\t0\t2\t1\t3\tOther",
            "a b c\t0\t1\t2\tOther",
        ] {
            let text = format!("x y\t0\t1\t1\t2\tOther\n{bad}\n");
            match parse_re(text.as_bytes()) {
                Err(Error::Parse { line: 2, .. }) => {}
                other => panic!("{bad:?}: expected parse error on line 2, got {other:?}"),
            }
        }
    }

    #[test]
    fn re_vocab_is_first_occurrence() {
        let text = "a b c\t0\t1\t2\t3\tOther\n\
                    d e f\t0\t1\t1\t2\tCause-Effect(e1,e2)\n\
                    g h\t1\t2\t0\t1\tOther\n";
        let c = parse_re(text.as_bytes()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.relation_vocab().items(), ["Other", "Cause-Effect(e1,e2)"]);
        let mut buf = Vec::new();
        write_re(&c, &mut buf).unwrap();
        assert_eq!(parse_re(buf.as_slice()).unwrap(), c);
    }

    #[test]
    fn downsample_edges() {
        let c = parse_conll(FIG1.as_bytes()).unwrap();
        assert_eq!(downsample(&c, 0, 1).unwrap().len(), 0);
        assert_eq!(downsample(&c, 2, 1).unwrap(), c);
        assert!(downsample(&c, 3, 1).is_err());
    }
}
