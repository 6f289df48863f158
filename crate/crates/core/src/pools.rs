//! Segment pools: the partner segments drawn during mixing.
//!
//! Mention, token and sentence pools are harvested from a tagged corpus,
//! relation pools from an RE corpus. Duplicates are kept, so a uniform draw
//! over entries is frequency-weighted by corpus occurrence.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng as _;
use serde::Serialize;

use crate::corpus::{BioKind, BioLabel, RECorpus, TaggedCorpus, Token};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolSource {
    Mention,
    Token,
    Relation,
    /// Whole sentences, for sentence-level mixup.
    Sentence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TupleLabels {
    /// One BIO sequence per segment.
    Bio(Vec<Vec<BioLabel>>),
    /// A single directed relation label for the whole tuple.
    Relation(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentTuple {
    pub segments: Vec<Vec<Token>>,
    pub labels: TupleLabels,
}

impl SegmentTuple {
    pub fn arity(&self) -> usize {
        self.segments.len()
    }

    /// Entity type of the first label of the first segment, for BIO tuples.
    pub fn entity_type(&self) -> Option<&str> {
        match &self.labels {
            TupleLabels::Bio(seqs) => seqs.first()?.first()?.entity_type(),
            TupleLabels::Relation(_) => None,
        }
    }

    pub fn bio_labels(&self, j: usize) -> Option<&[BioLabel]> {
        match &self.labels {
            TupleLabels::Bio(seqs) => seqs.get(j).map(Vec::as_slice),
            TupleLabels::Relation(_) => None,
        }
    }

    pub fn relation(&self) -> Option<&str> {
        match &self.labels {
            TupleLabels::Relation(r) => Some(r),
            TupleLabels::Bio(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SegmentPool {
    arity: usize,
    source: PoolSource,
    entries: Vec<SegmentTuple>,
    by_type: HashMap<String, Vec<usize>>,
}

impl SegmentPool {
    fn new(arity: usize, source: PoolSource, entries: Vec<SegmentTuple>) -> Self {
        debug_assert!(entries.iter().all(|e| e.arity() == arity));
        let mut by_type: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if let Some(t) = e.entity_type() {
                by_type.entry(t.to_string()).or_default().push(i);
            }
        }
        SegmentPool {
            arity,
            source,
            entries,
            by_type,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn source(&self) -> PoolSource {
        self.source
    }

    pub fn entries(&self) -> &[SegmentTuple] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Indices of entries whose first label carries `entity_type`.
    pub fn indices_of_type(&self, entity_type: &str) -> &[usize] {
        self.by_type.get(entity_type).map_or(&[], Vec::as_slice)
    }

    /// Write one JSON object per entry.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            source: PoolSource,
            segments: Vec<Vec<&'a str>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            labels: Option<Vec<Vec<String>>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            relation: Option<&'a str>,
        }
        for e in &self.entries {
            let line = Line {
                source: self.source,
                segments: e
                    .segments
                    .iter()
                    .map(|s| s.iter().map(Token::as_str).collect())
                    .collect(),
                labels: match &e.labels {
                    TupleLabels::Bio(seqs) => Some(
                        seqs.iter()
                            .map(|s| s.iter().map(ToString::to_string).collect())
                            .collect(),
                    ),
                    TupleLabels::Relation(_) => None,
                },
                relation: e.relation(),
            };
            serde_json::to_writer(&mut out, &line)?;
            writeln!(out)?;
        }
        Ok(())
    }
}

/// One entry per maximal mention, in corpus order.
pub fn build_mention_pool(corpus: &TaggedCorpus) -> SegmentPool {
    let mut entries = Vec::new();
    for s in corpus.sentences() {
        for m in s.mentions() {
            let range = m.span.start..m.span.end;
            entries.push(SegmentTuple {
                segments: vec![s.tokens()[range.clone()].to_vec()],
                labels: TupleLabels::Bio(vec![s.labels()[range].to_vec()]),
            });
        }
    }
    SegmentPool::new(1, PoolSource::Mention, entries)
}

/// One entry per entity-labelled token.
pub fn build_token_pool(corpus: &TaggedCorpus) -> SegmentPool {
    build_token_pool_with(corpus, false)
}

/// Token pool; `include_outside` also admits `O` tokens.
pub fn build_token_pool_with(corpus: &TaggedCorpus, include_outside: bool) -> SegmentPool {
    let mut entries = Vec::new();
    for s in corpus.sentences() {
        for (t, l) in s.tokens().iter().zip(s.labels()) {
            if include_outside || l.kind() != BioKind::O {
                entries.push(SegmentTuple {
                    segments: vec![vec![t.clone()]],
                    labels: TupleLabels::Bio(vec![vec![l.clone()]]),
                });
            }
        }
    }
    SegmentPool::new(1, PoolSource::Token, entries)
}

/// One entry per sentence; the partner pool for whole-sequence mixup.
pub fn build_sentence_pool(corpus: &TaggedCorpus) -> SegmentPool {
    let entries = corpus
        .sentences()
        .iter()
        .map(|s| SegmentTuple {
            segments: vec![s.tokens().to_vec()],
            labels: TupleLabels::Bio(vec![s.labels().to_vec()]),
        })
        .collect();
    SegmentPool::new(1, PoolSource::Sentence, entries)
}

/// One `(e1, e2, relation)` entry per RE sample.
pub fn build_relation_pool(corpus: &RECorpus) -> SegmentPool {
    let entries = corpus
        .samples()
        .iter()
        .map(|s| SegmentTuple {
            segments: vec![s.e1_tokens().to_vec(), s.e2_tokens().to_vec()],
            labels: TupleLabels::Relation(s.relation().to_string()),
        })
        .collect();
    SegmentPool::new(2, PoolSource::Relation, entries)
}

/// Uniform draw over pool entries. Returns the entry index with the tuple.
pub fn draw_tuple<'p>(pool: &'p SegmentPool, rng: &mut Rng) -> Result<(usize, &'p SegmentTuple)> {
    if pool.entries.is_empty() {
        return Err(Error::EmptyPool);
    }
    let i = rng.random_range(0..pool.entries.len());
    Ok((i, &pool.entries[i]))
}

/// Surface form to synonym list. Lookups are case-sensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    map: HashMap<String, Vec<Token>>,
}

impl SynonymLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Identity lexicon: every token maps to itself.
    pub fn identity<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> Self {
        let mut lex = SynonymLexicon::new();
        for t in tokens {
            lex.map.entry(t.as_str().to_string()).or_insert_with(|| vec![t.clone()]);
        }
        lex
    }

    pub fn insert(&mut self, surface: impl Into<String>, synonyms: Vec<Token>) -> Result<()> {
        let surface = surface.into();
        if synonyms.is_empty() {
            return Err(Error::InvalidArgument(format!("no synonyms for {surface:?}")));
        }
        self.map.entry(surface).or_default().extend(synonyms);
        Ok(())
    }

    pub fn get(&self, surface: &str) -> Option<&[Token]> {
        self.map.get(surface).map(Vec::as_slice)
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.map.contains_key(surface)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn synonyms(&self) -> impl Iterator<Item = &Token> {
        self.map.values().flatten()
    }

    /// Write in the format read by [`load_synonym_lexicon`], keys sorted.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let mut keys: Vec<&String> = self.map.keys().collect();
        keys.sort_unstable();
        for k in keys {
            let syns: Vec<&str> = self.map[k].iter().map(Token::as_str).collect();
            writeln!(out, "{k}\t{}", syns.join(","))?;
        }
        Ok(())
    }
}

/// Read `<token>\t<syn1>,<syn2>,...` lines. Repeated keys extend the entry.
pub fn load_synonym_lexicon<R: BufRead>(input: R) -> Result<SynonymLexicon> {
    let mut lex = SynonymLexicon::new();
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
        let (key, rest) = line
            .split_once('\t')
            .ok_or_else(|| perr("expected <token>\\t<synonyms>".into()))?;
        let key = Token::new(key.trim()).map_err(|e| perr(e.to_string()))?;
        let synonyms = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(Token::new)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| perr(e.to_string()))?;
        if synonyms.is_empty() {
            return Err(perr(format!("empty synonym list for {key}")));
        }
        lex.insert(key.as_str(), synonyms)?;
    }
    Ok(lex)
}

/// Uniform draw among the synonyms of `token`; `None` if it has no entry.
pub fn draw_synonym(lexicon: &SynonymLexicon, token: &Token, rng: &mut Rng) -> Option<Token> {
    let syns = lexicon.get(token.as_str())?;
    Some(syns[rng.random_range(0..syns.len())].clone())
}
