//! Segment-level mixing.
//!
//! For each candidate example a mixing weight `lambda ~ Beta(alpha, alpha)` is
//! drawn, a task-specific segment is chosen in the example and a partner
//! segment is drawn from a pool. Both segments are embedded and one-hot
//! encoded, zero-padded to the longer length and interpolated as
//! `lambda * own + (1 - lambda) * partner`. The mixed block replaces the
//! original segment; when the partner is longer the sequence grows.
//!
//! `lambda = 1` reproduces the original example, `lambda = 0` is plain
//! replacement of the segment by the partner.

mod embedding;
mod generate;
pub mod io;
mod ner;
mod ops;
mod re;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::corpus::{Span, TaggedCorpus};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::pools::{self, SegmentPool, SynonymLexicon};

pub use embedding::EmbeddingTable;
pub use generate::{
    budget, candidates, replacement_da, replacement_da_re, segmix_generate, segmix_generate_re,
    Generated,
};
pub use ner::{
    apply_mix, apply_replacement, draw_ner, encode_original, mix_example, select_segment, NerDraw,
};
pub use ops::{mix, mix_segments, mixed_len, one_hot, one_hot_indices, pad_to_longer, sample_lambda};
pub use re::{
    apply_re_mix, apply_re_replacement, draw_re, encode_re_original, mix_re_sample, ReDraw,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Mention,
    Token,
    Synonym,
    Relation,
    WholeSequence,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Mention => "mention",
            Variant::Token => "token",
            Variant::Synonym => "synonym",
            Variant::Relation => "relation",
            Variant::WholeSequence => "whole_sequence",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mention" | "mmix" => Variant::Mention,
            "token" | "tmix" => Variant::Token,
            "synonym" | "smix" => Variant::Synonym,
            "relation" | "rmix" => Variant::Relation,
            "whole_sequence" | "whole" | "sequence" => Variant::WholeSequence,
            _ => return Err(Error::InvalidArgument(format!("unknown variant {s:?}"))),
        })
    }
}

/// One variant or a weighted combination of several.
///
/// Parsed from `mention`, `mention+token` (equal split) or
/// `mention:0.7+token:0.3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantMix {
    parts: Vec<(Variant, f64)>,
}

impl VariantMix {
    pub fn single(variant: Variant) -> Self {
        VariantMix {
            parts: vec![(variant, 1.0)],
        }
    }

    pub fn equal(variants: &[Variant]) -> Result<Self> {
        let w = 1.0 / variants.len() as f64;
        Self::weighted(variants.iter().map(|&v| (v, w)).collect())
    }

    pub fn weighted(parts: Vec<(Variant, f64)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("empty variant combination".into()));
        }
        if parts.iter().any(|&(_, w)| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("variant weights must be non-negative".into()));
        }
        let total: f64 = parts.iter().map(|&(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "variant weights sum to {total}, expected 1"
            )));
        }
        Ok(VariantMix { parts })
    }

    pub fn parts(&self) -> &[(Variant, f64)] {
        &self.parts
    }

    pub fn variants(&self) -> impl Iterator<Item = Variant> + '_ {
        self.parts.iter().filter(|&&(_, w)| w > 0.0).map(|&(v, _)| v)
    }
}

impl FromStr for VariantMix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = Vec::new();
        let mut explicit = None;
        for piece in s.split('+') {
            let piece = piece.trim();
            let (name, weight) = match piece.split_once(':') {
                Some((n, w)) => {
                    let w: f64 = w
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad weight in {piece:?}")))?;
                    (n, Some(w))
                }
                None => (piece, None),
            };
            match (explicit, weight.is_some()) {
                (None, e) => explicit = Some(e),
                (Some(a), b) if a != b => {
                    return Err(Error::InvalidArgument(
                        "give weights for all variants or for none".into(),
                    ))
                }
                _ => {}
            }
            parts.push((name.parse::<Variant>()?, weight.unwrap_or(0.0)));
        }
        if explicit == Some(true) {
            VariantMix::weighted(parts)
        } else {
            let variants: Vec<Variant> = parts.into_iter().map(|(v, _)| v).collect();
            VariantMix::equal(&variants)
        }
    }
}

impl fmt::Display for VariantMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.len() == 1 {
            return f.write_str(self.parts[0].0.name());
        }
        let equal = self.parts.iter().all(|&(_, w)| (w - self.parts[0].1).abs() < 1e-12);
        let rendered: Vec<String> = self
            .parts
            .iter()
            .map(|&(v, w)| if equal { v.to_string() } else { format!("{v}:{w}") })
            .collect();
        f.write_str(&rendered.join("+"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadPolicy {
    #[default]
    ZeroPad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixConfig {
    /// Beta shape parameter.
    pub alpha: f64,
    /// Augmentation rate: fraction of the corpus size to generate.
    pub rate: f64,
    pub variant: VariantMix,
    pub pad_policy: PadPolicy,
    /// Rescale padded tail label rows to sum to one.
    pub normalize_tail_labels: bool,
    pub seed: u64,
    /// Only draw partners whose entity type matches the selected segment.
    pub same_type_only: bool,
    /// Redraws per slot when a candidate has no eligible segment.
    pub max_retries: usize,
    /// Replace every drawn lambda by this value (the draw still happens).
    pub lambda_override: Option<f64>,
    pub execution: Execution,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig {
            alpha: 8.0,
            rate: 0.2,
            variant: VariantMix::single(Variant::Mention),
            pad_policy: PadPolicy::ZeroPad,
            normalize_tail_labels: false,
            seed: 0,
            same_type_only: false,
            max_retries: 16,
            lambda_override: None,
            execution: Execution::Parallel,
        }
    }
}

impl MixConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("rate must be non-negative, got {}", self.rate)));
        }
        if let Some(l) = self.lambda_override {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::InvalidArgument(format!("lambda override {l} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Where a mixed example came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Index of the source example in its corpus.
    pub source: usize,
    /// `None` for unmixed originals.
    pub variant: Option<Variant>,
    /// Selected segments in source coordinates.
    pub segments: Vec<Span>,
    /// The same segments in the coordinates of the mixed output.
    pub mixed_segments: Vec<Span>,
    /// Pool entry index of the partner, if drawn from a pool.
    pub pool_entry: Option<usize>,
    pub lambda: f64,
}

impl Provenance {
    pub fn original(source: usize) -> Self {
        Provenance {
            source,
            variant: None,
            segments: Vec::new(),
            mixed_segments: Vec::new(),
            pool_entry: None,
            lambda: 1.0,
        }
    }
}

/// Augmented NER example: per-position embeddings and soft labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedExample {
    pub embeddings: Array2<f64>,
    pub soft_labels: Array2<f64>,
    pub provenance: Provenance,
}

impl MixedExample {
    pub fn len(&self) -> usize {
        self.embeddings.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.nrows() == 0
    }
}

/// Augmented RE example: mixed sequence, nominal spans, soft relation label.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRESample {
    pub embeddings: Array2<f64>,
    pub e1: Span,
    pub e2: Span,
    pub soft_relation: Array1<f64>,
    pub provenance: Provenance,
}

/// Partner sources for the NER variants.
#[derive(Debug, Clone)]
pub struct NerPools {
    pub mention: SegmentPool,
    pub token: SegmentPool,
    pub sentence: SegmentPool,
    pub lexicon: Option<SynonymLexicon>,
}

impl NerPools {
    pub fn from_corpus(corpus: &TaggedCorpus, lexicon: Option<SynonymLexicon>) -> Self {
        NerPools {
            mention: pools::build_mention_pool(corpus),
            token: pools::build_token_pool(corpus),
            sentence: pools::build_sentence_pool(corpus),
            lexicon,
        }
    }

    /// Fail if a variant cannot draw partners.
    pub fn check(&self, variant: Variant) -> Result<()> {
        let pool = match variant {
            Variant::Mention => &self.mention,
            Variant::Token => &self.token,
            Variant::WholeSequence => &self.sentence,
            Variant::Synonym => {
                return match &self.lexicon {
                    Some(l) if !l.is_empty() => Ok(()),
                    Some(_) => Err(Error::EmptyPool),
                    None => Err(Error::InvalidArgument(
                        "synonym variant needs a synonym lexicon".into(),
                    )),
                }
            }
            Variant::Relation => {
                return Err(Error::InvalidArgument(
                    "relation variant applies to RE corpora only".into(),
                ))
            }
        };
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(())
    }
}

/// Rebuild a matrix with each `(span, block)` written over `span`.
///
/// Spans must be disjoint. Returns the new matrix and each block's span in it,
/// in the order the replacements were given.
pub(crate) fn splice(
    base: &Array2<f64>,
    replacements: &[(Span, &Array2<f64>)],
) -> (Array2<f64>, Vec<Span>) {
    let mut order: Vec<usize> = (0..replacements.len()).collect();
    order.sort_by_key(|&i| replacements[i].0.start);
    let rows = base.nrows() + replacements.iter().map(|(_, b)| b.nrows()).sum::<usize>()
        - replacements.iter().map(|(s, _)| s.len()).sum::<usize>();
    let mut out = Array2::zeros((rows, base.ncols()));
    let mut new_spans = vec![Span::new(0, 0); replacements.len()];
    let mut src = 0;
    let mut dst = 0;
    let copy = |out: &mut Array2<f64>, from: ndarray::ArrayView2<f64>, dst: &mut usize| {
        let n = from.nrows();
        out.slice_mut(ndarray::s![*dst..*dst + n, ..]).assign(&from);
        *dst += n;
    };
    for i in order {
        let (span, block) = replacements[i];
        copy(&mut out, base.slice(ndarray::s![src..span.start, ..]), &mut dst);
        let start = dst;
        copy(&mut out, block.view(), &mut dst);
        new_spans[i] = Span::new(start, dst);
        src = span.end;
    }
    copy(&mut out, base.slice(ndarray::s![src.., ..]), &mut dst);
    (out, new_spans)
}

/// Divide each row by its sum (rows summing to zero are left alone).
pub(crate) fn normalize_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let total = row.sum();
        if total > 0.0 {
            row /= total;
        }
    }
}
