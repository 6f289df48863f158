use rand::Rng as _;

use super::ops::{mix_segments, one_hot, sample_lambda};
use super::{normalize_rows, splice, EmbeddingTable, MixConfig, MixedExample, NerPools, Provenance, Variant};
use crate::corpus::{repair_bio, BioLabel, Sentence, Span, Token, Vocab};
use crate::error::{Error, Result};
use crate::pools::{draw_synonym, SegmentPool, SynonymLexicon};
use crate::rng::Rng;

/// Uniformly pick the segment to mix, or `None` if the sentence has none.
pub fn select_segment(
    sentence: &Sentence,
    variant: Variant,
    lexicon: Option<&SynonymLexicon>,
    rng: &mut Rng,
) -> Option<Span> {
    let pick = |spans: Vec<Span>, rng: &mut Rng| -> Option<Span> {
        if spans.is_empty() {
            None
        } else {
            Some(spans[rng.random_range(0..spans.len())])
        }
    };
    match variant {
        Variant::Mention => pick(sentence.mentions().into_iter().map(|m| m.span).collect(), rng),
        Variant::Token => pick(
            sentence
                .labels()
                .iter()
                .enumerate()
                .filter(|(_, l)| !l.is_outside())
                .map(|(j, _)| Span::new(j, j + 1))
                .collect(),
            rng,
        ),
        Variant::Synonym => {
            let lexicon = lexicon?;
            pick(
                sentence
                    .tokens()
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| lexicon.contains(t.as_str()))
                    .map(|(j, _)| Span::new(j, j + 1))
                    .collect(),
                rng,
            )
        }
        Variant::WholeSequence => Some(Span::new(0, sentence.len())),
        Variant::Relation => None,
    }
}

/// Every random decision behind one mixed NER example.
#[derive(Debug, Clone, PartialEq)]
pub struct NerDraw {
    pub variant: Variant,
    pub lambda: f64,
    pub span: Span,
    pub partner_tokens: Vec<Token>,
    /// `None` keeps the original labels (synonym mixing).
    pub partner_labels: Option<Vec<BioLabel>>,
    pub pool_entry: Option<usize>,
}

fn pool_for(pools: &NerPools, variant: Variant) -> Option<&SegmentPool> {
    match variant {
        Variant::Mention => Some(&pools.mention),
        Variant::Token => Some(&pools.token),
        Variant::WholeSequence => Some(&pools.sentence),
        Variant::Synonym | Variant::Relation => None,
    }
}

/// Draw lambda, the own segment and the partner, in that order.
pub fn draw_ner(
    sentence: &Sentence,
    variant: Variant,
    pools: &NerPools,
    config: &MixConfig,
    rng: &mut Rng,
) -> Result<Option<NerDraw>> {
    pools.check(variant)?;
    let drawn = sample_lambda(config.alpha, rng)?;
    let lambda = config.lambda_override.unwrap_or(drawn);
    let Some(span) = select_segment(sentence, variant, pools.lexicon.as_ref(), rng) else {
        return Ok(None);
    };

    if variant == Variant::Synonym {
        let lexicon = pools.lexicon.as_ref().expect("checked above");
        let token = &sentence.tokens()[span.start];
        let Some(synonym) = draw_synonym(lexicon, token, rng) else {
            return Ok(None);
        };
        return Ok(Some(NerDraw {
            variant,
            lambda,
            span,
            partner_tokens: vec![synonym],
            partner_labels: None,
            pool_entry: None,
        }));
    }

    let pool = pool_for(pools, variant).expect("checked above");
    let entry = if config.same_type_only && variant != Variant::WholeSequence {
        let ty = sentence.labels()[span.start].entity_type().unwrap_or_default();
        let same = pool.indices_of_type(ty);
        if same.is_empty() {
            return Ok(None);
        }
        same[rng.random_range(0..same.len())]
    } else {
        rng.random_range(0..pool.len())
    };
    let tuple = &pool.entries()[entry];
    Ok(Some(NerDraw {
        variant,
        lambda,
        span,
        partner_tokens: tuple.segments[0].clone(),
        partner_labels: tuple.bio_labels(0).map(<[BioLabel]>::to_vec),
        pool_entry: Some(entry),
    }))
}

/// Embed and one-hot encode an unmixed sentence.
pub fn encode_original(
    sentence: &Sentence,
    source: usize,
    table: &EmbeddingTable,
    label_vocab: &Vocab,
) -> Result<MixedExample> {
    Ok(MixedExample {
        embeddings: table.embed(sentence.tokens()),
        soft_labels: one_hot(sentence.labels(), label_vocab)?,
        provenance: Provenance::original(source),
    })
}

/// Apply a draw: interpolate the selected segment with the partner.
pub fn apply_mix(
    sentence: &Sentence,
    source: usize,
    draw: &NerDraw,
    table: &EmbeddingTable,
    label_vocab: &Vocab,
    normalize_tail_labels: bool,
) -> Result<MixedExample> {
    let span = draw.span;
    if span.is_empty() || span.end > sentence.len() {
        return Err(Error::InvalidArgument(format!(
            "segment [{}, {}) outside sentence of length {}",
            span.start,
            span.end,
            sentence.len()
        )));
    }
    let embeddings = table.embed(sentence.tokens());
    let labels = one_hot(sentence.labels(), label_vocab)?;

    let own_e = table.embed(&sentence.tokens()[span.start..span.end]);
    let partner_e = table.embed(&draw.partner_tokens);
    let mixed_e = mix_segments(&own_e, &partner_e, draw.lambda)?;

    let own_labels = &sentence.labels()[span.start..span.end];
    let mixed_o = match &draw.partner_labels {
        Some(partner_labels) => {
            if partner_labels.len() != draw.partner_tokens.len() {
                return Err(Error::ShapeMismatch("partner tokens and labels differ in length".into()));
            }
            let mut mixed_o = mix_segments(
                &one_hot(own_labels, label_vocab)?,
                &one_hot(partner_labels, label_vocab)?,
                draw.lambda,
            )?;
            if normalize_tail_labels {
                normalize_rows(&mut mixed_o);
            }
            mixed_o
        }
        None => {
            if draw.partner_tokens.len() != span.len() {
                return Err(Error::ShapeMismatch(
                    "input-only mixing needs equal segment lengths".into(),
                ));
            }
            one_hot(own_labels, label_vocab)?
        }
    };

    let (embeddings, spans) = splice(&embeddings, &[(span, &mixed_e)]);
    let (soft_labels, _) = splice(&labels, &[(span, &mixed_o)]);
    Ok(MixedExample {
        embeddings,
        soft_labels,
        provenance: Provenance {
            source,
            variant: Some(draw.variant),
            segments: vec![span],
            mixed_segments: spans,
            pool_entry: draw.pool_entry,
            lambda: draw.lambda,
        },
    })
}

/// Apply a draw as hard replacement: the partner is substituted verbatim.
///
/// Partner labels that break BIO validity at the seams (possible with single
/// tokens) are repaired by promoting dangling `I-X` to `B-X`.
pub fn apply_replacement(sentence: &Sentence, draw: &NerDraw) -> Result<Sentence> {
    let span = draw.span;
    let mut tokens = sentence.tokens()[..span.start].to_vec();
    tokens.extend(draw.partner_tokens.iter().cloned());
    tokens.extend(sentence.tokens()[span.end..].iter().cloned());
    let mut labels = sentence.labels()[..span.start].to_vec();
    match &draw.partner_labels {
        Some(l) => labels.extend(l.iter().cloned()),
        None => labels.extend(sentence.labels()[span.start..span.end].iter().cloned()),
    }
    labels.extend(sentence.labels()[span.end..].iter().cloned());
    repair_bio(&mut labels);
    Sentence::new(tokens, labels)
}

/// Draw and apply in one step.
#[allow(clippy::too_many_arguments)]
pub fn mix_example(
    sentence: &Sentence,
    source: usize,
    variant: Variant,
    pools: &NerPools,
    table: &EmbeddingTable,
    label_vocab: &Vocab,
    config: &MixConfig,
    rng: &mut Rng,
) -> Result<MixedExample> {
    let draw = draw_ner(sentence, variant, pools, config, rng)?.ok_or(Error::NoEligibleSegment(source))?;
    apply_mix(sentence, source, &draw, table, label_vocab, config.normalize_tail_labels)
}
