use ndarray::{Array1, Array2};

use super::ops::{mix, mix_segments, one_hot_indices, sample_lambda};
use super::{splice, EmbeddingTable, MixConfig, MixedRESample, Provenance, Variant};
use crate::corpus::{RESample, Span, Token, Vocab};
use crate::error::{Error, Result};
use crate::pools::{draw_tuple, SegmentPool};
use crate::rng::Rng;

/// Every random decision behind one mixed RE example.
#[derive(Debug, Clone, PartialEq)]
pub struct ReDraw {
    pub lambda: f64,
    pub partner_e1: Vec<Token>,
    pub partner_e2: Vec<Token>,
    pub partner_relation: String,
    pub pool_entry: usize,
}

pub fn draw_re(pool: &SegmentPool, config: &MixConfig, rng: &mut Rng) -> Result<ReDraw> {
    if pool.arity() != 2 {
        return Err(Error::InvalidArgument(format!(
            "relation mixing needs a pool of arity 2, got {}",
            pool.arity()
        )));
    }
    let drawn = sample_lambda(config.alpha, rng)?;
    let lambda = config.lambda_override.unwrap_or(drawn);
    let (entry, tuple) = draw_tuple(pool, rng)?;
    Ok(ReDraw {
        lambda,
        partner_e1: tuple.segments[0].clone(),
        partner_e2: tuple.segments[1].clone(),
        partner_relation: tuple.relation().unwrap_or_default().to_string(),
        pool_entry: entry,
    })
}

fn relation_one_hot(relation: &str, vocab: &Vocab) -> Result<Array2<f64>> {
    let i = vocab
        .get(relation)
        .ok_or_else(|| Error::UnknownLabel(relation.to_string()))?;
    Ok(one_hot_indices(&[i], vocab.len()))
}

pub fn encode_re_original(
    sample: &RESample,
    source: usize,
    table: &EmbeddingTable,
    relation_vocab: &Vocab,
) -> Result<MixedRESample> {
    Ok(MixedRESample {
        embeddings: table.embed(sample.tokens()),
        e1: sample.e1(),
        e2: sample.e2(),
        soft_relation: relation_one_hot(sample.relation(), relation_vocab)?.row(0).to_owned(),
        provenance: Provenance::original(source),
    })
}

/// Mix e1 against the partner's first nominal and e2 against its second,
/// with a shared lambda; the relation label is mixed the same way.
pub fn apply_re_mix(
    sample: &RESample,
    source: usize,
    draw: &ReDraw,
    table: &EmbeddingTable,
    relation_vocab: &Vocab,
) -> Result<MixedRESample> {
    let embeddings = table.embed(sample.tokens());
    let mut blocks = Vec::with_capacity(2);
    for (own, partner) in [(sample.e1_tokens(), &draw.partner_e1), (sample.e2_tokens(), &draw.partner_e2)] {
        blocks.push(mix_segments(&table.embed(own), &table.embed(partner), draw.lambda)?);
    }
    let (embeddings, spans) = splice(
        &embeddings,
        &[(sample.e1(), &blocks[0]), (sample.e2(), &blocks[1])],
    );
    let own = relation_one_hot(sample.relation(), relation_vocab)?;
    let partner = relation_one_hot(&draw.partner_relation, relation_vocab)?;
    let soft: Array1<f64> = mix(&own, &partner, draw.lambda)?.row(0).to_owned();
    Ok(MixedRESample {
        embeddings,
        e1: spans[0],
        e2: spans[1],
        soft_relation: soft,
        provenance: Provenance {
            source,
            variant: Some(Variant::Relation),
            segments: vec![sample.e1(), sample.e2()],
            mixed_segments: spans,
            pool_entry: Some(draw.pool_entry),
            lambda: draw.lambda,
        },
    })
}

/// Substitute both nominals and the relation label verbatim.
pub fn apply_re_replacement(sample: &RESample, draw: &ReDraw) -> Result<RESample> {
    let mut parts = [(sample.e1(), &draw.partner_e1, 0usize), (sample.e2(), &draw.partner_e2, 1)];
    parts.sort_by_key(|p| p.0.start);
    let mut tokens = Vec::new();
    let mut spans = [Span::new(0, 0); 2];
    let mut src = 0;
    for (span, partner, which) in parts {
        tokens.extend_from_slice(&sample.tokens()[src..span.start]);
        let start = tokens.len();
        tokens.extend(partner.iter().cloned());
        spans[which] = Span::new(start, tokens.len());
        src = span.end;
    }
    tokens.extend_from_slice(&sample.tokens()[src..]);
    RESample::new(tokens, spans[0], spans[1], draw.partner_relation.clone())
}

pub fn mix_re_sample(
    sample: &RESample,
    source: usize,
    pool: &SegmentPool,
    table: &EmbeddingTable,
    relation_vocab: &Vocab,
    config: &MixConfig,
    rng: &mut Rng,
) -> Result<MixedRESample> {
    let draw = draw_re(pool, config, rng)?;
    apply_re_mix(sample, source, &draw, table, relation_vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_re, RECorpus};
    use crate::pools::build_relation_pool;
    use crate::rng::stream;

    fn corpus() -> RECorpus {
        parse_re(
            "the statue topped by an imposing head\t1\t2\t6\t7\tComponent-Whole(e2,e1)\n\
             smoke came from the burning old factory\t0\t1\t5\t7\tCause-Effect(e2,e1)\n\
             a b c d\t3\t4\t0\t1\tOther\n"
                .as_bytes(),
        )
        .unwrap()
    }

    fn draw_from(c: &RECorpus, entry: usize, lambda: f64) -> ReDraw {
        let s = &c.samples()[entry];
        ReDraw {
            lambda,
            partner_e1: s.e1_tokens().to_vec(),
            partner_e2: s.e2_tokens().to_vec(),
            partner_relation: s.relation().to_string(),
            pool_entry: entry,
        }
    }

    #[test]
    fn soft_relation_label() {
        let c = corpus();
        let table = EmbeddingTable::random(c.token_vocab().clone(), 4, 2, 1).unwrap();
        let v = c.relation_vocab();
        let m = apply_re_mix(&c.samples()[2], 2, &draw_from(&c, 1, 0.7), &table, v).unwrap();
        let other = v.get("Other").unwrap();
        let cause = v.get("Cause-Effect(e2,e1)").unwrap();
        assert!((m.soft_relation[other] - 0.7).abs() < 1e-15);
        assert!((m.soft_relation[cause] - 0.3).abs() < 1e-15);
        assert!((m.soft_relation.sum() - 1.0).abs() < 1e-15);
        // e2 (position 0) grows from 1 to 2 rows, e1 shifts right
        assert_eq!(m.e2, Span::new(0, 2));
        assert_eq!(m.e1, Span::new(4, 5));
        assert_eq!(m.embeddings.nrows(), 5);

        let same = apply_re_mix(&c.samples()[2], 2, &draw_from(&c, 2, 0.4), &table, v).unwrap();
        assert_eq!(same.soft_relation[other], 1.0);
    }

    #[test]
    fn limits() {
        let c = corpus();
        let table = EmbeddingTable::random(c.token_vocab().clone(), 4, 2, 1).unwrap();
        let v = c.relation_vocab();
        let s = &c.samples()[0];
        let identity = apply_re_mix(s, 0, &draw_from(&c, 1, 1.0), &table, v).unwrap();
        let orig = encode_re_original(s, 0, &table, v).unwrap();
        assert_eq!(identity.soft_relation, orig.soft_relation);
        // partner e2 is two tokens, so compare against replacement at lambda 0
        let d = draw_from(&c, 1, 0.0);
        let replaced = apply_re_replacement(s, &d).unwrap();
        let zero = apply_re_mix(s, 0, &d, &table, v).unwrap();
        let enc = encode_re_original(&replaced, 0, &table, v).unwrap();
        assert_eq!(zero.embeddings, enc.embeddings);
        assert_eq!((zero.e1, zero.e2), (replaced.e1(), replaced.e2()));
        assert_eq!(zero.soft_relation, enc.soft_relation);
    }

    #[test]
    fn pool_draw_is_seeded() {
        let c = corpus();
        let pool = build_relation_pool(&c);
        let cfg = MixConfig::default();
        let a = draw_re(&pool, &cfg, &mut stream(5, "re", 0)).unwrap();
        let b = draw_re(&pool, &cfg, &mut stream(5, "re", 0)).unwrap();
        assert_eq!(a, b);
    }
}
