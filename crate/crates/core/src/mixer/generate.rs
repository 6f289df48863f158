//! The generation loop: candidate sampling, budget split and per-slot retries.

use rand::seq::index;
use rand::Rng as _;

use super::ner::{apply_mix, apply_replacement, draw_ner, NerDraw};
use super::re::{apply_re_mix, apply_re_replacement, draw_re};
use super::{EmbeddingTable, MixConfig, MixedExample, MixedRESample, NerPools, Variant, VariantMix};
use crate::corpus::{RECorpus, RESample, Sentence, TaggedCorpus};
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::pools::SegmentPool;
use crate::rng::{self, Rng};

/// Output of a generation run. `items.len() + skipped == requested`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated<T> {
    pub items: Vec<T>,
    pub requested: usize,
    pub skipped: usize,
}

/// Target size `round(rate * n)`.
pub fn target_size(n: usize, rate: f64) -> usize {
    (rate * n as f64).round() as usize
}

/// Candidate indices: without replacement when the target fits in the
/// corpus, with replacement otherwise.
pub fn candidates(n: usize, rate: f64, seed: u64) -> Result<Vec<usize>> {
    let target = target_size(n, rate);
    if target == 0 {
        return Ok(Vec::new());
    }
    if n == 0 {
        return Err(Error::InvalidArgument("cannot augment an empty corpus".into()));
    }
    let mut rng = rng::stream(seed, "segmix.candidates", 0);
    if target <= n {
        Ok(index::sample(&mut rng, n, target).into_vec())
    } else {
        Ok((0..target).map(|_| rng.random_range(0..n)).collect())
    }
}

/// Variant for each slot: largest-remainder split of `target` by weight,
/// assigned in contiguous blocks in declaration order.
pub fn budget(target: usize, mix: &VariantMix) -> Vec<Variant> {
    let parts = mix.parts();
    let exact: Vec<f64> = parts.iter().map(|&(_, w)| w * target as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut remaining = target - counts.iter().sum::<usize>().min(target);
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(parts.len() * 2) {
        if remaining == 0 {
            break;
        }
        if parts[i].1 > 0.0 {
            counts[i] += 1;
            remaining -= 1;
        }
    }
    parts
        .iter()
        .zip(counts)
        .flat_map(|(&(v, _), c)| std::iter::repeat_n(v, c))
        .collect()
}

/// Run `attempt` for every slot, redrawing the candidate on `None`.
fn drive<T, F>(n: usize, config: &MixConfig, attempt: F) -> Result<Generated<T>>
where
    T: Send,
    F: Fn(usize, Variant, &mut Rng) -> Result<Option<T>> + Sync + Send,
{
    config.validate()?;
    let cands = candidates(n, config.rate, config.seed)?;
    let plan = budget(cands.len(), &config.variant);
    let outcomes = map_indexed(cands.len(), config.execution, |slot| -> Result<Option<T>> {
        let mut rng = rng::stream(config.seed, "segmix.slot", slot as u64);
        let mut candidate = cands[slot];
        for retry in 0..=config.max_retries {
            if retry > 0 {
                candidate = rng.random_range(0..n);
            }
            if let Some(item) = attempt(candidate, plan[slot], &mut rng)? {
                return Ok(Some(item));
            }
        }
        Ok(None)
    });
    let mut items = Vec::with_capacity(outcomes.len());
    let mut skipped = 0;
    for outcome in outcomes {
        match outcome? {
            Some(item) => items.push(item),
            None => skipped += 1,
        }
    }
    Ok(Generated {
        items,
        requested: cands.len(),
        skipped,
    })
}

// Pools only need to be usable when something is generated.
fn check_ner(n: usize, pools: &NerPools, config: &MixConfig) -> Result<()> {
    if target_size(n, config.rate) == 0 {
        return Ok(());
    }
    for v in config.variant.variants() {
        pools.check(v)?;
    }
    Ok(())
}

fn ner_draws(
    corpus: &TaggedCorpus,
    pools: &NerPools,
    config: &MixConfig,
) -> Result<Generated<(usize, NerDraw)>> {
    check_ner(corpus.len(), pools, config)?;
    let sentences = corpus.sentences();
    drive(sentences.len(), config, |i, variant, rng| {
        Ok(draw_ner(&sentences[i], variant, pools, config, rng)?.map(|d| (i, d)))
    })
}

/// Generate `round(rate * N)` mixed NER examples.
pub fn segmix_generate(
    corpus: &TaggedCorpus,
    pools: &NerPools,
    table: &EmbeddingTable,
    config: &MixConfig,
) -> Result<Generated<MixedExample>> {
    let draws = ner_draws(corpus, pools, config)?;
    let sentences = corpus.sentences();
    let vocab = corpus.label_vocab();
    let items = map_indexed(draws.items.len(), config.execution, |k| {
        let (i, draw) = &draws.items[k];
        apply_mix(&sentences[*i], *i, draw, table, vocab, config.normalize_tail_labels)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Generated {
        items,
        requested: draws.requested,
        skipped: draws.skipped,
    })
}

/// Same draws as [`segmix_generate`], applied as hard replacement.
pub fn replacement_da(
    corpus: &TaggedCorpus,
    pools: &NerPools,
    config: &MixConfig,
) -> Result<Generated<Sentence>> {
    let draws = ner_draws(corpus, pools, config)?;
    let sentences = corpus.sentences();
    let items = draws
        .items
        .iter()
        .map(|(i, d)| apply_replacement(&sentences[*i], d))
        .collect::<Result<Vec<_>>>()?;
    Ok(Generated {
        items,
        requested: draws.requested,
        skipped: draws.skipped,
    })
}

fn check_re(n: usize, pool: &SegmentPool, config: &MixConfig) -> Result<()> {
    for v in config.variant.variants() {
        if v != Variant::Relation {
            return Err(Error::InvalidArgument(format!("variant {v} does not apply to RE corpora")));
        }
    }
    if pool.is_empty() && target_size(n, config.rate) > 0 {
        return Err(Error::EmptyPool);
    }
    Ok(())
}

pub fn segmix_generate_re(
    corpus: &RECorpus,
    pool: &SegmentPool,
    table: &EmbeddingTable,
    config: &MixConfig,
) -> Result<Generated<MixedRESample>> {
    check_re(corpus.len(), pool, config)?;
    let samples = corpus.samples();
    let vocab = corpus.relation_vocab();
    drive(samples.len(), config, |i, _, rng| {
        let draw = draw_re(pool, config, rng)?;
        apply_re_mix(&samples[i], i, &draw, table, vocab).map(Some)
    })
}

pub fn replacement_da_re(
    corpus: &RECorpus,
    pool: &SegmentPool,
    config: &MixConfig,
) -> Result<Generated<RESample>> {
    check_re(corpus.len(), pool, config)?;
    let samples = corpus.samples();
    drive(samples.len(), config, |i, _, rng| {
        let draw = draw_re(pool, config, rng)?;
        apply_re_replacement(&samples[i], &draw).map(Some)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_sizes() {
        assert_eq!(target_size(200, 0.2), 40);
        assert_eq!(target_size(200, 0.0), 0);
        assert_eq!(target_size(400, 0.3), 120);
        assert_eq!(target_size(7, 0.5), 4);
    }

    #[test]
    fn candidate_sampling() {
        let c = candidates(10, 0.5, 1).unwrap();
        assert_eq!(c.len(), 5);
        let mut d = c.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), 5);
        assert_eq!(candidates(10, 2.5, 1).unwrap().len(), 25);
        assert_eq!(c, candidates(10, 0.5, 1).unwrap());
        assert!(candidates(0, 0.5, 1).unwrap().is_empty());
    }

    #[test]
    fn budget_split() {
        let mix: VariantMix = "mention+token+synonym".parse().unwrap();
        let plan = budget(40, &mix);
        assert_eq!(plan.len(), 40);
        let count = |v| plan.iter().filter(|&&p| p == v).count();
        assert_eq!((count(Variant::Mention), count(Variant::Token), count(Variant::Synonym)), (14, 13, 13));
        let mix: VariantMix = "mention:1+token:0".parse().unwrap();
        assert!(budget(7, &mix).iter().all(|&v| v == Variant::Mention));
    }
}
