//! End-to-end runs: optional augmentation, training, test evaluation.

use std::time::Instant;

use ndarray::{Array2, Axis};
use serde::Serialize;

use crate::corpus::{RECorpus, TaggedCorpus, Vocab};
use crate::error::{Error, Result};
use crate::eval::{self, EvalReport, ReAccuracy};
use crate::mixer::{
    encode_original, encode_re_original, segmix_generate, segmix_generate_re, EmbeddingTable,
    Generated, MixConfig, MixedExample, MixedRESample, NerPools,
};
use crate::model::{self, REModel, REValidation, TaggerModel, TaggerValidation, TrainConfig, TrainTrace};
use crate::pools::{self, SynonymLexicon};

#[derive(Debug, Clone, Serialize)]
pub struct RunTiming {
    pub mixing_seconds: f64,
    pub training_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct NerRun {
    pub model: TaggerModel,
    pub report: EvalReport,
    pub trace: TrainTrace,
    pub augmented: usize,
    pub skipped: usize,
    pub timing: RunTiming,
}

/// Label vocabulary covering every corpus, training corpus first.
pub fn union_labels(corpora: &[&TaggedCorpus]) -> Vocab {
    let mut vocab = Vocab::new();
    for c in corpora {
        for l in c.label_vocab().items() {
            vocab.insert(l.clone());
        }
    }
    vocab
}

/// Token vocabulary covering every corpus, in order of appearance.
pub fn union_tokens(corpora: &[&TaggedCorpus]) -> Vocab {
    let mut vocab = Vocab::new();
    for c in corpora {
        for t in c.token_vocab().items() {
            vocab.insert(t.clone());
        }
    }
    vocab
}

/// Train a tagger over `labels` on the embedded training corpus plus
/// `extra` examples whose soft-label columns follow `extra_labels`.
#[allow(clippy::too_many_arguments)]
pub fn fit_ner(
    train: &TaggedCorpus,
    validation: Option<&TaggedCorpus>,
    labels: Vocab,
    table: &EmbeddingTable,
    extra: Vec<MixedExample>,
    extra_labels: &Vocab,
    window: usize,
    config: &TrainConfig,
) -> Result<(TaggerModel, TrainTrace)> {
    let mut data = train
        .sentences()
        .iter()
        .enumerate()
        .map(|(i, s)| encode_original(s, i, table, &labels))
        .collect::<Result<Vec<_>>>()?;
    for mut ex in extra {
        ex.soft_labels = widen(&ex.soft_labels, extra_labels, &labels)?;
        data.push(ex);
    }
    let mut tagger = TaggerModel::new(window, table.dim(), labels);
    let trace = model::train_tagger(
        &mut tagger,
        &data,
        validation.map(|corpus| TaggerValidation { corpus, table }),
        config,
    )?;
    Ok((tagger, trace))
}

/// Train a tagger on `train` (plus mixed examples when `mix` is set) and
/// score it on `test`.
#[allow(clippy::too_many_arguments)]
pub fn run_ner(
    train: &TaggedCorpus,
    validation: Option<&TaggedCorpus>,
    test: &TaggedCorpus,
    table: &EmbeddingTable,
    lexicon: Option<&SynonymLexicon>,
    mix: Option<&MixConfig>,
    window: usize,
    config: &TrainConfig,
) -> Result<NerRun> {
    let mut corpora = vec![train];
    corpora.extend(validation);
    corpora.push(test);
    let labels = union_labels(&corpora);

    let started = Instant::now();
    let generated = match mix {
        Some(cfg) => {
            let pools = NerPools::from_corpus(train, lexicon.cloned());
            segmix_generate(train, &pools, table, cfg)?
        }
        None => Generated {
            items: Vec::new(),
            requested: 0,
            skipped: 0,
        },
    };
    let mixing_seconds = started.elapsed().as_secs_f64();
    let (augmented, skipped) = (generated.items.len(), generated.skipped);

    let started = Instant::now();
    let (tagger, trace) = fit_ner(
        train,
        validation,
        labels,
        table,
        generated.items,
        train.label_vocab(),
        window,
        config,
    )?;
    let training_seconds = started.elapsed().as_secs_f64();
    let pred = tagger.predict(table, test)?;
    let report = eval::entity_f1(test, &pred)?;
    Ok(NerRun {
        model: tagger,
        report,
        trace,
        augmented,
        skipped,
        timing: RunTiming {
            mixing_seconds,
            training_seconds,
        },
    })
}

/// Re-index soft-label columns from `from` into `to`, which must contain
/// every label of `from`.
pub fn widen(soft: &Array2<f64>, from: &Vocab, to: &Vocab) -> Result<Array2<f64>> {
    if soft.ncols() != from.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} soft-label columns for {} labels",
            soft.ncols(),
            from.len()
        )));
    }
    if from == to {
        return Ok(soft.clone());
    }
    let mut out = Array2::zeros((soft.nrows(), to.len()));
    for (j, label) in from.items().iter().enumerate() {
        let k = to.get(label).ok_or_else(|| Error::UnknownLabel(label.clone()))?;
        out.column_mut(k).assign(&soft.column(j));
    }
    Ok(out)
}

/// Union of relation vocabularies in order of appearance.
pub fn union_relations(corpora: &[&RECorpus]) -> Vocab {
    let mut relations = Vocab::new();
    for c in corpora {
        for r in c.relation_vocab().items() {
            relations.insert(r.clone());
        }
    }
    relations
}

/// Relation counterpart of [`fit_ner`].
pub fn fit_re(
    train: &RECorpus,
    validation: Option<&RECorpus>,
    relations: Vocab,
    table: &EmbeddingTable,
    extra: Vec<MixedRESample>,
    extra_relations: &Vocab,
    config: &TrainConfig,
) -> Result<(REModel, TrainTrace)> {
    let mut data = train
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| encode_re_original(s, i, table, &relations))
        .collect::<Result<Vec<_>>>()?;
    for mut ex in extra {
        let row = ex.soft_relation.clone().insert_axis(Axis(0));
        ex.soft_relation = widen(&row, extra_relations, &relations)?.row(0).to_owned();
        data.push(ex);
    }
    let mut classifier = REModel::new(table.dim(), relations);
    let trace = model::train_re(
        &mut classifier,
        &data,
        validation.map(|corpus| REValidation { corpus, table }),
        config,
    )?;
    Ok((classifier, trace))
}

#[derive(Debug, Clone)]
pub struct ReRun {
    pub model: REModel,
    pub accuracy: ReAccuracy,
    pub trace: TrainTrace,
    pub augmented: usize,
    pub skipped: usize,
    pub timing: RunTiming,
}

/// Relation counterpart of [`run_ner`].
pub fn run_re(
    train: &RECorpus,
    validation: Option<&RECorpus>,
    test: &RECorpus,
    table: &EmbeddingTable,
    mix: Option<&MixConfig>,
    config: &TrainConfig,
) -> Result<ReRun> {
    let mut corpora = vec![train];
    corpora.extend(validation);
    corpora.push(test);
    let relations = union_relations(&corpora);

    let started = Instant::now();
    let generated = match mix {
        Some(cfg) => segmix_generate_re(train, &pools::build_relation_pool(train), table, cfg)?,
        None => Generated {
            items: Vec::new(),
            requested: 0,
            skipped: 0,
        },
    };
    let mixing_seconds = started.elapsed().as_secs_f64();
    let (augmented, skipped) = (generated.items.len(), generated.skipped);

    let started = Instant::now();
    let (classifier, trace) = fit_re(
        train,
        validation,
        relations.clone(),
        table,
        generated.items,
        train.relation_vocab(),
        config,
    )?;
    let training_seconds = started.elapsed().as_secs_f64();
    let pred = classifier.predict(table, test)?;
    let accuracy = eval::re_accuracy(test, &pred, &relations)?;
    Ok(ReRun {
        model: classifier,
        accuracy,
        trace,
        augmented,
        skipped,
        timing: RunTiming {
            mixing_seconds,
            training_seconds,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn widen_moves_columns() {
        let from = Vocab::from_items(["O", "B-X"]);
        let to = Vocab::from_items(["O", "B-Y", "B-X"]);
        let soft = ndarray::array![[0.25, 0.75]];
        assert_eq!(widen(&soft, &from, &to).unwrap(), ndarray::array![[0.25, 0.0, 0.75]]);
        assert!(widen(&soft, &to, &from).is_err());
    }

    #[test]
    fn small_run_learns_something() {
        let train = synth::synthetic_ner(120, 1);
        let test = synth::synthetic_ner(100, 2);
        let vocab = union_tokens(&[&train, &test]);
        let table = EmbeddingTable::random(vocab, 16, 4, 3).unwrap();
        let config = TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        };
        let run = run_ner(&train, None, &test, &table, None, None, 1, &config).unwrap();
        assert!(run.report.f1 > 0.3, "f1 {}", run.report.f1);
    }
}
