//! Linear classifiers over frozen embeddings, trained with soft cross-entropy.
//!
//! The tagger scores position `t` from the concatenated embeddings of the
//! window `t-w ..= t+w` (zero rows past the sentence edges). The RE model
//! scores the concatenated mean embeddings of the two nominals. Both are a
//! single weight matrix whose last row is the bias.

use std::io::{Read, Write};

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::binio;
use crate::corpus::{BioLabel, RECorpus, Span, TaggedCorpus, Vocab};
use crate::error::{Error, Result};
use crate::eval;
use crate::mixer::{EmbeddingTable, MixedExample, MixedRESample};
use crate::rng;
use crate::par::{map_indexed, Execution};

/// `-sum_c target_c * log softmax(logits)_c`.
pub fn soft_cross_entropy(logits: ArrayView1<f64>, target: ArrayView1<f64>) -> Result<f64> {
    if logits.len() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} logits against {} targets",
            logits.len(),
            target.len()
        )));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logits".into()));
    }
    let lse = log_sum_exp(logits);
    Ok(logits
        .iter()
        .zip(target)
        .filter(|(_, &t)| t != 0.0)
        .map(|(&z, &t)| -t * (z - lse))
        .sum())
}

fn log_sum_exp(logits: ArrayView1<f64>) -> f64 {
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    max + logits.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut p = logits.mapv(|v| (v - max).exp());
    let total = p.sum();
    p /= total;
    p
}

/// Gradient of [`soft_cross_entropy`] with respect to the logits:
/// `softmax(logits) * sum(target) - target`.
pub fn soft_cross_entropy_grad(logits: ArrayView1<f64>, target: ArrayView1<f64>) -> Array1<f64> {
    softmax(logits) * target.sum() - target
}

/// Design matrix (one row per scored item, bias column last) with targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub features: Array2<f64>,
    pub targets: Array2<f64>,
}

/// Summed loss and summed weight gradient over the rows of `design`.
fn loss_and_grad(weights: &Array2<f64>, design: &Design) -> Result<(f64, Array2<f64>)> {
    let logits = design.features.dot(weights);
    let mut delta = Array2::zeros(logits.dim());
    let mut loss = 0.0;
    for ((z, t), mut d) in logits
        .rows()
        .into_iter()
        .zip(design.targets.rows())
        .zip(delta.rows_mut())
    {
        loss += soft_cross_entropy(z, t)?;
        d.assign(&soft_cross_entropy_grad(z, t));
    }
    Ok((loss, design.features.t().dot(&delta)))
}

/// Mean loss per row over `designs`.
pub fn mean_loss(weights: &Array2<f64>, designs: &[Design]) -> Result<f64> {
    let mut total = 0.0;
    let mut rows = 0;
    for d in designs {
        let logits = d.features.dot(weights);
        for (z, t) in logits.rows().into_iter().zip(d.targets.rows()) {
            total += soft_cross_entropy(z, t)?;
        }
        rows += d.features.nrows();
    }
    Ok(if rows == 0 { 0.0 } else { total / rows as f64 })
}

/// Analytic mean-loss gradient against central differences (step `1e-4`) on
/// `samples` randomly chosen weights. Returns the largest relative error,
/// measured against `max(|analytic|, |numeric|, 1e-6)`.
pub fn gradient_check(weights: &Array2<f64>, design: &Design, samples: usize, seed: u64) -> Result<f64> {
    const H: f64 = 1e-4;
    let rows = design.features.nrows().max(1) as f64;
    let (_, grad) = loss_and_grad(weights, design)?;
    let grad = grad / rows;
    let mut rng = rng::stream(seed, "gradient_check", 0);
    let mut w = weights.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let i = rng.random_range(0..w.nrows());
        let j = rng.random_range(0..w.ncols());
        let orig = w[[i, j]];
        w[[i, j]] = orig + H;
        let plus = mean_loss(&w, std::slice::from_ref(design))?;
        w[[i, j]] = orig - H;
        let minus = mean_loss(&w, std::slice::from_ref(design))?;
        w[[i, j]] = orig;
        let numeric = (plus - minus) / (2.0 * H);
        let analytic = grad[[i, j]];
        let scale = analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 0.1,
            batch_size: 16,
            patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "learning rate and batch size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochStats>,
    /// Epoch of the returned weights (0 = initial weights).
    pub best_epoch: usize,
    pub best_validation: Option<f64>,
}

impl TrainTrace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,train_loss,validation")?;
        for e in &self.epochs {
            let v = e.validation.map(|v| v.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{}", e.epoch, e.train_loss, v)?;
        }
        Ok(())
    }
}

/// Mini-batch SGD on mean soft cross-entropy.
///
/// With a validation scorer, returns the weights of the best-scoring epoch and
/// stops after `patience` epochs without improvement.
pub fn train_linear<V>(
    weights: &mut Array2<f64>,
    data: &[Design],
    config: &TrainConfig,
    mut validate: Option<V>,
) -> Result<TrainTrace>
where
    V: FnMut(&Array2<f64>) -> f64,
{
    config.validate()?;
    if data.is_empty() && config.epochs > 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let mut trace = TrainTrace::default();
    let mut best = weights.clone();
    let mut best_score = validate.as_mut().map(|v| v(weights));
    trace.best_validation = best_score;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 1..=config.epochs {
        let mut rng = rng::stream(config.seed, "train.shuffle", epoch as u64);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_rows = 0;
        for batch in order.chunks(config.batch_size) {
            let mut grad = Array2::zeros(weights.dim());
            let mut rows = 0;
            for &i in batch {
                let (loss, g) = loss_and_grad(weights, &data[i]).map_err(|e| match e {
                    Error::NonFinite(_) => Error::Diverged {
                        epoch,
                        loss: f64::NAN,
                    },
                    e => e,
                })?;
                epoch_loss += loss;
                grad += &g;
                rows += data[i].features.nrows();
            }
            if rows > 0 {
                weights.scaled_add(-config.learning_rate / rows as f64, &grad);
            }
            epoch_rows += rows;
        }
        let train_loss = epoch_loss / epoch_rows.max(1) as f64;
        if !train_loss.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                loss: train_loss,
            });
        }
        let score = validate.as_mut().map(|v| v(weights));
        trace.epochs.push(EpochStats {
            epoch,
            train_loss,
            validation: score,
        });
        match (score, best_score) {
            (Some(s), Some(b)) => {
                if s > b {
                    best_score = Some(s);
                    best.assign(weights);
                    trace.best_epoch = epoch;
                    trace.best_validation = Some(s);
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= config.patience {
                        break;
                    }
                }
            }
            _ => trace.best_epoch = epoch,
        }
    }
    if best_score.is_some() {
        weights.assign(&best);
    }
    Ok(trace)
}

/// Context-window linear tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    window: usize,
    dim: usize,
    labels: Vocab,
    weights: Array2<f64>,
}

impl TaggerModel {
    /// Zero-initialised tagger.
    pub fn new(window: usize, dim: usize, labels: Vocab) -> Self {
        let features = (2 * window + 1) * dim + 1;
        let weights = Array2::zeros((features, labels.len()));
        TaggerModel {
            window,
            dim,
            labels,
            weights,
        }
    }

    pub fn from_weights(window: usize, dim: usize, labels: Vocab, weights: Array2<f64>) -> Result<Self> {
        if weights.dim() != ((2 * window + 1) * dim + 1, labels.len()) {
            return Err(Error::ShapeMismatch(format!(
                "tagger weights {:?} do not fit window {window}, dim {dim}, {} labels",
                weights.dim(),
                labels.len()
            )));
        }
        Ok(TaggerModel {
            window,
            dim,
            labels,
            weights,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &Vocab {
        &self.labels
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Array2<f64> {
        &mut self.weights
    }

    /// One row per position: window embeddings concatenated, then a 1.
    pub fn features(&self, embeddings: ArrayView2<f64>) -> Result<Array2<f64>> {
        if embeddings.ncols() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "embedding dim {} != model dim {}",
                embeddings.ncols(),
                self.dim
            )));
        }
        let n = embeddings.nrows();
        let width = 2 * self.window + 1;
        let mut out = Array2::zeros((n, width * self.dim + 1));
        for t in 0..n {
            for k in 0..width {
                let pos = t as isize + k as isize - self.window as isize;
                if pos >= 0 && (pos as usize) < n {
                    out.slice_mut(s![t, k * self.dim..(k + 1) * self.dim])
                        .assign(&embeddings.row(pos as usize));
                }
            }
            out[[t, width * self.dim]] = 1.0;
        }
        Ok(out)
    }

    pub fn forward(&self, embeddings: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.features(embeddings)?.dot(&self.weights))
    }

    pub fn design(&self, example: &MixedExample) -> Result<Design> {
        if example.soft_labels.ncols() != self.labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} soft-label columns for {} labels",
                example.soft_labels.ncols(),
                self.labels.len()
            )));
        }
        Ok(Design {
            features: self.features(example.embeddings.view())?,
            targets: example.soft_labels.clone(),
        })
    }

    /// Hard label predictions for every sentence of `corpus`.
    pub fn predict(&self, table: &EmbeddingTable, corpus: &TaggedCorpus) -> Result<Vec<Vec<BioLabel>>> {
        self.predict_with(table, corpus, Execution::default())
    }

    pub fn predict_with(
        &self,
        table: &EmbeddingTable,
        corpus: &TaggedCorpus,
        execution: Execution,
    ) -> Result<Vec<Vec<BioLabel>>> {
        let sentences = corpus.sentences();
        map_indexed(sentences.len(), execution, |i| {
            let logits = self.forward(table.embed(sentences[i].tokens()).view())?;
            eval::decode_labels(logits.view(), &self.labels, true)
        })
        .into_iter()
        .collect()
    }

    pub fn gradient_check(&self, example: &MixedExample, samples: usize, seed: u64) -> Result<f64> {
        gradient_check(&self.weights, &self.design(example)?, samples, seed)
    }
}

/// Validation data for early stopping of the tagger.
pub struct TaggerValidation<'a> {
    pub corpus: &'a TaggedCorpus,
    pub table: &'a EmbeddingTable,
}

/// Train the tagger; early stopping on validation entity F1 when given.
pub fn train_tagger(
    model: &mut TaggerModel,
    data: &[MixedExample],
    validation: Option<TaggerValidation<'_>>,
    config: &TrainConfig,
) -> Result<TrainTrace> {
    let designs = data.iter().map(|ex| model.design(ex)).collect::<Result<Vec<_>>>()?;
    let shell = TaggerModel::new(model.window, model.dim, model.labels.clone());
    let validator = match validation {
        Some(v) => {
            let feats = v
                .corpus
                .sentences()
                .iter()
                .map(|s| shell.features(v.table.embed(s.tokens()).view()))
                .collect::<Result<Vec<_>>>()?;
            let labels = shell.labels.clone();
            Some(move |w: &Array2<f64>| {
                let pred: Vec<Vec<BioLabel>> = feats
                    .iter()
                    .map(|f| eval::decode_labels(f.dot(w).view(), &labels, true).expect("decodable"))
                    .collect();
                eval::entity_f1(v.corpus, &pred).map(|r| r.f1).unwrap_or(0.0)
            })
        }
        None => None,
    };
    train_linear(&mut model.weights, &designs, config, validator)
}

/// Linear relation classifier over mean-pooled nominal embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct REModel {
    dim: usize,
    relations: Vocab,
    weights: Array2<f64>,
}

impl REModel {
    pub fn new(dim: usize, relations: Vocab) -> Self {
        let weights = Array2::zeros((2 * dim + 1, relations.len()));
        REModel {
            dim,
            relations,
            weights,
        }
    }

    pub fn from_weights(dim: usize, relations: Vocab, weights: Array2<f64>) -> Result<Self> {
        if weights.dim() != (2 * dim + 1, relations.len()) {
            return Err(Error::ShapeMismatch(format!(
                "RE weights {:?} do not fit dim {dim}, {} relations",
                weights.dim(),
                relations.len()
            )));
        }
        Ok(REModel {
            dim,
            relations,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn relations(&self) -> &Vocab {
        &self.relations
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn features(&self, embeddings: ArrayView2<f64>, e1: Span, e2: Span) -> Result<Array1<f64>> {
        if embeddings.ncols() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "embedding dim {} != model dim {}",
                embeddings.ncols(),
                self.dim
            )));
        }
        let mut out = Array1::zeros(2 * self.dim + 1);
        for (k, span) in [e1, e2].into_iter().enumerate() {
            if span.is_empty() || span.end > embeddings.nrows() {
                return Err(Error::InvalidArgument("nominal span out of range".into()));
            }
            let mean = embeddings
                .slice(s![span.start..span.end, ..])
                .mean_axis(Axis(0))
                .expect("non-empty span");
            out.slice_mut(s![k * self.dim..(k + 1) * self.dim]).assign(&mean);
        }
        out[2 * self.dim] = 1.0;
        Ok(out)
    }

    pub fn forward(&self, embeddings: ArrayView2<f64>, e1: Span, e2: Span) -> Result<Array1<f64>> {
        Ok(self.features(embeddings, e1, e2)?.dot(&self.weights))
    }

    pub fn design(&self, example: &MixedRESample) -> Result<Design> {
        if example.soft_relation.len() != self.relations.len() {
            return Err(Error::ShapeMismatch("relation vocabulary size mismatch".into()));
        }
        Ok(Design {
            features: self
                .features(example.embeddings.view(), example.e1, example.e2)?
                .insert_axis(Axis(0)),
            targets: example.soft_relation.clone().insert_axis(Axis(0)),
        })
    }

    pub fn predict(&self, table: &EmbeddingTable, corpus: &RECorpus) -> Result<Vec<String>> {
        corpus
            .samples()
            .iter()
            .map(|s| {
                let logits = self.forward(table.embed(s.tokens()).view(), s.e1(), s.e2())?;
                Ok(self.relations.item(eval::argmax(logits.view())).to_string())
            })
            .collect()
    }

    pub fn gradient_check(&self, example: &MixedRESample, samples: usize, seed: u64) -> Result<f64> {
        gradient_check(&self.weights, &self.design(example)?, samples, seed)
    }
}

pub struct REValidation<'a> {
    pub corpus: &'a RECorpus,
    pub table: &'a EmbeddingTable,
}

/// Train the RE model; early stopping on validation accuracy when given.
pub fn train_re(
    model: &mut REModel,
    data: &[MixedRESample],
    validation: Option<REValidation<'_>>,
    config: &TrainConfig,
) -> Result<TrainTrace> {
    let designs = data.iter().map(|ex| model.design(ex)).collect::<Result<Vec<_>>>()?;
    let shell = REModel::new(model.dim, model.relations.clone());
    let validator = match validation {
        Some(v) => {
            let feats = v
                .corpus
                .samples()
                .iter()
                .map(|s| shell.features(v.table.embed(s.tokens()).view(), s.e1(), s.e2()))
                .collect::<Result<Vec<_>>>()?;
            let gold: Vec<Option<usize>> = v
                .corpus
                .samples()
                .iter()
                .map(|s| shell.relations.get(s.relation()))
                .collect();
            Some(move |w: &Array2<f64>| {
                if feats.is_empty() {
                    return 0.0;
                }
                let hits = feats
                    .iter()
                    .zip(&gold)
                    .filter(|(f, g)| Some(eval::argmax(f.dot(w).view())) == **g)
                    .count();
                hits as f64 / feats.len() as f64
            })
        }
        None => None,
    };
    train_linear(&mut model.weights, &designs, config, validator)
}

const CKPT_MAGIC: &[u8; 8] = b"SGMXCKPT";
const CKPT_VERSION: u32 = 1;

/// A trained head together with the frozen embedding table it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Tagger(TaggerModel, EmbeddingTable),
    Re(REModel, EmbeddingTable),
}

impl Checkpoint {
    pub fn table(&self) -> &EmbeddingTable {
        match self {
            Checkpoint::Tagger(_, t) | Checkpoint::Re(_, t) => t,
        }
    }

    /// Layout: magic, version, kind (0 tagger, 1 RE), window, dim, rows, cols,
    /// label strings, f32 weights, embedding table. All integers u32 LE.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let (kind, window, dim, labels, weights, table) = match self {
            Checkpoint::Tagger(m, t) => (0, m.window, m.dim, &m.labels, &m.weights, t),
            Checkpoint::Re(m, t) => (1, 0, m.dim, &m.relations, &m.weights, t),
        };
        out.write_all(CKPT_MAGIC)?;
        binio::write_u32(&mut out, CKPT_VERSION)?;
        for v in [kind, window, dim, weights.nrows(), weights.ncols()] {
            binio::write_u32(&mut out, v as u32)?;
        }
        binio::write_strings(&mut out, labels.items())?;
        binio::write_f32s(&mut out, weights.iter().copied())?;
        table.write_to(&mut out)
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        binio::expect_magic(&mut input, CKPT_MAGIC)?;
        let version = binio::read_u32(&mut input)?;
        if version != CKPT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let mut header = [0usize; 5];
        for h in header.iter_mut() {
            *h = binio::read_u32(&mut input)? as usize;
        }
        let [kind, window, dim, rows, cols] = header;
        let labels = Vocab::from_items(binio::read_strings(&mut input)?);
        let data = binio::read_f32s(&mut input, rows * cols)?;
        let weights = Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Format(e.to_string()))?;
        let table = EmbeddingTable::read_from(&mut input)?;
        if table.dim() != dim {
            return Err(Error::Format("checkpoint table dim differs from model dim".into()));
        }
        match kind {
            0 => Ok(Checkpoint::Tagger(TaggerModel::from_weights(window, dim, labels, weights)?, table)),
            1 => Ok(Checkpoint::Re(REModel::from_weights(dim, labels, weights)?, table)),
            k => Err(Error::Format(format!("unknown checkpoint kind {k}"))),
        }
    }
}
