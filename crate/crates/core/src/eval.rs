//! Evaluation: entity and span F1, relation accuracy breakdowns, confusion
//! matrices, and nearest-token recovery of mixed embeddings.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::Write;

use ndarray::{ArrayView1, ArrayView2};
use serde::Serialize;

use crate::corpus::{mentions, repair_bio, BioKind, BioLabel, RECorpus, Sentence, TaggedCorpus, Token, Vocab};
use crate::error::{Error, Result};
use crate::mixer::EmbeddingTable;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Row-wise argmax decoding, optionally followed by BIO repair.
pub fn decode_labels(matrix: ArrayView2<f64>, vocab: &Vocab, repair: bool) -> Result<Vec<BioLabel>> {
    if matrix.ncols() != vocab.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} columns for {} labels",
            matrix.ncols(),
            vocab.len()
        )));
    }
    let mut labels = matrix
        .rows()
        .into_iter()
        .map(|r| vocab.item(argmax(r)).parse())
        .collect::<Result<Vec<BioLabel>>>()?;
    if repair {
        repair_bio(&mut labels);
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold entities.
    pub support: usize,
    pub predicted: usize,
    pub correct: usize,
}

impl Score {
    pub fn from_counts(correct: usize, predicted: usize, support: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(correct, predicted);
        let recall = ratio(correct, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Score {
            precision,
            recall,
            f1,
            support,
            predicted,
            correct,
        }
    }
}

/// Token-level type confusion, rows gold and columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    /// `O` first, then entity types in first-occurrence order (gold, then predicted).
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn get(&self, gold: &str, pred: &str) -> usize {
        let g = self.labels.iter().position(|l| l == gold);
        let p = self.labels.iter().position(|l| l == pred);
        match (g, p) {
            (Some(g), Some(p)) => self.counts[g][p],
            _ => 0,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "gold\\pred,{}", self.labels.join(","))?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(out, "{label},{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub micro: Score,
    pub per_type: BTreeMap<String, Score>,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    /// Plain-text table, one line per type plus the micro average.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<12} {:>9} {:>9} {:>9} {:>8}", "type", "precision", "recall", "f1", "support");
        for (ty, sc) in &self.per_type {
            let _ = writeln!(
                s,
                "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                ty, sc.precision, sc.recall, sc.f1, sc.support
            );
        }
        let m = &self.micro;
        let _ = writeln!(
            s,
            "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            "micro", m.precision, m.recall, m.f1, m.support
        );
        s
    }
}

impl std::ops::Deref for EvalReport {
    type Target = Score;
    fn deref(&self) -> &Score {
        &self.micro
    }
}

fn check_alignment(gold: &TaggedCorpus, pred: &[Vec<BioLabel>]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} gold sentences, {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    for (i, (g, p)) in gold.sentences().iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::ShapeMismatch(format!(
                "sentence {i}: {} gold labels, {} predicted",
                g.len(),
                p.len()
            )));
        }
    }
    Ok(())
}

fn type_of(label: &BioLabel) -> &str {
    label.entity_type().unwrap_or("O")
}

/// Token-level confusion over entity types (and `O`).
pub fn confusion_matrix(gold: &TaggedCorpus, pred: &[Vec<BioLabel>]) -> Result<ConfusionMatrix> {
    check_alignment(gold, pred)?;
    let mut types = Vocab::new();
    types.insert("O");
    for s in gold.sentences() {
        for l in s.labels() {
            types.insert(type_of(l));
        }
    }
    for p in pred {
        for l in p {
            types.insert(type_of(l));
        }
    }
    let mut counts = vec![vec![0usize; types.len()]; types.len()];
    for (s, p) in gold.sentences().iter().zip(pred) {
        for (g, q) in s.labels().iter().zip(p) {
            let gi = types.get(type_of(g)).expect("inserted");
            let pi = types.get(type_of(q)).expect("inserted");
            counts[gi][pi] += 1;
        }
    }
    Ok(ConfusionMatrix {
        labels: types.items().to_vec(),
        counts,
    })
}

fn erase_type(label: &BioLabel) -> BioLabel {
    match label.kind() {
        BioKind::O => BioLabel::outside(),
        BioKind::B => BioLabel::begin(SPAN_TYPE),
        BioKind::I => BioLabel::inside(SPAN_TYPE),
    }
}

/// Entity type used for every mention once types are erased.
pub const SPAN_TYPE: &str = "ENTITY";

fn score_entities(gold: &TaggedCorpus, pred: &[Vec<BioLabel>]) -> Result<EvalReport> {
    check_alignment(gold, pred)?;
    // mentions never repeat within a sentence, so sets suffice
    let mut gold_set = HashSet::new();
    let mut per_type: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for (i, s) in gold.sentences().iter().enumerate() {
        for m in s.mentions() {
            per_type.entry(m.entity_type.clone()).or_default().2 += 1;
            gold_set.insert((i, m));
        }
    }
    let mut correct = 0;
    let mut predicted = 0;
    for (i, p) in pred.iter().enumerate() {
        for m in mentions(p) {
            predicted += 1;
            let entry = per_type.entry(m.entity_type.clone()).or_default();
            entry.1 += 1;
            if gold_set.contains(&(i, m)) {
                correct += 1;
                entry.0 += 1;
            }
        }
    }
    Ok(EvalReport {
        micro: Score::from_counts(correct, predicted, gold_set.len()),
        per_type: per_type
            .into_iter()
            .map(|(t, (c, p, g))| (t, Score::from_counts(c, p, g)))
            .collect(),
        confusion: confusion_matrix(gold, pred)?,
    })
}

/// Micro-averaged exact-match (span and type) entity F1.
pub fn entity_f1(gold: &TaggedCorpus, pred: &[Vec<BioLabel>]) -> Result<EvalReport> {
    score_entities(gold, pred)
}

/// Entity F1 after erasing types on both sides: `B-X` becomes `B-ENTITY`,
/// `I-X` becomes `I-ENTITY`, then spans are extracted. `B-PER I-LOC` is one
/// span here and two mentions under [`entity_f1`].
pub fn span_only_f1(gold: &TaggedCorpus, pred: &[Vec<BioLabel>]) -> Result<EvalReport> {
    check_alignment(gold, pred)?;
    let erased_gold = gold
        .sentences()
        .iter()
        .map(|s| Sentence::new(s.tokens().to_vec(), s.labels().iter().map(erase_type).collect()))
        .collect::<Result<Vec<_>>>()?;
    let erased_pred: Vec<Vec<BioLabel>> =
        pred.iter().map(|p| p.iter().map(erase_type).collect()).collect();
    score_entities(&TaggedCorpus::new(erased_gold), &erased_pred)
}

/// Split `Type(e1,e2)` into the type and the direction suffix.
pub fn split_relation(label: &str) -> (&str, Option<&str>) {
    for dir in ["(e1,e2)", "(e2,e1)"] {
        if let Some(ty) = label.strip_suffix(dir) {
            return (ty, Some(dir));
        }
    }
    (label, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReAccuracy {
    pub full: f64,
    pub type_only: f64,
    /// Pairs where either side has no direction count as matches.
    pub direction_only: f64,
    pub total: usize,
}

pub fn re_accuracy(gold: &RECorpus, pred: &[String], vocab: &Vocab) -> Result<ReAccuracy> {
    if gold.len() != pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} gold samples, {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let (mut full, mut ty, mut dir) = (0usize, 0usize, 0usize);
    for (s, p) in gold.samples().iter().zip(pred) {
        for label in [s.relation(), p.as_str()] {
            if vocab.get(label).is_none() {
                return Err(Error::UnknownLabel(label.to_string()));
            }
        }
        let (gt, gd) = split_relation(s.relation());
        let (pt, pd) = split_relation(p);
        full += usize::from(s.relation() == p);
        ty += usize::from(gt == pt);
        dir += usize::from(match (gd, pd) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        });
    }
    let n = gold.len();
    let ratio = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Ok(ReAccuracy {
        full: ratio(full),
        type_only: ratio(ty),
        direction_only: ratio(dir),
        total: n,
    })
}

/// Vocabulary token closest to `vector` in Euclidean distance; ties go to the
/// lowest vocabulary index. Hash-bucket rows are never returned.
pub fn nearest_token(table: &EmbeddingTable, vector: ArrayView1<f64>) -> Result<Token> {
    if vector.len() != table.dim() {
        return Err(Error::ShapeMismatch(format!(
            "vector of length {} for table dim {}",
            vector.len(),
            table.dim()
        )));
    }
    if table.vocab().is_empty() {
        return Err(Error::InvalidArgument("empty vocabulary".into()));
    }
    let mut best = (0, f64::INFINITY);
    for i in 0..table.vocab().len() {
        let d: f64 = table
            .vectors()
            .row(i)
            .iter()
            .zip(vector)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    Token::new(table.vocab().item(best.0))
}
