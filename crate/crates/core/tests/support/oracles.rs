//! Brute-force reimplementations working on label strings.

use std::collections::BTreeMap;

use segmix::corpus::{BioLabel, RECorpus, TaggedCorpus};

/// Every `(start, end, type)` such that the span is a maximal run opening
/// with `B-X` or an `I-X` not continuing an `X` run, followed only by `I-X`.
pub fn spans(labels: &[String]) -> Vec<(usize, usize, String)> {
    let n = labels.len();
    let ty = |l: &str| l.get(2..).unwrap_or("").to_string();
    let continues = |prev: &str, ty: &str| prev != "O" && prev[2..] == *ty;
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..=n {
            let first = &labels[u];
            if first == "O" {
                continue;
            }
            let t = ty(first);
            let opens = first.starts_with("B-") || u == 0 || !continues(&labels[u - 1], &t);
            let body = (u + 1..v).all(|k| labels[k] == format!("I-{t}"));
            let closed = v == n || labels[v] != format!("I-{t}");
            if opens && body && closed {
                out.push((u, v, t));
            }
        }
    }
    out
}

pub fn strings(labels: &[BioLabel]) -> Vec<String> {
    labels.iter().map(|l| l.to_string()).collect()
}

pub fn erase(labels: &[String]) -> Vec<String> {
    labels
        .iter()
        .map(|l| if l == "O" { l.clone() } else { format!("{}-ENTITY", &l[..1]) })
        .collect()
}

/// Sorted multiset of `(tokens, labels)` for every mention.
pub fn mention_pool(corpus: &TaggedCorpus) -> Vec<(Vec<String>, Vec<String>)> {
    let mut out = Vec::new();
    for s in corpus.sentences() {
        let labels = strings(s.labels());
        for (u, v, _) in spans(&labels) {
            let tokens = s.tokens()[u..v].iter().map(|t| t.as_str().to_string()).collect();
            out.push((tokens, labels[u..v].to_vec()));
        }
    }
    out.sort();
    out
}

pub fn token_pool(corpus: &TaggedCorpus) -> Vec<(Vec<String>, Vec<String>)> {
    let mut out = Vec::new();
    for s in corpus.sentences() {
        for (t, l) in s.tokens().iter().zip(s.labels()) {
            let l = l.to_string();
            if l != "O" {
                out.push((vec![t.as_str().to_string()], vec![l]));
            }
        }
    }
    out.sort();
    out
}

pub fn relation_pool(corpus: &RECorpus) -> Vec<(Vec<String>, Vec<String>, String)> {
    let mut out: Vec<_> = corpus
        .samples()
        .iter()
        .map(|s| {
            let words = |a: usize, b: usize| s.tokens()[a..b].iter().map(|t| t.as_str().to_string()).collect();
            (
                words(s.e1().start, s.e1().end),
                words(s.e2().start, s.e2().end),
                s.relation().to_string(),
            )
        })
        .collect();
    out.sort();
    out
}

/// `(precision, recall, f1)` by pairwise comparison of span lists.
pub fn f1(gold: &[Vec<String>], pred: &[Vec<String>]) -> (f64, f64, f64) {
    let mut correct = 0usize;
    let mut n_gold = 0usize;
    let mut n_pred = 0usize;
    for (g, p) in gold.iter().zip(pred) {
        let gs = spans(g);
        let ps = spans(p);
        n_gold += gs.len();
        n_pred += ps.len();
        correct += ps.iter().filter(|x| gs.contains(x)).count();
    }
    let p = if n_pred == 0 { 0.0 } else { correct as f64 / n_pred as f64 };
    let r = if n_gold == 0 { 0.0 } else { correct as f64 / n_gold as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

pub fn gold_strings(corpus: &TaggedCorpus) -> Vec<Vec<String>> {
    corpus.sentences().iter().map(|s| strings(s.labels())).collect()
}

/// Token confusion keyed by `(gold type, predicted type)`, `O` for outside.
pub fn confusion(gold: &[Vec<String>], pred: &[Vec<String>]) -> BTreeMap<(String, String), usize> {
    let ty = |l: &String| if l == "O" { "O".to_string() } else { l[2..].to_string() };
    let mut out = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        for (a, b) in g.iter().zip(p) {
            *out.entry((ty(a), ty(b))).or_insert(0) += 1;
        }
    }
    out
}

/// `(full, type_only, direction_only)` accuracies.
pub fn re_accuracy(gold: &[String], pred: &[String]) -> (f64, f64, f64) {
    let parts = |l: &String| match l.find('(') {
        Some(i) => (l[..i].to_string(), Some(l[i..].to_string())),
        None => (l.clone(), None),
    };
    let (mut full, mut ty, mut dir) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let (gt, gd) = parts(g);
        let (pt, pd) = parts(p);
        full += usize::from(g == p);
        ty += usize::from(gt == pt);
        dir += usize::from(gd.is_none() || pd.is_none() || gd == pd);
    }
    let n = gold.len().max(1) as f64;
    (full as f64 / n, ty as f64 / n, dir as f64 / n)
}
