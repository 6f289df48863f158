use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context as _};
use clap::Args;
use ndarray::ArrayView1;
use segmix::eval::nearest_token;
use segmix::mixer::io::{self, Augmented};
use segmix::mixer::Provenance;

use super::{open, read_table};

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct RecoverArgs {
    /// Augmented file written by `augment`.
    #[arg(long)]
    pub augmented: PathBuf,
    /// The embedding table the file was generated with.
    #[arg(long)]
    pub table: PathBuf,
    /// Render only the first N examples.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Show label weights.
    #[arg(long)]
    pub weights: bool,
}

const EPS: f64 = 1e-9;

/// One soft-label row as text: the label itself when one label holds all the
/// mass, otherwise `[A/B]` by descending weight (ties by name) with `_` for
/// padding mass.
pub fn render_soft(row: ArrayView1<f64>, labels: &[String], weights: bool) -> String {
    let parts: Vec<(usize, f64)> = row.iter().copied().enumerate().filter(|&(_, w)| w > EPS).collect();
    let total: f64 = parts.iter().map(|p| p.1).sum();
    if parts.len() == 1 && (total - 1.0).abs() <= EPS {
        return labels[parts[0].0].clone();
    }
    let mut names: Vec<(&str, f64)> = parts.iter().map(|&(i, w)| (labels[i].as_str(), w)).collect();
    names.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    if total < 1.0 - EPS {
        let pad = 1.0 - total;
        let at = names.iter().position(|&(_, w)| w < pad).unwrap_or(names.len());
        names.insert(at, ("_", pad));
    }
    let rendered: Vec<String> = names
        .into_iter()
        .map(|(n, w)| if weights { format!("{n}:{w:.4}") } else { n.to_string() })
        .collect();
    format!("[{}]", rendered.join("/"))
}

fn describe(i: usize, p: &Provenance) -> String {
    let mut s = format!("# example {i} source {}", p.source);
    if let Some(v) = p.variant {
        let _ = write!(s, " variant {v}");
    }
    let _ = write!(s, " lambda {:.6}", p.lambda);
    if let Some(e) = p.pool_entry {
        let _ = write!(s, " pool_entry {e}");
    }
    s
}

pub fn run(a: &RecoverArgs) -> anyhow::Result<()> {
    let table = read_table(&a.table)?;
    let file = io::read(open(&a.augmented)?).with_context(|| format!("reading {}", a.augmented.display()))?;
    let header = file.header();
    if header.dim != table.dim() {
        bail!("augmented examples have dim {}, table has dim {}", header.dim, table.dim());
    }
    if header.table_fingerprint != table.fingerprint() {
        eprintln!("warning: table fingerprint differs from the one recorded in the augmented file");
    }
    let limit = a.limit.unwrap_or(usize::MAX);
    let mut out = String::new();
    match &file {
        Augmented::Ner(h, items) => {
            for (i, ex) in items.iter().enumerate().take(limit) {
                let _ = writeln!(out, "{}", describe(i, &ex.provenance));
                for (e, l) in ex.embeddings.rows().into_iter().zip(ex.soft_labels.rows()) {
                    let token = nearest_token(&table, e)?;
                    let _ = writeln!(out, "{token}\t{}", render_soft(l, &h.labels, a.weights));
                }
                out.push('\n');
            }
        }
        Augmented::Re(h, items) => {
            for (i, ex) in items.iter().enumerate().take(limit) {
                let _ = writeln!(out, "{}", describe(i, &ex.provenance));
                let _ = writeln!(out, "# relation {}", render_soft(ex.soft_relation.view(), &h.labels, a.weights));
                for (k, e) in ex.embeddings.rows().into_iter().enumerate() {
                    let token = nearest_token(&table, e)?;
                    let role = if ex.e1.start <= k && k < ex.e1.end {
                        "e1"
                    } else if ex.e2.start <= k && k < ex.e2.end {
                        "e2"
                    } else {
                        "-"
                    };
                    let _ = writeln!(out, "{token}\t{role}");
                }
                out.push('\n');
            }
        }
    }
    print!("{out}");
    Ok(())
}
