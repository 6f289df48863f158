use std::path::PathBuf;

use anyhow::{bail, Context as _};
use clap::Args;
use segmix::eval;
use segmix::model::Checkpoint;

use super::{open, read_ner, read_re, write_file};
use crate::execution;

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Test corpus, same format as the training corpus.
    #[arg(long)]
    pub test: PathBuf,
    /// Score spans with entity types erased.
    #[arg(long)]
    pub span_only: bool,
    /// Also print type-only and direction-only RE accuracy.
    #[arg(long)]
    pub re_breakdown: bool,
    #[arg(long)]
    pub repair_bio: bool,
    /// Write the full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the token-level type confusion matrix as CSV (NER only).
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    #[arg(long)]
    pub serial: bool,
}

pub fn run(a: &EvalArgs) -> anyhow::Result<()> {
    let checkpoint = Checkpoint::read_from(open(&a.checkpoint)?)
        .with_context(|| format!("reading checkpoint {}", a.checkpoint.display()))?;
    match checkpoint {
        Checkpoint::Tagger(model, table) => {
            let test = read_ner(&a.test, a.repair_bio)?;
            let unseen: Vec<&str> = test
                .label_vocab()
                .items()
                .iter()
                .filter(|l| model.labels().get(l).is_none())
                .map(String::as_str)
                .collect();
            if !unseen.is_empty() {
                bail!("test labels unknown to the checkpoint: {}", unseen.join(", "));
            }
            let pred = model.predict_with(&table, &test, execution(a.serial))?;
            let report = if a.span_only {
                eval::span_only_f1(&test, &pred)?
            } else {
                eval::entity_f1(&test, &pred)?
            };
            print!("{}", report.render());
            if let Some(p) = &a.report {
                write_file(p, |w| Ok(serde_json::to_writer_pretty(w, &report)?))?;
            }
            if let Some(p) = &a.confusion {
                write_file(p, |w| Ok(report.confusion.write_csv(w)?))?;
            }
        }
        Checkpoint::Re(model, table) => {
            if a.confusion.is_some() || a.span_only {
                bail!("--confusion and --span-only apply to NER checkpoints");
            }
            let test = read_re(&a.test)?;
            let pred = model.predict(&table, &test)?;
            let acc = eval::re_accuracy(&test, &pred, model.relations())?;
            println!("accuracy {:.4} ({} samples)", acc.full, acc.total);
            if a.re_breakdown {
                println!("type-only accuracy {:.4}", acc.type_only);
                println!("direction-only accuracy {:.4}", acc.direction_only);
            }
            if let Some(p) = &a.report {
                write_file(p, |w| Ok(serde_json::to_writer_pretty(w, &acc)?))?;
            }
        }
    }
    Ok(())
}
