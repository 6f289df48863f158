use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context as _};
use clap::Args;
use segmix::corpus::Vocab;
use segmix::experiment::{fit_ner, fit_re, union_labels, union_relations, union_tokens};
use segmix::mixer::io::{self, Augmented};
use segmix::model::{Checkpoint, TrainTrace};

use super::{build_table, open, read_ner, read_re, read_table, re_tokens, sibling, write_file};
use crate::manifest::{self, RunManifest};
use crate::{usage, FitArgs, TableArgs, Task};

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value = "ner")]
    pub task: Task,
    #[arg(long)]
    pub train: PathBuf,
    /// Validation corpus for early stopping.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Mixed examples written by `augment`.
    #[arg(long)]
    pub augmented: Option<PathBuf>,
    /// Embedding table; required with --augmented and must match its fingerprint.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub table_args: TableArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub repair_bio: bool,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss CSV; defaults to `<out>.trace.csv`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(a: &TrainArgs, args: &[OsString]) -> anyhow::Result<()> {
    if a.augmented.is_some() && a.table.is_none() {
        return Err(usage("--augmented needs the --table it was generated with"));
    }
    let config = a.fit.train_config(a.seed);
    config.validate().map_err(|e| usage(e.to_string()))?;
    let mut manifest = RunManifest::new("train", args, a)?;
    manifest.seed("seed", a.seed).input("train", &a.train)?;
    if let Some(p) = &a.dev {
        manifest.input("dev", p)?;
    }
    let augmented = match &a.augmented {
        Some(p) => {
            manifest.input("augmented", p)?;
            Some(io::read(open(p)?).with_context(|| format!("reading {}", p.display()))?)
        }
        None => None,
    };
    if let Some(p) = &a.table {
        manifest.input("table", p)?;
    }

    let started = Instant::now();
    let (checkpoint, trace) = match a.task {
        Task::Ner => {
            let train = read_ner(&a.train, a.repair_bio)?;
            let dev = a.dev.as_deref().map(|p| read_ner(p, a.repair_bio)).transpose()?;
            let mut corpora = vec![&train];
            corpora.extend(dev.as_ref());
            let table = match &a.table {
                Some(p) => read_table(p)?,
                None => build_table(union_tokens(&corpora), &a.table_args, a.seed)?,
            };
            let mut labels = union_labels(&corpora);
            let (extra, extra_labels) = match augmented {
                None => (Vec::new(), Vocab::new()),
                Some(Augmented::Ner(h, items)) => {
                    check_header(&h, &table)?;
                    for l in &h.labels {
                        labels.insert(l.clone());
                    }
                    (items, Vocab::from_items(h.labels))
                }
                Some(Augmented::Re(..)) => bail!("augmented file holds RE examples, --task is ner"),
            };
            let (model, trace) = fit_ner(&train, dev.as_ref(), labels, &table, extra, &extra_labels, a.fit.window, &config)?;
            (Checkpoint::Tagger(model, table), trace)
        }
        Task::Re => {
            let train = read_re(&a.train)?;
            let dev = a.dev.as_deref().map(read_re).transpose()?;
            let mut corpora = vec![&train];
            corpora.extend(dev.as_ref());
            let table = match &a.table {
                Some(p) => read_table(p)?,
                None => build_table(re_tokens(&corpora), &a.table_args, a.seed)?,
            };
            let mut relations = union_relations(&corpora);
            let (extra, extra_labels) = match augmented {
                None => (Vec::new(), Vocab::new()),
                Some(Augmented::Re(h, items)) => {
                    check_header(&h, &table)?;
                    for l in &h.labels {
                        relations.insert(l.clone());
                    }
                    (items, Vocab::from_items(h.labels))
                }
                Some(Augmented::Ner(..)) => bail!("augmented file holds NER examples, --task is re"),
            };
            let (model, trace) = fit_re(&train, dev.as_ref(), relations, &table, extra, &extra_labels, &config)?;
            (Checkpoint::Re(model, table), trace)
        }
    };
    let seconds = started.elapsed().as_secs_f64();

    write_file(&a.out, |w| Ok(checkpoint.write_to(w)?))?;
    let trace_path = a.trace.clone().unwrap_or_else(|| sibling(&a.out, ".trace.csv"));
    write_file(&trace_path, |w| Ok(trace.write_csv(w)?))?;
    manifest.output("checkpoint", &a.out)?.output("trace", &trace_path)?;
    manifest.timings.training_seconds = Some(seconds);
    manifest.write(&a.manifest.clone().unwrap_or_else(|| manifest::default_path(&a.out)))?;
    println!("{}", summary(&trace, seconds));
    println!("checkpoint written to {}", a.out.display());
    Ok(())
}

fn check_header(h: &io::Header, table: &segmix::mixer::EmbeddingTable) -> anyhow::Result<()> {
    if h.dim != table.dim() {
        bail!("augmented examples have dim {}, table has dim {}", h.dim, table.dim());
    }
    if h.table_fingerprint != table.fingerprint() {
        bail!("augmented examples were generated with a different embedding table");
    }
    Ok(())
}

fn summary(trace: &TrainTrace, seconds: f64) -> String {
    let epochs = trace.epochs.len();
    match (trace.best_validation, trace.epochs.last()) {
        (Some(v), _) => format!(
            "trained {epochs} epochs in {seconds:.2}s, best validation {v:.4} at epoch {}",
            trace.best_epoch
        ),
        (None, Some(last)) => format!("trained {epochs} epochs in {seconds:.2}s, final loss {:.4}", last.train_loss),
        (None, None) => "no training epochs run".to_string(),
    }
}
