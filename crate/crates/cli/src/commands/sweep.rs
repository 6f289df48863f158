use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, Context as _};
use clap::Args;
use segmix::corpus::{downsample, RECorpus, TaggedCorpus};
use segmix::experiment::{run_ner, run_re, union_tokens};
use segmix::mixer::{Variant, VariantMix};
use segmix::par::map_indexed;
use segmix::pools::SynonymLexicon;
use serde::Serialize;

use super::{build_table, parse_variant, read_lexicon, read_ner, read_re, re_tokens, sibling, write_file};
use crate::manifest::{self, RunManifest};
use crate::stats::summarize;
use crate::{execution, usage, FitArgs, MixArgs, TableArgs, Task};

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "ner")]
    pub task: Task,
    /// Full training corpus; each run downsamples it.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub test: PathBuf,
    /// Training sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "200")]
    pub sizes: Vec<usize>,
    /// Augmentation rates; 0 is the unaugmented baseline.
    #[arg(long, value_delimiter = ',', default_value = "0,0.2")]
    pub rates: Vec<f64>,
    /// Variants or combinations, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "mention")]
    pub variants: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub repair_bio: bool,
    #[command(flatten)]
    pub table_args: TableArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// --serial also runs the grid cells one at a time.
    #[command(flatten)]
    pub mix: MixArgs,
    /// Per-run CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Mean and standard deviation per cell; defaults to `<out>.aggregate.csv`.
    #[arg(long)]
    pub aggregate: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Do not print the aggregate table.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub size: usize,
    pub rate: f64,
    /// `None` for the baseline.
    pub variant: Option<VariantMix>,
    pub seed: u64,
}

impl Cell {
    fn variant_name(&self) -> String {
        self.variant.as_ref().map_or_else(|| "none".to_string(), ToString::to_string)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub size: usize,
    pub rate: f64,
    pub variant: String,
    pub seed: u64,
    pub metric: &'static str,
    pub score: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub augmented: usize,
    pub skipped: usize,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub size: usize,
    pub rate: f64,
    pub variant: String,
    pub metric: &'static str,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
    pub std_defined: bool,
}

/// Grid in size, rate, variant, seed order. Rate 0 yields a single
/// baseline cell per size and seed.
pub fn grid(sizes: &[usize], rates: &[f64], variants: &[VariantMix], seeds: &[u64]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &size in sizes {
        for &rate in rates {
            let options: Vec<Option<VariantMix>> = if rate == 0.0 {
                vec![None]
            } else {
                variants.iter().cloned().map(Some).collect()
            };
            for variant in options {
                for &seed in seeds {
                    cells.push(Cell {
                        size,
                        rate,
                        variant: variant.clone(),
                        seed,
                    });
                }
            }
        }
    }
    cells
}

enum Data {
    Ner {
        train: TaggedCorpus,
        dev: Option<TaggedCorpus>,
        test: TaggedCorpus,
        lexicon: Option<SynonymLexicon>,
    },
    Re {
        train: RECorpus,
        dev: Option<RECorpus>,
        test: RECorpus,
    },
}

fn run_cell(a: &SweepArgs, data: &Data, cell: &Cell) -> anyhow::Result<Row> {
    let config = a.fit.train_config(cell.seed);
    let mix = cell.variant.clone().map(|v| a.mix.mix_config(v, cell.rate, cell.seed));
    let row = |score, precision, recall, augmented, skipped, best_epoch| Row {
        size: cell.size,
        rate: cell.rate,
        variant: cell.variant_name(),
        seed: cell.seed,
        metric: match a.task {
            Task::Ner => "f1",
            Task::Re => "accuracy",
        },
        score,
        precision,
        recall,
        augmented,
        skipped,
        best_epoch,
    };
    match data {
        Data::Ner { train, dev, test, lexicon } => {
            let subset = downsample(train, cell.size, cell.seed)?;
            let mut corpora = vec![train];
            corpora.extend(dev.as_ref());
            corpora.push(test);
            let table = build_table(union_tokens(&corpora), &a.table_args, cell.seed)?;
            let run = run_ner(&subset, dev.as_ref(), test, &table, lexicon.as_ref(), mix.as_ref(), a.fit.window, &config)?;
            Ok(row(
                run.report.f1,
                Some(run.report.precision),
                Some(run.report.recall),
                run.augmented,
                run.skipped,
                run.trace.best_epoch,
            ))
        }
        Data::Re { train, dev, test } => {
            let subset = downsample(train, cell.size, cell.seed)?;
            let mut corpora = vec![train];
            corpora.extend(dev.as_ref());
            corpora.push(test);
            let table = build_table(re_tokens(&corpora), &a.table_args, cell.seed)?;
            let run = run_re(&subset, dev.as_ref(), test, &table, mix.as_ref(), &config)?;
            Ok(row(run.accuracy.full, None, None, run.augmented, run.skipped, run.trace.best_epoch))
        }
    }
}

pub fn aggregate(rows: &[Row]) -> Vec<AggregateRow> {
    let mut out: Vec<(AggregateRow, Vec<f64>)> = Vec::new();
    for r in rows {
        let key = (r.size, r.rate.to_bits(), r.variant.as_str());
        match out.iter_mut().find(|(a, _)| (a.size, a.rate.to_bits(), a.variant.as_str()) == key) {
            Some((_, scores)) => scores.push(r.score),
            None => out.push((
                AggregateRow {
                    size: r.size,
                    rate: r.rate,
                    variant: r.variant.clone(),
                    metric: r.metric,
                    runs: 0,
                    mean: 0.0,
                    std: 0.0,
                    std_defined: false,
                },
                vec![r.score],
            )),
        }
    }
    out.into_iter()
        .map(|(mut a, scores)| {
            let s = summarize(&scores);
            a.runs = s.n;
            a.mean = s.mean;
            a.std = s.std;
            a.std_defined = s.std_defined;
            a
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &std::path::Path, rows: &[T]) -> anyhow::Result<()> {
    write_file(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for r in rows {
            csv.serialize(r)?;
        }
        csv.flush()?;
        Ok(())
    })
}

pub fn run(a: &SweepArgs, args: &[OsString]) -> anyhow::Result<()> {
    let variants = a.variants.iter().map(|v| parse_variant(v)).collect::<anyhow::Result<Vec<_>>>()?;
    for v in &variants {
        let relation = v.variants().any(|x| x == Variant::Relation);
        match a.task {
            Task::Ner if relation => return Err(usage("--variants relation needs --task re")),
            Task::Re if v.variants().any(|x| x != Variant::Relation) => {
                return Err(usage("--task re only supports the relation variant"))
            }
            _ => {}
        }
        if v.variants().any(|x| x == Variant::Synonym) && a.lexicon.is_none() {
            return Err(usage("the synonym variant needs --lexicon"));
        }
    }
    if a.sizes.is_empty() || a.seeds.is_empty() || a.rates.iter().any(|r| r.is_nan() || *r < 0.0) {
        return Err(usage("--sizes and --seeds must be non-empty and --rates non-negative"));
    }
    a.fit.train_config(0).validate().map_err(|e| usage(e.to_string()))?;

    let mut manifest = RunManifest::new("sweep", args, a)?;
    manifest.input("train", &a.train)?.input("test", &a.test)?;
    if let Some(p) = &a.dev {
        manifest.input("dev", p)?;
    }
    if let Some(p) = &a.lexicon {
        manifest.input("lexicon", p)?;
    }
    for &s in &a.seeds {
        manifest.seed(&format!("seed.{s}"), s);
    }

    let data = match a.task {
        Task::Ner => Data::Ner {
            train: read_ner(&a.train, a.repair_bio)?,
            dev: a.dev.as_deref().map(|p| read_ner(p, a.repair_bio)).transpose()?,
            test: read_ner(&a.test, a.repair_bio)?,
            lexicon: a.lexicon.as_deref().map(read_lexicon).transpose()?,
        },
        Task::Re => Data::Re {
            train: read_re(&a.train)?,
            dev: a.dev.as_deref().map(read_re).transpose()?,
            test: read_re(&a.test)?,
        },
    };

    let cells = grid(&a.sizes, &a.rates, &variants, &a.seeds);
    let started = Instant::now();
    let results = map_indexed(cells.len(), execution(a.mix.serial), |i| run_cell(a, &data, &cells[i]));
    let seconds = started.elapsed().as_secs_f64();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (cell, r) in cells.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(format!(
                "size {} rate {} variant {} seed {}: {e:#}",
                cell.size,
                cell.rate,
                cell.variant_name(),
                cell.seed
            )),
        }
    }
    write_csv(&a.out, &rows).with_context(|| format!("writing {}", a.out.display()))?;
    let aggregated = aggregate(&rows);
    let aggregate_path = a.aggregate.clone().unwrap_or_else(|| sibling(&a.out, ".aggregate.csv"));
    write_csv(&aggregate_path, &aggregated)?;
    if !failures.is_empty() {
        return Err(anyhow!(
            "{} of {} runs failed ({} completed rows kept in {}):\n{}",
            failures.len(),
            cells.len(),
            rows.len(),
            a.out.display(),
            failures.join("\n")
        ));
    }

    manifest.output("runs", &a.out)?.output("aggregate", &aggregate_path)?;
    manifest.timings.training_seconds = Some(seconds);
    manifest.write(&a.manifest.clone().unwrap_or_else(|| manifest::default_path(&a.out)))?;
    if a.quiet {
        return Ok(());
    }
    println!("{:<8} {:>6} {:<24} {:>4} {:>8} {:>8}", "size", "rate", "variant", "runs", "mean", "std");
    for g in &aggregated {
        let std = if g.std_defined { format!("{:.4}", g.std) } else { "n/a".to_string() };
        println!(
            "{:<8} {:>6} {:<24} {:>4} {:>8.4} {:>8}",
            g.size, g.rate, g.variant, g.runs, g.mean, std
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_cells_are_not_repeated_per_variant() {
        let variants = vec![
            VariantMix::single(Variant::Mention),
            VariantMix::single(Variant::Token),
        ];
        let cells = grid(&[100, 200], &[0.0, 0.2], &variants, &[0, 1]);
        assert_eq!(cells.len(), 2 * (2 + 4));
        assert!(cells[0].variant.is_none());
        assert_eq!(cells[2].variant, Some(VariantMix::single(Variant::Mention)));
        assert_eq!(cells[4].variant, Some(VariantMix::single(Variant::Token)));
    }

    #[test]
    fn aggregate_groups_by_cell() {
        let row = |variant: &str, seed, score| Row {
            size: 10,
            rate: 0.2,
            variant: variant.into(),
            seed,
            metric: "f1",
            score,
            precision: None,
            recall: None,
            augmented: 2,
            skipped: 0,
            best_epoch: 1,
        };
        let agg = aggregate(&[row("a", 0, 0.7), row("b", 0, 0.5), row("a", 1, 0.9), row("a", 2, 0.8)]);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].runs, 3);
        assert!((agg[0].mean - 0.8).abs() < 1e-12);
        assert!((agg[0].std - 0.1).abs() < 1e-12);
        assert!(!agg[1].std_defined);
    }
}
