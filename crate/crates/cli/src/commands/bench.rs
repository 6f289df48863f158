use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use segmix::corpus::{downsample, Vocab};
use segmix::experiment::{fit_ner, union_labels, union_tokens};
use segmix::mixer::{segmix_generate, NerPools, Variant};
use segmix::rng::derive_seed;
use serde::Serialize;

use super::{build_table, parse_variant, read_lexicon, read_ner, write_file};
use crate::manifest::{self, RunManifest};
use crate::stats::{summarize, Summary};
use crate::{usage, FitArgs, MixArgs, TableArgs};

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct BenchArgs {
    /// NER corpus to draw training subsets from.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "200")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value = "mention")]
    pub variant: String,
    #[arg(long, default_value_t = 0.2)]
    pub rate: f64,
    /// Repetitions per size.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub repair_bio: bool,
    /// Time mixing only.
    #[arg(long)]
    pub skip_training: bool,
    #[command(flatten)]
    pub table_args: TableArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub mix: MixArgs,
    /// Timing CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub reps: usize,
    pub mixing_mean: f64,
    pub mixing_std: f64,
    pub training_mean: Option<f64>,
    pub training_std: Option<f64>,
    pub std_defined: bool,
}

fn pm(s: &Summary) -> String {
    if s.std_defined {
        format!("{:.4}s ± {:.4}s", s.mean, s.std)
    } else {
        format!("{:.4}s ± n/a", s.mean)
    }
}

pub fn run(a: &BenchArgs, args: &[OsString]) -> anyhow::Result<()> {
    let variant = parse_variant(&a.variant)?;
    if variant.variants().any(|v| v == Variant::Relation) {
        return Err(usage("bench times NER variants only"));
    }
    if variant.variants().any(|v| v == Variant::Synonym) && a.lexicon.is_none() {
        return Err(usage("the synonym variant needs --lexicon"));
    }
    if a.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let mut manifest = RunManifest::new("bench", args, a)?;
    manifest.seed("seed", a.seed).input("corpus", &a.corpus)?;

    let corpus = read_ner(&a.corpus, a.repair_bio)?;
    let lexicon = a.lexicon.as_deref().map(read_lexicon).transpose()?;
    let table = build_table(union_tokens(&[&corpus]), &a.table_args, a.seed)?;
    let mut rows = Vec::new();
    let (mut total_mix, mut total_train) = (0.0, 0.0);
    for &size in &a.sizes {
        let mut mixing = Vec::with_capacity(a.reps);
        let mut training = Vec::with_capacity(a.reps);
        for rep in 0..a.reps {
            let seed = derive_seed(a.seed, "bench", rep as u64);
            let subset = downsample(&corpus, size, seed)?;
            let config = a.mix.mix_config(variant.clone(), a.rate, seed);
            let started = Instant::now();
            let pools = NerPools::from_corpus(&subset, lexicon.clone());
            let generated = segmix_generate(&subset, &pools, &table, &config)?;
            mixing.push(started.elapsed().as_secs_f64());
            if !a.skip_training {
                let labels = union_labels(&[&subset]);
                let extra_labels: Vocab = subset.label_vocab().clone();
                let started = Instant::now();
                fit_ner(
                    &subset,
                    None,
                    labels,
                    &table,
                    generated.items,
                    &extra_labels,
                    a.fit.window,
                    &a.fit.train_config(seed),
                )?;
                training.push(started.elapsed().as_secs_f64());
            }
        }
        let m = summarize(&mixing);
        let t = (!training.is_empty()).then(|| summarize(&training));
        total_mix += mixing.iter().sum::<f64>();
        total_train += training.iter().sum::<f64>();
        match &t {
            Some(t) => println!(
                "size {size:>6}  reps {}  mixing {}  training {}  mixing share {:.2}%",
                a.reps,
                pm(&m),
                pm(t),
                100.0 * m.mean / (m.mean + t.mean)
            ),
            None => println!("size {size:>6}  reps {}  mixing {}", a.reps, pm(&m)),
        }
        rows.push(BenchRow {
            size,
            reps: a.reps,
            mixing_mean: m.mean,
            mixing_std: m.std,
            training_mean: t.map(|t| t.mean),
            training_std: t.map(|t| t.std),
            std_defined: m.std_defined,
        });
    }
    if a.reps == 1 {
        println!("note: one repetition per size, standard deviations are undefined");
    }
    manifest.timings.mixing_seconds = Some(total_mix);
    if !a.skip_training {
        manifest.timings.training_seconds = Some(total_train);
    }
    if let Some(out) = &a.out {
        write_file(out, |w| {
            let mut csv = csv::Writer::from_writer(w);
            for r in &rows {
                csv.serialize(r)?;
            }
            csv.flush()?;
            Ok(())
        })?;
        manifest.timing_output("timings", out)?;
        manifest.write(&a.manifest.clone().unwrap_or_else(|| manifest::default_path(out)))?;
    } else if let Some(p) = &a.manifest {
        manifest.write(p)?;
    }
    Ok(())
}
