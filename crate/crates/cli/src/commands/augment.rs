use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use segmix::corpus::{self, RECorpus, TaggedCorpus};
use segmix::experiment::union_tokens;
use segmix::mixer::io::{self, Header, Task as FileTask};
use segmix::mixer::{self, NerPools, Variant};
use segmix::pools;

use super::{build_table, parse_variant, read_lexicon, read_ner, read_re, read_table, re_tokens, sibling, write_file};
use crate::manifest::{self, RunManifest};
use crate::{usage, MixArgs, TableArgs, Task};

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct AugmentArgs {
    #[arg(long, value_enum, default_value = "ner")]
    pub task: Task,
    /// Input corpus (CoNLL for ner, offset TSV for re).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Variant or combination, e.g. `mention`, `mention+token`, `mention:0.7+token:0.3`.
    #[arg(long, default_value = "mention")]
    pub variant: String,
    /// Augmentation rate: generate round(rate * N) examples.
    #[arg(long, default_value_t = 0.2)]
    pub rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Synonym lexicon (`token<TAB>syn1,syn2`), required by the synonym variant.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Promote dangling I-X labels to B-X instead of rejecting the corpus.
    #[arg(long)]
    pub repair_bio: bool,
    /// Use this embedding table instead of building one from the corpus.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Where to write a built table; defaults to `<out>.table`.
    #[arg(long)]
    pub table_out: Option<PathBuf>,
    #[command(flatten)]
    pub table_args: TableArgs,
    #[command(flatten)]
    pub mix: MixArgs,
    /// Emit hard replacements as a corpus file instead of mixed embeddings.
    #[arg(long)]
    pub replacement: bool,
    /// Also dump the segment pools as JSON lines.
    #[arg(long)]
    pub pool_dump: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to `<out>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(a: &AugmentArgs, args: &[OsString]) -> anyhow::Result<()> {
    let variant = parse_variant(&a.variant)?;
    let relation_only = variant.variants().all(|v| v == Variant::Relation);
    let any_relation = variant.variants().any(|v| v == Variant::Relation);
    match a.task {
        Task::Re if !relation_only => return Err(usage("--task re only supports --variant relation")),
        Task::Ner if any_relation => return Err(usage("--variant relation needs --task re")),
        _ => {}
    }
    if variant.variants().any(|v| v == Variant::Synonym) && a.lexicon.is_none() {
        return Err(usage("the synonym variant needs --lexicon"));
    }
    let config = a.mix.mix_config(variant, a.rate, a.seed);
    config.validate().map_err(|e| usage(e.to_string()))?;

    let mut manifest = RunManifest::new("augment", args, a)?;
    manifest.seed("seed", a.seed).input("corpus", &a.corpus)?;
    if let Some(l) = &a.lexicon {
        manifest.input("lexicon", l)?;
    }

    let (requested, skipped, written, seconds) = match a.task {
        Task::Ner => {
            let corpus = read_ner(&a.corpus, a.repair_bio)?;
            let lexicon = a.lexicon.as_deref().map(read_lexicon).transpose()?;
            let pools = NerPools::from_corpus(&corpus, lexicon);
            if let Some(path) = &a.pool_dump {
                write_file(path, |w| {
                    pools.mention.write_jsonl(&mut *w)?;
                    pools.token.write_jsonl(&mut *w)?;
                    Ok(())
                })?;
                manifest.output("pool_dump", path)?;
            }
            if a.replacement {
                let started = Instant::now();
                let out = mixer::replacement_da(&corpus, &pools, &config)?;
                let seconds = started.elapsed().as_secs_f64();
                let aug = TaggedCorpus::new(out.items);
                write_file(&a.out, |w| Ok(corpus::write_conll(&aug, w)?))?;
                (out.requested, out.skipped, aug.len(), seconds)
            } else {
                let table = table_for(a, union_tokens(&[&corpus]), &mut manifest)?;
                let started = Instant::now();
                let out = mixer::segmix_generate(&corpus, &pools, &table, &config)?;
                let seconds = started.elapsed().as_secs_f64();
                let header = header(FileTask::Ner, &table, corpus.label_vocab().items(), out.requested, out.skipped);
                write_file(&a.out, |w| Ok(io::write_ner(w, &header, &out.items)?))?;
                (out.requested, out.skipped, out.items.len(), seconds)
            }
        }
        Task::Re => {
            let corpus: RECorpus = read_re(&a.corpus)?;
            let pool = pools::build_relation_pool(&corpus);
            if let Some(path) = &a.pool_dump {
                write_file(path, |w| Ok(pool.write_jsonl(w)?))?;
                manifest.output("pool_dump", path)?;
            }
            if a.replacement {
                let started = Instant::now();
                let out = mixer::replacement_da_re(&corpus, &pool, &config)?;
                let seconds = started.elapsed().as_secs_f64();
                let aug = RECorpus::new(out.items);
                write_file(&a.out, |w| Ok(corpus::write_re(&aug, w)?))?;
                (out.requested, out.skipped, aug.len(), seconds)
            } else {
                let table = table_for(a, re_tokens(&[&corpus]), &mut manifest)?;
                let started = Instant::now();
                let out = mixer::segmix_generate_re(&corpus, &pool, &table, &config)?;
                let seconds = started.elapsed().as_secs_f64();
                let header = header(FileTask::Re, &table, corpus.relation_vocab().items(), out.requested, out.skipped);
                write_file(&a.out, |w| Ok(io::write_re(w, &header, &out.items)?))?;
                (out.requested, out.skipped, out.items.len(), seconds)
            }
        }
    };
    manifest.output("augmented", &a.out)?;
    manifest.timings.mixing_seconds = Some(seconds);
    let manifest_path = a.manifest.clone().unwrap_or_else(|| manifest::default_path(&a.out));
    manifest.write(&manifest_path)?;
    println!(
        "wrote {written} of {requested} requested examples ({skipped} skipped) to {} in {seconds:.3}s",
        a.out.display()
    );
    Ok(())
}

fn table_for(
    a: &AugmentArgs,
    vocab: segmix::corpus::Vocab,
    manifest: &mut RunManifest,
) -> anyhow::Result<segmix::mixer::EmbeddingTable> {
    if let Some(path) = &a.table {
        manifest.input("table", path)?;
        return read_table(path);
    }
    let table = build_table(vocab, &a.table_args, a.seed)?;
    let path = a.table_out.clone().unwrap_or_else(|| sibling(&a.out, ".table"));
    write_file(&path, |w| Ok(table.write_to(w)?))?;
    manifest.seed("table_seed", a.table_args.table_seed.unwrap_or(a.seed));
    manifest.output("table", &path)?;
    Ok(table)
}

fn header(
    task: FileTask,
    table: &segmix::mixer::EmbeddingTable,
    labels: &[String],
    requested: usize,
    skipped: usize,
) -> Header {
    Header {
        format: io::FORMAT.into(),
        version: io::VERSION,
        task,
        dim: table.dim(),
        labels: labels.to_vec(),
        table_fingerprint: table.fingerprint(),
        requested,
        skipped,
    }
}
