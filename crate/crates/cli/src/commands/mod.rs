//! Subcommand implementations.

pub mod augment;
pub mod bench;
pub mod eval;
pub mod recover;
pub mod replay;
pub mod sweep;
pub mod synth;
pub mod train;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use segmix::corpus::{self, ParseOptions, RECorpus, TaggedCorpus, Vocab};
use segmix::mixer::{EmbeddingTable, VariantMix};
use segmix::pools::{self, SynonymLexicon};

use crate::{usage, Cli, Command, TableArgs};

pub fn dispatch(cli: Cli, args: &[OsString]) -> anyhow::Result<()> {
    match cli.command {
        Command::Augment(a) => augment::run(&a, args),
        Command::Train(a) => train::run(&a, args),
        Command::Eval(a) => eval::run(&a),
        Command::Sweep(a) => sweep::run(&a, args),
        Command::Bench(a) => bench::run(&a, args),
        Command::Recover(a) => recover::run(&a),
        Command::Synth(a) => synth::run(&a),
        Command::Replay(a) => replay::run(&a),
    }
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Write through a buffered file and flush.
fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>) -> anyhow::Result<()> {
    let mut out = create(path)?;
    f(&mut out)?;
    out.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_ner(path: &Path, repair_bio: bool) -> anyhow::Result<TaggedCorpus> {
    corpus::parse_conll_with(open(path)?, ParseOptions { repair_bio })
        .with_context(|| format!("parsing {}", path.display()))
}

pub fn read_re(path: &Path) -> anyhow::Result<RECorpus> {
    corpus::parse_re(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_lexicon(path: &Path) -> anyhow::Result<SynonymLexicon> {
    pools::load_synonym_lexicon(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_table(path: &Path) -> anyhow::Result<EmbeddingTable> {
    EmbeddingTable::read_from(open(path)?).with_context(|| format!("reading table {}", path.display()))
}

pub fn build_table(vocab: Vocab, args: &TableArgs, seed: u64) -> anyhow::Result<EmbeddingTable> {
    Ok(EmbeddingTable::random(vocab, args.dim, args.buckets, args.table_seed.unwrap_or(seed))?)
}

pub fn parse_variant(text: &str) -> anyhow::Result<VariantMix> {
    text.parse().map_err(|e| usage(format!("--variant {text}: {e}")))
}

pub fn re_tokens(corpora: &[&RECorpus]) -> Vocab {
    let mut vocab = Vocab::new();
    for c in corpora {
        for t in c.token_vocab().items() {
            vocab.insert(t.clone());
        }
    }
    vocab
}

/// `<path><suffix>`
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
