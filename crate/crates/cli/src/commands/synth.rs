use std::path::PathBuf;

use clap::Args;
use segmix::corpus;
use segmix::synth;

use super::write_file;
use crate::Task;

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "ner")]
    pub task: Task,
    #[arg(long, default_value_t = 2000)]
    pub sentences: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the matching synonym lexicon (NER only).
    #[arg(long)]
    pub lexicon_out: Option<PathBuf>,
}

pub fn run(a: &SynthArgs) -> anyhow::Result<()> {
    match a.task {
        Task::Ner => {
            let c = synth::synthetic_ner(a.sentences, a.seed);
            write_file(&a.out, |w| Ok(corpus::write_conll(&c, w)?))?;
        }
        Task::Re => {
            let c = synth::synthetic_re(a.sentences, a.seed);
            write_file(&a.out, |w| Ok(corpus::write_re(&c, w)?))?;
        }
    }
    if let Some(p) = &a.lexicon_out {
        write_file(p, |w| Ok(synth::synthetic_lexicon().write_to(w)?))?;
    }
    println!("wrote {} {} examples to {}", a.sentences, format!("{:?}", a.task).to_lowercase(), a.out.display());
    Ok(())
}
