use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::bail;
use clap::{Args, Parser};

use crate::manifest::{sha256_file, RunManifest};
use crate::Cli;

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier command.
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Re-run the recorded arguments, then compare every deterministic output
/// with its recorded digest.
pub fn run(a: &ReplayArgs) -> anyhow::Result<()> {
    let recorded = RunManifest::read(&a.manifest)?;
    let stale = RunManifest::stale(&recorded.inputs)?;
    if !stale.is_empty() {
        let names: Vec<String> = stale.iter().map(|r| r.path.display().to_string()).collect();
        bail!("inputs changed since the run: {}", names.join(", "));
    }
    if recorded.command == "replay" {
        bail!("refusing to replay a replay");
    }
    let mut argv: Vec<OsString> = vec!["segmix".into()];
    argv.extend(recorded.args.iter().map(OsString::from));
    let cli = Cli::try_parse_from(&argv)?;
    super::dispatch(cli, &argv)?;

    let mut mismatched = Vec::new();
    for r in recorded.outputs.iter().filter(|r| r.deterministic) {
        let digest = sha256_file(&r.path)?;
        let ok = digest == r.sha256;
        println!("{} {} {}", if ok { "same" } else { "DIFFERENT" }, r.role, r.path.display());
        if !ok {
            mismatched.push(r.path.display().to_string());
        }
    }
    if !mismatched.is_empty() {
        bail!("outputs differ from the recorded run: {}", mismatched.join(", "));
    }
    Ok(())
}
