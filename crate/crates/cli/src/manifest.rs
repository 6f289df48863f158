//! Run manifests: what was run, on which inputs, producing which outputs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
    /// Whether re-running is expected to reproduce the bytes (timing
    /// reports are not).
    pub deterministic: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixing_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub training_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective arguments after merging the config file, without the
    /// program name.
    pub args: Vec<String>,
    /// Resolved options.
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub timings: Timings,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut file = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

impl RunManifest {
    pub fn new(command: &str, args: &[std::ffi::OsString], config: impl Serialize) -> anyhow::Result<Self> {
        Ok(RunManifest {
            tool: "segmix".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
            config: serde_json::to_value(config)?,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Timings::default(),
        })
    }

    pub fn seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.seeds.insert(name.into(), value);
        self
    }

    pub fn input(&mut self, role: &str, path: &Path) -> anyhow::Result<&mut Self> {
        self.inputs.push(record(role, path, true)?);
        Ok(self)
    }

    pub fn output(&mut self, role: &str, path: &Path) -> anyhow::Result<&mut Self> {
        self.outputs.push(record(role, path, true)?);
        Ok(self)
    }

    pub fn timing_output(&mut self, role: &str, path: &Path) -> anyhow::Result<&mut Self> {
        self.outputs.push(record(role, path, false)?);
        Ok(self)
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing manifest {}", path.display()))
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Records whose file no longer hashes to the stored digest.
    pub fn stale(records: &[FileRecord]) -> anyhow::Result<Vec<&FileRecord>> {
        let mut out = Vec::new();
        for r in records {
            if sha256_file(&r.path)? != r.sha256 {
                out.push(r);
            }
        }
        Ok(out)
    }
}

fn record(role: &str, path: &Path, deterministic: bool) -> anyhow::Result<FileRecord> {
    Ok(FileRecord {
        role: role.into(),
        path: path.to_path_buf(),
        sha256: sha256_file(path)?,
        deterministic,
    })
}

/// `<path>.manifest.json`
pub fn default_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
