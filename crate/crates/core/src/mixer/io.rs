//! JSON-lines serialization of augmented datasets.
//!
//! The first line is a header record:
//!
//! ```json
//! {"record":"header","format":"segmix-augmented","version":1,"task":"ner",
//!  "dim":32,"labels":["O","B-PER",...],"table_fingerprint":"...",
//!  "requested":40,"skipped":0}
//! ```
//!
//! Every further line is one example:
//!
//! ```json
//! {"record":"example","index":0,
//!  "embeddings":{"shape":[rows,dim],"data":"<base64>"},
//!  "soft_labels":{"shape":[rows,labels],"data":"<base64>"},
//!  "provenance":{...}}
//! ```
//!
//! RE examples carry `e1`, `e2` (`{"start":..,"end":..}` in mixed
//! coordinates) and `soft_relation` instead of `soft_labels`. Matrix data is
//! row-major little-endian f32, base64 (standard alphabet, padded).

use std::io::{BufRead, Write};

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{MixedExample, MixedRESample, Provenance};
use crate::corpus::Span;
use crate::error::{Error, Result};

pub const FORMAT: &str = "segmix-augmented";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Ner,
    Re,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub task: Task,
    pub dim: usize,
    /// Label vocabulary (BIO labels or relation labels) indexing the soft-label columns.
    pub labels: Vec<String>,
    pub table_fingerprint: String,
    pub requested: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    pub shape: [usize; 2],
    pub data: String,
}

impl EncodedMatrix {
    pub fn encode(m: &Array2<f64>) -> Self {
        let mut bytes = Vec::with_capacity(m.len() * 4);
        for &v in m.iter() {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        EncodedMatrix {
            shape: [m.nrows(), m.ncols()],
            data: STANDARD.encode(bytes),
        }
    }

    pub fn decode(&self) -> Result<Array2<f64>> {
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| Error::Format(format!("base64: {e}")))?;
        let [rows, cols] = self.shape;
        if bytes.len() != rows * cols * 4 {
            return Err(Error::Format(format!(
                "matrix data holds {} bytes, shape {:?} needs {}",
                bytes.len(),
                self.shape,
                rows * cols * 4
            )));
        }
        let values = bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Header(Header),
    Example(ExampleRecord),
}

#[derive(Debug, Serialize, Deserialize)]
struct ExampleRecord {
    index: usize,
    embeddings: EncodedMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    soft_labels: Option<EncodedMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e1: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e2: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    soft_relation: Option<EncodedMatrix>,
    provenance: Provenance,
}

/// A parsed augmented file.
#[derive(Debug, Clone, PartialEq)]
pub enum Augmented {
    Ner(Header, Vec<MixedExample>),
    Re(Header, Vec<MixedRESample>),
}

impl Augmented {
    pub fn header(&self) -> &Header {
        match self {
            Augmented::Ner(h, _) | Augmented::Re(h, _) => h,
        }
    }
}

fn write_record<W: Write>(out: &mut W, record: &Record) -> Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_ner<W: Write>(mut out: W, header: &Header, examples: &[MixedExample]) -> Result<()> {
    write_record(&mut out, &Record::Header(header.clone()))?;
    for (index, ex) in examples.iter().enumerate() {
        let record = ExampleRecord {
            index,
            embeddings: EncodedMatrix::encode(&ex.embeddings),
            soft_labels: Some(EncodedMatrix::encode(&ex.soft_labels)),
            e1: None,
            e2: None,
            soft_relation: None,
            provenance: ex.provenance.clone(),
        };
        write_record(&mut out, &Record::Example(record))?;
    }
    Ok(())
}

pub fn write_re<W: Write>(mut out: W, header: &Header, examples: &[MixedRESample]) -> Result<()> {
    write_record(&mut out, &Record::Header(header.clone()))?;
    for (index, ex) in examples.iter().enumerate() {
        let relation = ex.soft_relation.clone().insert_axis(ndarray::Axis(0));
        let record = ExampleRecord {
            index,
            embeddings: EncodedMatrix::encode(&ex.embeddings),
            soft_labels: None,
            e1: Some(ex.e1),
            e2: Some(ex.e2),
            soft_relation: Some(EncodedMatrix::encode(&relation)),
            provenance: ex.provenance.clone(),
        };
        write_record(&mut out, &Record::Example(record))?;
    }
    Ok(())
}

pub fn read<R: BufRead>(input: R) -> Result<Augmented> {
    let mut lines = input.lines().enumerate();
    let header = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::Format("missing header record".into()));
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })? {
            Record::Header(h) => break h,
            Record::Example(_) => return Err(Error::Format("first record must be the header".into())),
        }
    };
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Format(format!(
            "unsupported format {} v{}",
            header.format, header.version
        )));
    }
    let classes = header.labels.len();
    let mut ner = Vec::new();
    let mut re = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse { line: i + 1, message };
        let Record::Example(rec) = serde_json::from_str(&line).map_err(|e| perr(e.to_string()))? else {
            return Err(perr("duplicate header".into()));
        };
        let embeddings = rec.embeddings.decode()?;
        if embeddings.ncols() != header.dim {
            return Err(perr(format!("embedding dim {} != header dim {}", embeddings.ncols(), header.dim)));
        }
        match header.task {
            Task::Ner => {
                let soft = rec.soft_labels.ok_or_else(|| perr("missing soft_labels".into()))?.decode()?;
                if soft.nrows() != embeddings.nrows() || soft.ncols() != classes {
                    return Err(perr(format!("soft label shape {:?} does not fit", soft.dim())));
                }
                ner.push(MixedExample {
                    embeddings,
                    soft_labels: soft,
                    provenance: rec.provenance,
                });
            }
            Task::Re => {
                let soft = rec.soft_relation.ok_or_else(|| perr("missing soft_relation".into()))?.decode()?;
                let (Some(e1), Some(e2)) = (rec.e1, rec.e2) else {
                    return Err(perr("missing nominal spans".into()));
                };
                if soft.dim() != (1, classes) || e1.end > embeddings.nrows() || e2.end > embeddings.nrows() {
                    return Err(perr("relation example does not fit its header".into()));
                }
                let soft_relation: Array1<f64> = soft.row(0).to_owned();
                re.push(MixedRESample {
                    embeddings,
                    e1,
                    e2,
                    soft_relation,
                    provenance: rec.provenance,
                });
            }
        }
    }
    Ok(match header.task {
        Task::Ner => Augmented::Ner(header, ner),
        Task::Re => Augmented::Re(header, re),
    })
}
