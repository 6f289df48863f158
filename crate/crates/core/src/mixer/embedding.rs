use std::io::{Read, Write};

use ndarray::{Array2, ArrayView1};
use rand_distr::{Distribution, StandardNormal};

use crate::binio;
use crate::corpus::{Token, Vocab};
use crate::error::{Error, Result};
use crate::rng::{self, fnv1a};

const MAGIC: &[u8; 8] = b"SGMXEMB\0";
const VERSION: u32 = 1;

/// Frozen token embedding table.
///
/// Rows `0..V` belong to the vocabulary; the remaining `buckets` rows are
/// shared by unknown surfaces, selected by an FNV-1a hash of the surface.
/// Entries are drawn as f32 so the on-disk encoding is lossless.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vocab: Vocab,
    buckets: usize,
    vectors: Array2<f64>,
}

impl EmbeddingTable {
    /// Standard-normal table over `vocab` plus `buckets` unknown rows.
    pub fn random(vocab: Vocab, dim: usize, buckets: usize, seed: u64) -> Result<Self> {
        if dim == 0 || buckets == 0 {
            return Err(Error::InvalidArgument(
                "embedding dim and bucket count must be positive".into(),
            ));
        }
        let rows = vocab.len() + buckets;
        let mut rng = rng::stream(seed, "embedding", 0);
        let vectors = Array2::from_shape_simple_fn((rows, dim), || {
            let x: f64 = StandardNormal.sample(&mut rng);
            f64::from(x as f32)
        });
        Ok(EmbeddingTable {
            vocab,
            buckets,
            vectors,
        })
    }

    pub fn from_parts(vocab: Vocab, buckets: usize, vectors: Array2<f64>) -> Result<Self> {
        if buckets == 0 || vectors.nrows() != vocab.len() + buckets || vectors.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "table of shape {:?} does not fit {} words + {} buckets",
                vectors.dim(),
                vocab.len(),
                buckets
            )));
        }
        Ok(EmbeddingTable {
            vocab,
            buckets,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn row_index(&self, surface: &str) -> usize {
        match self.vocab.get(surface) {
            Some(i) => i,
            None => self.vocab.len() + (fnv1a(surface.as_bytes()) % self.buckets as u64) as usize,
        }
    }

    pub fn vector(&self, surface: &str) -> ArrayView1<'_, f64> {
        self.vectors.row(self.row_index(surface))
    }

    /// Row `j` of the result is the vector of `tokens[j]`.
    pub fn embed(&self, tokens: &[Token]) -> Array2<f64> {
        let mut out = Array2::zeros((tokens.len(), self.dim()));
        for (mut row, t) in out.rows_mut().into_iter().zip(tokens) {
            row.assign(&self.vector(t.as_str()));
        }
        out
    }

    /// Content hash over vocabulary and f32 row data.
    pub fn fingerprint(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("in-memory write");
        format!("{:016x}", fnv1a(&buf))
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        binio::write_u32(&mut out, VERSION)?;
        binio::write_u32(&mut out, self.dim() as u32)?;
        binio::write_u32(&mut out, self.buckets as u32)?;
        binio::write_strings(&mut out, self.vocab.items())?;
        binio::write_f32s(&mut out, self.vectors.iter().copied())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        binio::expect_magic(&mut input, MAGIC)?;
        let version = binio::read_u32(&mut input)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported table version {version}")));
        }
        let dim = binio::read_u32(&mut input)? as usize;
        let buckets = binio::read_u32(&mut input)? as usize;
        let vocab = Vocab::from_items(binio::read_strings(&mut input)?);
        let rows = vocab.len() + buckets;
        let data = binio::read_f32s(&mut input, rows * dim)?;
        let vectors = Array2::from_shape_vec((rows, dim), data)
            .map_err(|e| Error::Format(e.to_string()))?;
        EmbeddingTable::from_parts(vocab, buckets, vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&str]) -> Vec<Token> {
        s.iter().map(|t| Token::new(*t).unwrap()).collect()
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::random(Vocab::from_items(["New", "York", "City"]), 8, 4, 42).unwrap()
    }

    #[test]
    fn embed_is_direct_lookup() {
        let t = table();
        assert_eq!(t.embed(&[]).dim(), (0, 8));
        let m = t.embed(&toks(&["New", "York", "New"]));
        assert_eq!(m.row(0), t.vectors().row(0));
        assert_eq!(m.row(1), t.vectors().row(1));
        assert_eq!(m.row(0), m.row(2));
    }

    #[test]
    fn unknown_surfaces_hash_to_buckets() {
        let t = table();
        let i = t.row_index("Marcello");
        assert!((3..7).contains(&i));
        assert_eq!(i, t.row_index("Marcello"));
        assert_eq!(t.embed(&toks(&["Marcello"])).row(0), t.vectors().row(i));
    }

    #[test]
    fn binary_round_trip() {
        let t = table();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = EmbeddingTable::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.fingerprint(), t.fingerprint());
        assert!(EmbeddingTable::read_from(&buf[..20]).is_err());
    }
}
