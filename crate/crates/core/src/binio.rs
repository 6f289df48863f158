//! Little-endian helpers for the table and checkpoint formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) fn write_u32<W: Write>(out: &mut W, v: u32) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn write_strings<W: Write>(out: &mut W, items: &[String]) -> Result<()> {
    write_u32(out, items.len() as u32)?;
    for s in items {
        write_u32(out, s.len() as u32)?;
        out.write_all(s.as_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_strings<R: Read>(input: &mut R) -> Result<Vec<String>> {
    let n = read_u32(input)? as usize;
    let mut items = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let len = read_u32(input)? as usize;
        let mut b = vec![0u8; len];
        input.read_exact(&mut b).map_err(truncated)?;
        items.push(String::from_utf8(b).map_err(|e| Error::Format(e.to_string()))?);
    }
    Ok(items)
}

pub(crate) fn write_f32s<W: Write>(out: &mut W, values: impl Iterator<Item = f64>) -> Result<()> {
    for v in values {
        out.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_f32s<R: Read>(input: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut b = vec![0u8; n * 4];
    input.read_exact(&mut b).map_err(truncated)?;
    Ok(b.chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect())
}

pub(crate) fn expect_magic<R: Read>(input: &mut R, magic: &[u8; 8]) -> Result<()> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b).map_err(truncated)?;
    if &b != magic {
        return Err(Error::Format("bad magic bytes".into()));
    }
    Ok(())
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated file".into())
    } else {
        Error::Io(e)
    }
}
