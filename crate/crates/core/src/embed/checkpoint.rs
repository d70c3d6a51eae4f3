use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::EmbeddingSet;
use crate::error::{Error, Result};
use crate::manifolds::ManifoldSpec;
use crate::matrix::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"MMEMB";

/// Layout: magic, spec length (u32), spec text, m (u64), scale (f64), then
/// every point's entries as little-endian f64 in row-major order.
pub fn write_checkpoint(path: impl AsRef<Path>, emb: &EmbeddingSet) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let spec = emb.spec().to_string();
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(CHECKPOINT_MAGIC)?;
    put(&(spec.len() as u32).to_le_bytes())?;
    put(spec.as_bytes())?;
    put(&(emb.m() as u64).to_le_bytes())?;
    put(&emb.scale().to_le_bytes())?;
    for p in emb.points() {
        for x in p.as_slice() {
            put(&x.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::format(path, msg.to_string());
    let mut at = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(at..at + n).ok_or_else(|| bad("truncated checkpoint"))?;
        at += n;
        Ok(s)
    };
    if take(5)? != CHECKPOINT_MAGIC {
        return Err(bad("not an embedding checkpoint (bad magic)"));
    }
    let len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let spec_text = std::str::from_utf8(take(len)?).map_err(|_| bad("spec is not UTF-8"))?;
    let spec: ManifoldSpec = spec_text
        .parse()
        .map_err(|e: Error| Error::format(path, e.to_string()))?;
    let m = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let scale = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let (r, c) = spec.build()?.point_shape();
    let mut points = Vec::with_capacity(m);
    for _ in 0..m {
        let raw = take(8 * r * c)?;
        let vals: Vec<f64> = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        points.push(Matrix::from_row_slice(r, c, &vals));
    }
    if at != bytes.len() {
        return Err(bad("trailing bytes after the last point"));
    }
    EmbeddingSet::new(&spec, points, scale).map_err(|e| Error::format(path, e.to_string()))
}
