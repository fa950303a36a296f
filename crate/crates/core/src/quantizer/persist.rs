//! DSRQ model container, little-endian:
//!
//! ```text
//! "DSRQ" | version u32 = 1 | kind u8 | D u32 | M u32 | d u32 | k_star u32 | alpha f32 | seed u64
//! | M*d u32 index table | D f32 dimension means | M*k_star*d f32 centroids
//! ```
//!
//! Only the `M * k_star` sub-quantizer centroids are stored, never the
//! `k_star^M` product codebook.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::read_exact_or;
use crate::kmeans::Codebook;

use super::layout::{LayoutKind, SubspaceLayout};
use super::model::{Method, QuantizerModel, TrainMeta};

pub const MODEL_MAGIC: &[u8; 4] = b"DSRQ";
pub const MODEL_VERSION: u32 = 1;
pub const MODEL_HEADER_LEN: usize = 37;

/// Exact size in bytes of a DSRQ file with the given shape.
pub fn model_file_len(total_dim: usize, n_subspaces: usize, sub_dim: usize, k_star: usize) -> usize {
    MODEL_HEADER_LEN + 4 * (n_subspaces * sub_dim + total_dim + n_subspaces * k_star * sub_dim)
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Invariant(format!("{what} {v} does not fit in u32")))
}

pub fn save_model_to<W: Write>(model: &QuantizerModel<f32>, mut w: W) -> Result<()> {
    let layout = model.layout();
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&[model.method().code()])?;
    w.write_all(&to_u32(layout.total_dim(), "dimension")?.to_le_bytes())?;
    w.write_all(&to_u32(layout.n_subspaces(), "sub-vector count")?.to_le_bytes())?;
    w.write_all(&to_u32(layout.sub_dim(), "sub-vector length")?.to_le_bytes())?;
    w.write_all(&to_u32(model.k_star(), "codebook size")?.to_le_bytes())?;
    w.write_all(&layout.alpha().to_le_bytes())?;
    w.write_all(&model.train_meta().seed.to_le_bytes())?;
    for &i in layout.flat_indices() {
        w.write_all(&(i as u32).to_le_bytes())?;
    }
    for v in model.dim_means() {
        w.write_all(&v.to_le_bytes())?;
    }
    for cb in model.codebooks() {
        for v in cb.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_model(model: &QuantizerModel<f32>, path: impl AsRef<Path>) -> Result<()> {
    save_model_to(model, BufWriter::new(File::create(path)?))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Corruption(format!("truncated {what}")))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn words(&mut self, count: usize, what: &str) -> Result<impl Iterator<Item = [u8; 4]> + 'a> {
        let n = count
            .checked_mul(4)
            .ok_or_else(|| Error::Corruption(format!("{what} size overflows")))?;
        Ok(self.take(n, what)?.chunks_exact(4).map(|c| c.try_into().unwrap()))
    }
}

pub fn load_model_from<R: Read>(mut r: R) -> Result<QuantizerModel<f32>> {
    let mut header = [0u8; MODEL_HEADER_LEN];
    read_exact_or(&mut r, &mut header, "DSRQ header")?;
    if &header[0..4] != MODEL_MAGIC {
        return Err(Error::Format("missing DSRQ magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported DSRQ version {version}")));
    }
    let method = Method::from_code(header[8])?;
    let total_dim = u32_at(9) as usize;
    let n_subspaces = u32_at(13) as usize;
    let sub_dim = u32_at(17) as usize;
    let k_star = u32_at(21) as usize;
    let alpha = f32::from_le_bytes(header[25..29].try_into().unwrap());
    let seed = u64::from_le_bytes(header[29..37].try_into().unwrap());
    if total_dim == 0 || n_subspaces == 0 || sub_dim == 0 || k_star == 0 {
        return Err(Error::Invariant(format!(
            "degenerate model shape D={total_dim} M={n_subspaces} d={sub_dim} k*={k_star}"
        )));
    }

    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let mut cur = Cursor { buf: &body, pos: 0 };
    let index_count = n_subspaces
        .checked_mul(sub_dim)
        .ok_or_else(|| Error::Corruption("index table size overflows".into()))?;
    let indices: Vec<usize> = cur
        .words(index_count, "index table")?
        .map(|w| u32::from_le_bytes(w) as usize)
        .collect();
    let dim_means: Vec<f32> = cur.words(total_dim, "dimension means")?.map(f32::from_le_bytes).collect();

    let remaining = body.len() - cur.pos;
    let expected = n_subspaces
        .checked_mul(k_star)
        .and_then(|v| v.checked_mul(sub_dim))
        .ok_or_else(|| Error::Invariant("centroid count overflows".into()))?;
    if remaining != expected * 4 {
        return Err(Error::Invariant(format!(
            "file holds {} centroid bytes, header implies M*k*d = {n_subspaces}*{k_star}*{sub_dim} f32 values",
            remaining
        )));
    }
    let kind = match method {
        Method::Rpq => LayoutKind::Random,
        Method::Kmeans | Method::Pq => LayoutKind::Contiguous,
    };
    let layout = SubspaceLayout::from_parts(kind, total_dim, n_subspaces, sub_dim, indices, alpha, seed)
        .map_err(|e| Error::Invariant(e.to_string()))?;
    let per_book = k_star * sub_dim;
    let mut codebooks = Vec::with_capacity(n_subspaces);
    for m in 0..n_subspaces {
        let values: Vec<f32> = cur.words(per_book, "centroids")?.map(f32::from_le_bytes).collect();
        let cb = Codebook::new(k_star, sub_dim, values)
            .map_err(|e| Error::Invariant(format!("codebook {m}: {e}")))?;
        codebooks.push(cb);
    }
    let meta = TrainMeta { seed, init: None, data_fingerprint: None };
    QuantizerModel::from_parts(method, layout, codebooks, dim_means, meta)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<QuantizerModel<f32>> {
    load_model_from(BufReader::new(File::open(path)?))
}
