//! Dense frame-by-dimension feature matrices and the DSRF container.
//!
//! DSRF layout, little-endian:
//!
//! ```text
//! "DSRF" | version u32 = 1 | n_frames u64 | dim u32 | reserved u32 = 0 | n_frames*dim f32
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const FEATURE_MAGIC: &[u8; 4] = b"DSRF";
pub const FEATURE_VERSION: u32 = 1;
/// Size of the fixed DSRF header in bytes.
pub const FEATURE_HEADER_LEN: usize = 24;

/// `n_frames x dim` row-major matrix, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    n_frames: usize,
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> FeatureMatrix<T> {
    /// Builds a matrix after checking the length and that every value is finite.
    pub fn new(n_frames: usize, dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("feature dimension must be at least 1".into()));
        }
        let expected = n_frames
            .checked_mul(dim)
            .ok_or_else(|| Error::Shape("n_frames * dim overflows".into()))?;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "{} values supplied for a {n_frames}x{dim} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value at frame {}, dim {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { n_frames, dim, data })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(0, dim, Vec::new())
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::Shape("from_rows needs at least one row".into()))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Shape(format!(
                    "row {i} has {} values, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, data)
    }

    /// Gathers the listed columns, in the given order, into a new matrix.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.dim) {
            return Err(Error::Shape(format!(
                "column {bad} out of range for dimension {}",
                self.dim
            )));
        }
        let mut data = Vec::with_capacity(self.n_frames * columns.len());
        for row in self.rows() {
            data.extend(columns.iter().map(|&c| row[c]));
        }
        Self::new(self.n_frames, columns.len(), data)
    }

    /// Converts every element to another scalar type.
    pub fn cast<U: Scalar>(&self) -> FeatureMatrix<U> {
        FeatureMatrix {
            n_frames: self.n_frames,
            dim: self.dim,
            data: self.data.iter().map(|v| U::narrow(v.widen())).collect(),
        }
    }

    /// Per-dimension arithmetic mean, zero for an empty matrix.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0f64; self.dim];
        for row in self.rows() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v.widen();
            }
        }
        if self.n_frames > 0 {
            let n = self.n_frames as f64;
            sums.iter_mut().for_each(|s| *s /= n);
        }
        sums
    }
}

impl<T> FeatureMatrix<T> {
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.n_frames == 0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.dim)
    }
}

pub fn write_features_to<W: Write>(m: &FeatureMatrix<f32>, mut w: W) -> Result<()> {
    let dim = u32::try_from(m.dim())
        .map_err(|_| Error::Shape(format!("dimension {} does not fit in u32", m.dim())))?;
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&FEATURE_VERSION.to_le_bytes())?;
    w.write_all(&(m.n_frames() as u64).to_le_bytes())?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_features(m: &FeatureMatrix<f32>, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_features_to(m, BufWriter::new(file))
}

pub fn read_features_from<R: Read>(mut r: R) -> Result<FeatureMatrix<f32>> {
    let mut header = [0u8; FEATURE_HEADER_LEN];
    read_exact_or(&mut r, &mut header, "DSRF header")?;
    if &header[0..4] != FEATURE_MAGIC {
        return Err(Error::Format("missing DSRF magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != FEATURE_VERSION {
        return Err(Error::Format(format!("unsupported DSRF version {version}")));
    }
    let n_frames = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let dim = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
    let reserved = u32::from_le_bytes(header[20..24].try_into().unwrap());
    if reserved != 0 {
        return Err(Error::Format(format!("reserved DSRF field is {reserved}, expected 0")));
    }
    if dim == 0 {
        return Err(Error::Format("DSRF dimension is zero".into()));
    }
    let n_frames = usize::try_from(n_frames)
        .map_err(|_| Error::Corruption(format!("frame count {n_frames} too large")))?;
    let n_values = n_frames
        .checked_mul(dim)
        .ok_or_else(|| Error::Corruption("declared payload size overflows".into()))?;

    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != n_values * 4 {
        return Err(Error::Corruption(format!(
            "payload holds {} bytes, header declares {n_frames}x{dim} f32 values ({} bytes)",
            payload.len(),
            n_values * 4
        )));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(n_frames, dim, data)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix<f32>> {
    let file = File::open(path)?;
    read_features_from(BufReader::new(file))
}

pub(crate) fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Corruption(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode(m: &FeatureMatrix<f32>) -> Vec<u8> {
        let mut buf = Vec::new();
        write_features_to(m, &mut buf).unwrap();
        buf
    }

    #[test]
    fn two_by_three_round_trip() {
        let m = FeatureMatrix::new(2, 3, vec![1.0, -2.5, 3.0, 0.0, 1e-30, f32::MAX]).unwrap();
        let bytes = encode(&m);
        assert_eq!(bytes.len() - FEATURE_HEADER_LEN, 24);
        assert_eq!(read_features_from(&bytes[..]).unwrap(), m);
    }

    #[test]
    fn single_value_file_size() {
        let m = FeatureMatrix::new(1, 1, vec![0.0f32]).unwrap();
        assert_eq!(encode(&m).len(), 28);
    }

    #[test]
    fn empty_payload() {
        let m = FeatureMatrix::<f32>::empty(8).unwrap();
        let back = read_features_from(&encode(&m)[..]).unwrap();
        assert_eq!(back.n_frames(), 0);
        assert_eq!(back.dim(), 8);
    }

    #[test]
    fn truncated_payload_is_corruption() {
        let m = FeatureMatrix::new(2, 3, vec![1.0f32; 6]).unwrap();
        let bytes = encode(&m);
        let err = read_features_from(&bytes[..bytes.len() - 4]).unwrap_err();
        assert!(matches!(err, Error::Corruption(_)), "{err}");
        let err = read_features_from(&bytes[..10]).unwrap_err();
        assert!(matches!(err, Error::Corruption(_)), "{err}");
    }

    #[test]
    fn bad_magic_and_version() {
        let m = FeatureMatrix::new(1, 1, vec![1.0f32]).unwrap();
        let mut bytes = encode(&m);
        bytes[4] = 2;
        assert!(matches!(read_features_from(&bytes[..]), Err(Error::Format(_))));
        bytes[4] = 1;
        bytes[0] = b'X';
        assert!(matches!(read_features_from(&bytes[..]), Err(Error::Format(_))));
    }

    #[test]
    fn nan_payload_is_rejected() {
        let m = FeatureMatrix::new(1, 2, vec![1.0f32, 2.0]).unwrap();
        let mut bytes = encode(&m);
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(read_features_from(&bytes[..]), Err(Error::Validation(_))));
    }

    #[test]
    fn constructor_checks() {
        assert!(FeatureMatrix::new(2, 2, vec![0.0f64; 3]).is_err());
        assert!(FeatureMatrix::new(1, 0, Vec::<f64>::new()).is_err());
        assert!(FeatureMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn select_columns_gathers_in_order() {
        let m = FeatureMatrix::from_rows(&[[1.0f64, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let s = m.select_columns(&[2, 0]).unwrap();
        assert_eq!(s.as_slice(), &[3.0, 1.0, 6.0, 4.0]);
        assert!(m.select_columns(&[3]).is_err());
    }
}
