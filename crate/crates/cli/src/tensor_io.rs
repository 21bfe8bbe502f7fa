//! TNSR tensor files (little-endian):
//!
//! ```text
//! magic "TNSR" | version u8 = 1 | dtype u8 (0 = float32)
//! kind u8 (0 = embedding, 1 = prob, 2 = logprob) | ndim u8
//! ndim x u64 dims | row-major float32 data
//! ```

use std::path::Path;

use crate::error::{CliError, Result};
use crate::rw::{read_file, write_file, Reader};

pub const MAGIC: &[u8; 4] = b"TNSR";
pub const VERSION: u8 = 1;
const DTYPE_F32: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Embedding,
    Prob,
    LogProb,
}

impl TensorKind {
    pub fn code(self) -> u8 {
        match self {
            TensorKind::Embedding => 0,
            TensorKind::Prob => 1,
            TensorKind::LogProb => 2,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TensorKind::Embedding),
            1 => Some(TensorKind::Prob),
            2 => Some(TensorKind::LogProb),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TensorKind::Embedding => "embedding",
            TensorKind::Prob => "prob",
            TensorKind::LogProb => "logprob",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub kind: TensorKind,
    pub dims: Vec<u64>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(kind: TensorKind, dims: Vec<u64>, data: Vec<f32>) -> Self {
        debug_assert_eq!(
            dims.iter().product::<u64>() as usize,
            data.len(),
            "dims must cover the data"
        );
        Tensor { kind, dims, data }
    }

    /// The two dims of a frame matrix: (frames, width).
    pub fn matrix_dims(&self, path: &Path) -> Result<(usize, usize)> {
        if self.dims.len() != 2 {
            return Err(CliError::usage_in(
                path,
                format!("expected a 2-d tensor, got {} dims", self.dims.len()),
            ));
        }
        Ok((self.dims[0] as usize, self.dims[1] as usize))
    }
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let bytes = read_file(path)?;
    let mut r = Reader::new(path, &bytes);
    r.expect_magic(MAGIC, "TNSR tensor")?;
    let version = r.u8()?;
    if version != VERSION {
        return Err(CliError::data_in(
            path,
            format!("unsupported tensor version {version} at offset 4"),
        ));
    }
    let dtype = r.u8()?;
    if dtype != DTYPE_F32 {
        return Err(CliError::data_in(
            path,
            format!("unsupported dtype {dtype} at offset 5"),
        ));
    }
    let kind = TensorKind::from_code(r.u8()?).ok_or_else(|| {
        CliError::data_in(path, "unknown tensor kind at offset 6")
    })?;
    let ndim = r.u8()? as usize;
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        dims.push(r.u64_le()?);
    }
    let numel = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d));
    let numel = numel.ok_or_else(|| CliError::data_in(path, "dim product overflows"))? as usize;
    let data = r.f32_vec(numel)?;
    r.finish()?;
    Ok(Tensor { kind, dims, data })
}

pub fn write_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    let mut out = Vec::with_capacity(8 + tensor.dims.len() * 8 + tensor.data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(DTYPE_F32);
    out.push(tensor.kind.code());
    out.push(tensor.dims.len() as u8);
    for &d in &tensor.dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for &x in &tensor.data {
        out.extend_from_slice(&x.to_le_bytes());
    }
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_bytes_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.tnsr");
        let b = dir.path().join("b.tnsr");
        let t = Tensor::new(
            TensorKind::Embedding,
            vec![2, 3],
            vec![1.0, -2.5, 0.0, f32::MIN_POSITIVE, 4.0, 5.5],
        );
        write_tensor(&a, &t).unwrap();
        let back = read_tensor(&a).unwrap();
        assert_eq!(back, t);
        write_tensor(&b, &back).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn bad_magic_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.tnsr");
        std::fs::write(&p, b"XXXX\x01\x00\x00\x01").unwrap();
        let err = read_tensor(&p).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("magic"));
    }

    #[test]
    fn every_truncation_is_an_error_not_a_panic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.tnsr");
        let t = Tensor::new(TensorKind::Prob, vec![2, 2], vec![0.1, 0.9, 0.4, 0.6]);
        write_tensor(&p, &t).unwrap();
        let full = std::fs::read(&p).unwrap();
        for cut in 0..full.len() {
            std::fs::write(&p, &full[..cut]).unwrap();
            let err = read_tensor(&p).unwrap_err();
            assert_eq!(err.exit_code(), 3, "cut at {cut}");
        }
    }

    #[test]
    fn trailing_bytes_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.tnsr");
        let t = Tensor::new(TensorKind::Prob, vec![1, 1], vec![1.0]);
        write_tensor(&p, &t).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.push(0);
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_tensor(&p).unwrap_err().to_string().contains("trailing"));
    }
}
