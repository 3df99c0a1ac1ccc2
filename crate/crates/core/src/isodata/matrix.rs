use std::path::Path;

use crate::error::{Error, Result};

pub const TVSE_MAGIC: &[u8; 4] = b"TVSE";
pub const TVSE_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Row-major `n x d` matrix of frame embeddings; row `i` is candidate frame `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(Error::validation(format!(
                "embedding matrix must be non-empty (got {rows}x{dim})"
            )));
        }
        if data.len() != rows * dim {
            return Err(Error::validation(format!(
                "embedding payload has {} values, expected {rows}x{dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "embedding row {} has a non-finite value",
                i / dim
            )));
        }
        let m = EmbeddingMatrix { rows, dim, data };
        if let Some(i) = (0..rows).find(|&i| m.row(i).iter().all(|v| *v == 0.0)) {
            return Err(Error::validation(format!("embedding row {i} is the zero vector")));
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::validation(format!("embedding row {i} has the wrong width")));
        }
        EmbeddingMatrix::new(rows.len(), dim, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            if i >= self.rows {
                return Err(Error::validation(format!(
                    "embedding row {i} out of range (matrix has {} rows)",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix::new(idx.len(), self.dim, data)
    }

    /// Encodes the matrix as a TVSE file: magic, u32 version, u32 n, u32 d,
    /// then `n*d` little-endian f32 values row by row.
    pub fn to_tvse_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(TVSE_MAGIC);
        out.extend_from_slice(&TVSE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_tvse_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::validation("TVSE file shorter than its header"));
        }
        if &bytes[..4] != TVSE_MAGIC {
            return Err(Error::validation("TVSE file has a bad magic number"));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let version = word(4);
        if version != TVSE_VERSION {
            return Err(Error::validation(format!("unsupported TVSE version {version}")));
        }
        let (n, d) = (word(8) as usize, word(12) as usize);
        let expected = n
            .checked_mul(d)
            .and_then(|c| c.checked_mul(4))
            .ok_or_else(|| Error::validation("TVSE header overflows"))?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != expected {
            return Err(Error::validation(format!(
                "TVSE payload is {} bytes, header promises {n}x{d} floats ({expected} bytes)",
                payload.len()
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        EmbeddingMatrix::new(n, d, data)
    }

    pub fn read_tvse(path: &Path) -> Result<Self> {
        Self::from_tvse_bytes(&std::fs::read(path)?)
    }

    pub fn write_tvse(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tvse_bytes())?;
        Ok(())
    }
}
