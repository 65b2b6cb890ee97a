use super::{Buffer, ElemType, Scalar};
use crate::error::{Error, Result};

/// A small row-major matrix owned by the caller.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    nrow: usize,
    ncol: usize,
    data: Buffer,
}

impl DenseMatrix {
    pub fn new(nrow: usize, ncol: usize, data: Buffer) -> Result<Self> {
        if data.len() != nrow * ncol {
            return Err(Error::invalid(format!(
                "{}x{} matrix needs {} elements, got {}",
                nrow,
                ncol,
                nrow * ncol,
                data.len()
            )));
        }
        Ok(DenseMatrix { nrow, ncol, data })
    }

    pub fn from_f64(nrow: usize, ncol: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(nrow, ncol, Buffer::F64(data))
    }

    pub fn from_i64(nrow: usize, ncol: usize, data: Vec<i64>) -> Result<Self> {
        Self::new(nrow, ncol, Buffer::I64(data))
    }

    /// Builds an `f64` matrix from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrow = rows.len();
        let ncol = rows.first().map_or(0, |r| r.len());
        if let Some(i) = rows.iter().position(|r| r.len() != ncol) {
            return Err(Error::Ragged {
                row: i,
                expected: ncol,
                found: rows[i].len(),
            });
        }
        Self::from_f64(nrow, ncol, rows.concat())
    }

    /// A column vector.
    pub fn column_f64(data: Vec<f64>) -> Self {
        let n = data.len();
        DenseMatrix {
            nrow: n,
            ncol: 1,
            data: Buffer::F64(data),
        }
    }

    pub fn column_i64(data: Vec<i64>) -> Self {
        let n = data.len();
        DenseMatrix {
            nrow: n,
            ncol: 1,
            data: Buffer::I64(data),
        }
    }

    pub fn zeros(nrow: usize, ncol: usize, ty: ElemType) -> Self {
        DenseMatrix {
            nrow,
            ncol,
            data: Buffer::zeros(ty, nrow * ncol),
        }
    }

    pub fn nrow(&self) -> usize {
        self.nrow
    }

    pub fn ncol(&self) -> usize {
        self.ncol
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrow, self.ncol)
    }

    pub fn elem_type(&self) -> ElemType {
        self.data.elem_type()
    }

    pub fn data(&self) -> &Buffer {
        &self.data
    }

    pub fn into_data(self) -> Buffer {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        self.data.get(i * self.ncol + j)
    }

    pub fn get_f64(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).as_f64()
    }

    /// Row-major elements converted to `f64`.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.to_f64_vec()
    }

    pub fn to_i64_vec(&self) -> Vec<i64> {
        self.data.to_i64_vec()
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        (0..self.ncol).map(|j| self.get_f64(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let (n, p) = (self.nrow, self.ncol);
        let data = crate::with_buffer!(&self.data, v => {
            let mut out = Vec::with_capacity(v.len());
            for j in 0..p {
                for i in 0..n {
                    out.push(v[i * p + j]);
                }
            }
            Buffer::from(out)
        });
        DenseMatrix {
            nrow: p,
            ncol: n,
            data,
        }
    }
}

impl From<Vec<f64>> for Buffer {
    fn from(v: Vec<f64>) -> Self {
        Buffer::F64(v)
    }
}

impl From<Vec<i64>> for Buffer {
    fn from(v: Vec<i64>) -> Self {
        Buffer::I64(v)
    }
}

impl From<Vec<i32>> for Buffer {
    fn from(v: Vec<i32>) -> Self {
        Buffer::I32(v)
    }
}

impl From<Vec<u8>> for Buffer {
    fn from(v: Vec<u8>) -> Self {
        Buffer::U8(v)
    }
}
