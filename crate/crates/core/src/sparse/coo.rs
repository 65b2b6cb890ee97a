use crate::error::{Error, Result};
use crate::storage::DenseMatrix;

/// Small sparse matrix held in memory as sorted `(row, col, value)` triples.
#[derive(Clone, Debug, PartialEq)]
pub struct CooMatrix {
    nrow: usize,
    ncol: usize,
    triples: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    /// Sorts the triples; a repeated `(row, col)` keeps its first value.
    pub fn new(nrow: usize, ncol: usize, mut triples: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, _) in &triples {
            if r >= nrow || c >= ncol {
                return Err(Error::invalid(format!(
                    "entry ({r}, {c}) outside a {nrow}x{ncol} matrix"
                )));
            }
        }
        triples.sort_by_key(|&(r, c, _)| (r, c));
        triples.dedup_by_key(|t| (t.0, t.1));
        Ok(CooMatrix { nrow, ncol, triples })
    }

    pub fn nrow(&self) -> usize {
        self.nrow
    }

    pub fn ncol(&self) -> usize {
        self.ncol
    }

    pub fn nnz(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> &[(usize, usize, f64)] {
        &self.triples
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = vec![0.0; self.nrow * self.ncol];
        for &(r, c, v) in &self.triples {
            d[r * self.ncol + c] = v;
        }
        DenseMatrix::from_f64(self.nrow, self.ncol, d).expect("shape matches data")
    }

    /// Sparse times dense: `self (n×m) · b (m×p)`.
    pub fn matmul_dense(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.nrow() != self.ncol {
            return Err(Error::Shape {
                op: "coo matmul",
                left: (self.nrow, self.ncol),
                right: b.shape(),
            });
        }
        let p = b.ncol();
        let bv = b.to_f64_vec();
        let mut out = vec![0.0; self.nrow * p];
        for &(r, c, v) in &self.triples {
            let dst = &mut out[r * p..(r + 1) * p];
            for (o, &x) in dst.iter_mut().zip(&bv[c * p..(c + 1) * p]) {
                *o += v * x;
            }
        }
        DenseMatrix::from_f64(self.nrow, p, out)
    }
}
