use super::linalg::{self, sym_eigen};
use crate::dag::Matrix;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::storage::{DenseMatrix, ElemType};

/// Pairwise Pearson correlation from one pass over `X`: column sums and
/// `t(X) %*% X` are sinks of the same DAG. A constant column yields NaN in
/// its row and column.
pub fn correlation(x: &Matrix) -> Result<DenseMatrix> {
    let n = x.nrow();
    let p = x.ncol();
    if n < 2 {
        return Err(Error::invalid(format!("correlation needs at least 2 rows, got {n}")));
    }
    let x = x.cast(ElemType::F64)?;
    let sums = x.col_sums()?;
    let gram = x.crossprod(&x)?;
    let g = gram.to_local()?.to_f64_vec();
    let s = sums.to_vec_f64()?;
    let nf = n as f64;
    let mut c = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            let num = nf * g[i * p + j] - s[i] * s[j];
            let vi = nf * g[i * p + i] - s[i] * s[i];
            let vj = nf * g[j * p + j] - s[j] * s[j];
            c[i * p + j] = if vi > 0.0 && vj > 0.0 { num / (vi * vj).sqrt() } else { f64::NAN };
        }
    }
    DenseMatrix::from_f64(p, p, c)
}

#[derive(Clone, Debug)]
pub struct PcaResult {
    /// All eigenvalues of the (optionally centered) Gramian, descending.
    pub values: Vec<f64>,
    /// Leading `k` eigenvectors as a `p×k` matrix.
    pub vectors: DenseMatrix,
    /// The decomposed `p×p` matrix.
    pub gram: DenseMatrix,
    pub sweeps: usize,
}

impl PcaResult {
    /// Scores `X %*% V` as a lazy `n×k` matrix.
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        let v = x.engine().from_local(&self.vectors)?;
        x.cast(ElemType::F64)?.matmul(&v)
    }
}

/// Eigen-decomposition of `t(X) %*% X`. With `center` the matrix is the
/// sample covariance instead.
pub fn pca(x: &Matrix, k: usize, center: bool) -> Result<PcaResult> {
    let n = x.nrow();
    let p = x.ncol();
    if k == 0 || k > p {
        return Err(Error::invalid(format!("pca needs 1 <= k <= {p}, got {k}")));
    }
    let x = x.cast(ElemType::F64)?;
    let sums = x.col_sums()?;
    let gram = x.crossprod(&x)?;
    let mut g = gram.to_local()?.to_f64_vec();
    if center {
        if n < 2 {
            return Err(Error::invalid("centered pca needs at least 2 rows"));
        }
        let s = sums.to_vec_f64()?;
        let nf = n as f64;
        for i in 0..p {
            for j in 0..p {
                g[i * p + j] = (g[i * p + j] - s[i] * s[j] / nf) / (nf - 1.0);
            }
        }
    }
    let eig = sym_eigen(&g, p)?;
    let mut v = vec![0.0; p * k];
    for r in 0..p {
        v[r * k..(r + 1) * k].copy_from_slice(&eig.vectors[r * p..r * p + k]);
    }
    Ok(PcaResult {
        values: eig.values,
        vectors: DenseMatrix::from_f64(p, k, v)?,
        gram: DenseMatrix::from_f64(p, p, g)?,
        sweeps: eig.sweeps,
    })
}

/// Relative tolerance for negative eigenvalues of `Sigma`.
pub const MVRNORM_TOL: f64 = 1e-6;

/// Lazy `n×p` sample of `N(mu, Sigma)`: `1·muᵀ + Z·diag(√λ)·Qᵀ` with
/// `Z = rnorm_matrix(n, p, seed)` and `Sigma = QΛQᵀ`.
pub fn mvrnorm(engine: &Engine, n: usize, mu: &[f64], sigma: &DenseMatrix, seed: u64) -> Result<Matrix> {
    let p = mu.len();
    if sigma.shape() != (p, p) {
        return Err(Error::Shape {
            op: "mvrnorm",
            left: (p, p),
            right: sigma.shape(),
        });
    }
    let s = sigma.to_f64_vec();
    let scale = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..p {
        for j in 0..i {
            if (s[i * p + j] - s[j * p + i]).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!("Sigma is not symmetric at ({i}, {j})")));
            }
        }
    }
    let eig = sym_eigen(&s, p)?;
    let top = eig.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(&low) = eig.values.iter().find(|&&l| l < -MVRNORM_TOL * top) {
        return Err(Error::Numerical(format!("Sigma is not positive definite (eigenvalue {low:e})")));
    }
    // A = diag(sqrt(lambda)) Q^T, so X = Z A.
    let mut a = linalg::transpose(&eig.vectors, p, p);
    for (r, l) in eig.values.iter().enumerate() {
        let f = l.max(0.0).sqrt();
        for v in &mut a[r * p..(r + 1) * p] {
            *v *= f;
        }
    }
    let a = engine.from_local(&DenseMatrix::from_f64(p, p, a)?)?;
    let mu = engine.from_local(&DenseMatrix::from_f64(1, p, mu.to_vec())?)?;
    let z = engine.rnorm_matrix(n, p, seed)?;
    z.matmul(&a)?.mapply_row(&mu, crate::genops::BinaryFn::Add)
}
