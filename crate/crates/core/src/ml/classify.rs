use super::linalg;
use crate::dag::Matrix;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::genops::{AggFn, BinaryFn};
use crate::storage::{DenseMatrix, ElemType};

/// Number of classes: `k` if given, else the largest label plus one.
fn class_count(y: &Matrix, k: Option<usize>) -> Result<usize> {
    if y.elem_type().is_float() {
        return Err(Error::Type {
            op: "class labels",
            detail: format!("labels must be integers, got {}", y.elem_type().name()),
        });
    }
    match k {
        Some(k) => Ok(k),
        None => {
            let top = y.max_all()?.scalar()?.as_i64();
            if top < 0 {
                return Err(Error::invalid("class labels must be nonnegative"));
            }
            Ok(top as usize + 1)
        }
    }
}

/// One pass: per-class counts, per-class sums of `X` and of `f(X)`.
struct ClassSums {
    counts: Vec<i64>,
    sums: Vec<f64>,
    second: Vec<f64>,
}

fn class_sums(x: &Matrix, y: &Matrix, k: usize, squares: bool) -> Result<ClassSums> {
    if y.len() != x.nrow() || (y.ncol() != 1 && y.nrow() != 1) {
        return Err(Error::Shape {
            op: "class sums",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let engine = x.engine();
    let counts = engine.rep_int(1i64, x.nrow())?.groupby(y, AggFn::Sum, k)?;
    let sums = x.groupby_row(y, AggFn::Sum, k)?;
    let second = if squares {
        x.square()?.groupby_row(y, AggFn::Sum, k)?
    } else {
        x.crossprod(x)?
    };
    let second = second.to_local()?.to_f64_vec();
    Ok(ClassSums {
        counts: counts.to_local()?.to_i64_vec(),
        sums: sums.to_local()?.to_f64_vec(),
        second,
    })
}

#[derive(Clone, Debug)]
pub struct NaiveBayesModel {
    pub priors: Vec<f64>,
    /// `k×p` row-major.
    pub means: Vec<f64>,
    /// `k×p` row-major, floored at `eps`.
    pub variances: Vec<f64>,
    pub p: usize,
}

impl NaiveBayesModel {
    pub fn k(&self) -> usize {
        self.priors.len()
    }

    /// Class log-score constants `ln π_c − ½ Σ_j ln(2π σ²_cj)`.
    pub fn constants(&self) -> Vec<f64> {
        let p = self.p;
        (0..self.k())
            .map(|c| {
                let mut s = 0.0;
                for j in 0..p {
                    s += (2.0 * std::f64::consts::PI * self.variances[c * p + j]).ln();
                }
                self.priors[c].ln() - 0.5 * s
            })
            .collect()
    }

    /// Per-class halves of the inverse variances, `1 / (2σ²)`.
    pub fn half_precisions(&self) -> Vec<f64> {
        self.variances.iter().map(|v| 1.0 / (2.0 * v)).collect()
    }

    /// Labels maximizing `ln π_c + Σ_j ln N(x_j; μ_cj, σ²_cj)`, an `n×1`
    /// `i64` matrix. Ties go to the smaller class.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let engine = x.engine();
        let p = self.p;
        let x = x.cast(ElemType::F64)?;
        let h = self.half_precisions();
        let row = |v: &[f64]| -> Result<Matrix> { engine.from_local(&DenseMatrix::from_f64(1, p, v.to_vec())?) };
        let mut cols = Vec::with_capacity(self.k());
        for c in 0..self.k() {
            let mu = row(&self.means[c * p..(c + 1) * p])?;
            let hc = row(&h[c * p..(c + 1) * p])?;
            let s = x.mapply_row(&mu, BinaryFn::Sub)?.square()?.mapply_row(&hc, BinaryFn::Mul)?;
            cols.push(s.row_sums()?);
        }
        let k = self.k();
        let consts = engine.from_local(&DenseMatrix::from_f64(1, k, self.constants())?)?;
        Matrix::cbind(&cols)?
            .neg()?
            .mapply_row(&consts, BinaryFn::Add)?
            .agg_row(AggFn::WhichMax)
    }
}

pub const NB_EPSILON: f64 = 1e-9;

/// Gaussian naive Bayes from one pass over `X`: class counts, sums and sums
/// of squares via groupby. Variances are population variances.
pub fn naive_bayes_train(x: &Matrix, y: &Matrix, k: Option<usize>, eps: f64) -> Result<NaiveBayesModel> {
    let k = class_count(y, k)?;
    let p = x.ncol();
    let x = x.cast(ElemType::F64)?;
    let cs = class_sums(&x, y, k, true)?;
    let n = x.nrow() as f64;
    let mut means = vec![0.0; k * p];
    let mut variances = vec![0.0; k * p];
    let mut priors = vec![0.0; k];
    for c in 0..k {
        let nc = cs.counts[c];
        if nc == 0 {
            return Err(Error::invalid(format!("class {c} has no training rows")));
        }
        let nc = nc as f64;
        priors[c] = nc / n;
        for j in 0..p {
            let m = cs.sums[c * p + j] / nc;
            means[c * p + j] = m;
            variances[c * p + j] = (cs.second[c * p + j] / nc - m * m).max(eps);
        }
    }
    Ok(NaiveBayesModel {
        priors,
        means,
        variances,
        p,
    })
}

#[derive(Clone, Debug)]
pub struct LdaModel {
    pub priors: Vec<f64>,
    /// Class means, `k×p` row-major.
    pub means: Vec<f64>,
    /// Pooled within-class covariance, `p×p`.
    pub covariance: Vec<f64>,
    pub inverse: Vec<f64>,
    pub p: usize,
}

impl LdaModel {
    pub fn k(&self) -> usize {
        self.priors.len()
    }

    /// Discriminant coefficients `W⁻¹ μ_c` as a `p×k` row-major matrix.
    pub fn coefficients(&self) -> Vec<f64> {
        let mt = linalg::transpose(&self.means, self.k(), self.p);
        linalg::matmul(&self.inverse, &mt, self.p, self.p, self.k())
    }

    /// Discriminant offsets `−½ μ_cᵀ W⁻¹ μ_c + ln π_c`.
    pub fn offsets(&self) -> Vec<f64> {
        let b = self.coefficients();
        let (p, k) = (self.p, self.k());
        (0..k)
            .map(|c| {
                let mut q = 0.0;
                for j in 0..p {
                    q += self.means[c * p + j] * b[j * k + c];
                }
                -0.5 * q + self.priors[c].ln()
            })
            .collect()
    }

    /// Labels maximizing `xᵀW⁻¹μ_c − ½μ_cᵀW⁻¹μ_c + ln π_c`.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let engine: &Engine = x.engine();
        let (p, k) = (self.p, self.k());
        let b = engine.from_local(&DenseMatrix::from_f64(p, k, self.coefficients())?)?;
        let off = engine.from_local(&DenseMatrix::from_f64(1, k, self.offsets())?)?;
        x.cast(ElemType::F64)?
            .matmul(&b)?
            .mapply_row(&off, BinaryFn::Add)?
            .agg_row(AggFn::WhichMax)
    }
}

/// Linear discriminant analysis. Class means and the pooled covariance
/// `(t(X)X − Σ_c S_c S_cᵀ / n_c) / (n − k)` come from one pass over `X`.
pub fn lda_train(x: &Matrix, y: &Matrix, k: Option<usize>) -> Result<LdaModel> {
    let k = class_count(y, k)?;
    if k < 2 {
        return Err(Error::invalid("LDA needs at least 2 classes"));
    }
    let p = x.ncol();
    let x = x.cast(ElemType::F64)?;
    let cs = class_sums(&x, y, k, false)?;
    let n = x.nrow();
    if n <= k {
        return Err(Error::invalid(format!("LDA needs more rows than classes, got n = {n}, k = {k}")));
    }
    let mut w = cs.second;
    let mut means = vec![0.0; k * p];
    let mut priors = vec![0.0; k];
    for c in 0..k {
        let nc = cs.counts[c];
        if nc < 2 {
            return Err(Error::invalid(format!("class {c} has {nc} rows; LDA needs at least 2")));
        }
        let nc = nc as f64;
        priors[c] = nc / n as f64;
        let s = &cs.sums[c * p..(c + 1) * p];
        for i in 0..p {
            means[c * p + i] = s[i] / nc;
            for j in 0..p {
                w[i * p + j] -= s[i] * s[j] / nc;
            }
        }
    }
    let dof = (n - k) as f64;
    for v in &mut w {
        *v /= dof;
    }
    let inverse = linalg::invert(&w, p)?;
    Ok(LdaModel {
        priors,
        means,
        covariance: w,
        inverse,
        p,
    })
}
