use crate::dag::Matrix;
use crate::error::{Error, Result};
use crate::genops::BinaryFn;
use crate::storage::{DenseMatrix, ElemType};

pub const ARMIJO_C: f64 = 0.5;
pub const SHRINK: f64 = 0.2;
pub const ETA_MIN: f64 = 1e-12;
/// Step sizes evaluated together in one pass over `X`.
pub const BATCH: usize = 8;

#[derive(Clone, Debug)]
pub struct LogisticModel {
    pub theta: Vec<f64>,
    /// Loss at the start and after every accepted step.
    pub logloss_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Passes over `X`, including the initial evaluation.
    pub passes: usize,
}

impl LogisticModel {
    /// Predicted labels `1[Xθ > 0]` as an `n×1` `u8` matrix.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let theta = DenseMatrix::from_f64(self.theta.len(), 1, self.theta.clone())?;
        let t = x.engine().from_local(&theta)?;
        x.cast(ElemType::F64)?.matmul(&t)?.gt_scalar(0.0)
    }
}

/// Builds the column sums of `softplus(Z) - y*Z` and `t(X) (sigmoid(Z) - y)`
/// for `Z = X Θ` as sinks of one DAG; `thetas` are the columns of `Θ`.
pub fn loss_grad_dag(x: &Matrix, y: &Matrix, thetas: &[Vec<f64>]) -> Result<(Matrix, Matrix)> {
    let p = x.ncol();
    let m = thetas.len();
    let mut t = vec![0.0; p * m];
    for (c, th) in thetas.iter().enumerate() {
        for r in 0..p {
            t[r * m + c] = th[r];
        }
    }
    let t = x.engine().from_local(&DenseMatrix::from_f64(p, m, t)?)?;
    let z = x.matmul(&t)?;
    let softplus = z.pmax_scalar(0.0)?.add(&z.abs()?.neg()?.exp()?.log1p()?)?;
    let loss = softplus.sub(&z.mapply_col(y, BinaryFn::Mul)?)?.col_sums()?;
    let sigmoid = z.neg()?.exp()?.add_scalar(1.0)?.scalar_op(1.0, BinaryFn::Div)?;
    let grad = x.t().matmul(&sigmoid.mapply_col(y, BinaryFn::Sub)?)?;
    Ok((loss, grad))
}

/// Mean log-loss and its gradient at every `θ` in `thetas`, from a single
/// pass over `X`.
pub fn logistic_loss_grad(x: &Matrix, y: &Matrix, thetas: &[Vec<f64>]) -> Result<Vec<(f64, Vec<f64>)>> {
    let (x, y) = prepare(x, y)?;
    eval(&x, &y, thetas)
}

fn prepare(x: &Matrix, y: &Matrix) -> Result<(Matrix, Matrix)> {
    if y.len() != x.nrow() || (y.ncol() != 1 && y.nrow() != 1) {
        return Err(Error::Shape {
            op: "logistic_regression",
            left: x.shape(),
            right: y.shape(),
        });
    }
    Ok((x.cast(ElemType::F64)?, y.cast(ElemType::F64)?))
}

fn eval(x: &Matrix, y: &Matrix, thetas: &[Vec<f64>]) -> Result<Vec<(f64, Vec<f64>)>> {
    let p = x.ncol();
    let m = thetas.len();
    if let Some(bad) = thetas.iter().find(|t| t.len() != p) {
        return Err(Error::invalid(format!("theta has {} entries, X has {p} columns", bad.len())));
    }
    let (loss, grad) = loss_grad_dag(x, y, thetas)?;
    let g = grad.to_local()?.to_f64_vec();
    let l = loss.to_vec_f64()?;
    let n = x.nrow() as f64;
    Ok((0..m)
        .map(|c| (l[c] / n, (0..p).map(|r| g[r * m + c] / n).collect()))
        .collect())
}

/// Gradient descent with Armijo backtracking from `θ = 0`. Step sizes
/// `1, 0.2, 0.04, ...` are tried in order and the first with
/// `loss(θ - ηg) <= loss(θ) - 0.5·η·‖g‖²` (and a strict decrease) is taken.
/// `BATCH` candidate steps share one pass over `X`, so an iteration usually
/// costs one pass. Stops once the loss drops by less than `tol`.
pub fn logistic_regression(x: &Matrix, y: &Matrix, max_iters: usize, tol: f64) -> Result<LogisticModel> {
    let (x, y) = prepare(x, y)?;
    let nonbinary = y.ne_scalar(0.0)?.and(&y.ne_scalar(1.0)?)?.any()?;
    let p = x.ncol();
    let mut theta = vec![0.0; p];
    let (mut loss, mut grad) = eval(&x, &y, std::slice::from_ref(&theta))?.remove(0);
    if nonbinary.value()? != 0.0 {
        return Err(Error::invalid("logistic regression labels must be 0 or 1"));
    }
    let mut passes = 1;
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        let gg: f64 = grad.iter().map(|g| g * g).sum();
        if gg == 0.0 {
            converged = true;
            break;
        }
        let mut eta0 = 1.0;
        let accepted = loop {
            if eta0 < ETA_MIN {
                return Err(Error::Numerical(format!(
                    "line search stalled below eta = {ETA_MIN:e} at iteration {}",
                    iterations + 1
                )));
            }
            let etas: Vec<f64> = (0..BATCH).map(|m| eta0 * SHRINK.powi(m as i32)).collect();
            let cands: Vec<Vec<f64>> = etas
                .iter()
                .map(|&eta| theta.iter().zip(&grad).map(|(t, g)| t - eta * g).collect())
                .collect();
            let res = eval(&x, &y, &cands)?;
            passes += 1;
            let hit = etas
                .iter()
                .zip(cands.into_iter().zip(res))
                .find(|(&eta, (_, (l, _)))| *l < loss && *l <= loss - ARMIJO_C * eta * gg);
            if let Some((_, (th, (l, g)))) = hit {
                break (th, l, g);
            }
            eta0 *= SHRINK.powi(BATCH as i32);
        };
        let (th, l, g) = accepted;
        let decrease = loss - l;
        theta = th;
        loss = l;
        grad = g;
        trace.push(loss);
        iterations += 1;
        if decrease < tol {
            converged = true;
            break;
        }
    }
    Ok(LogisticModel {
        theta,
        logloss_trace: trace,
        iterations,
        converged,
        passes,
    })
}
