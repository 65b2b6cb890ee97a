//! Synthetic datasets built lazily from generators, so they can be written
//! out of core.

use crate::dag::Matrix;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::genops::BinaryFn;
use crate::rng::Rng;
use crate::storage::ElemType;

/// `k` Gaussian blobs in `p` dimensions. Center `c` is `c·sep/√p` in every
/// coordinate, so centers are `sep` apart along the diagonal; points have
/// standard deviation `sigma` per coordinate. Labels are uniform in `[0, k)`.
/// Returns `(X, labels)` with labels as an `n×1` `i64` matrix.
pub fn blobs(engine: &Engine, n: usize, p: usize, k: usize, sep: f64, sigma: f64, seed: u64) -> Result<(Matrix, Matrix)> {
    if k == 0 || p == 0 {
        return Err(Error::invalid("blobs need k >= 1 and p >= 1"));
    }
    let rng = Rng::new(seed);
    let labels = engine
        .runif_matrix(n, 1, rng.split(1).u64_at(0))?
        .mul_scalar(k as f64)?
        .cast(ElemType::I64)?;
    let offset = labels.cast(ElemType::F64)?.mul_scalar(sep / (p as f64).sqrt())?;
    let x = engine
        .rnorm_matrix(n, p, rng.split(2).u64_at(0))?
        .mul_scalar(sigma)?
        .mapply_col(&offset, BinaryFn::Add)?;
    Ok((x, labels))
}

/// Linearly separable points in `[-5, 5]²` pushed `margin/2` away from the
/// line `x + y = 0`. Labels are `1` above the line, `0` below, as `f64`.
pub fn logistic2d(engine: &Engine, n: usize, margin: f64, seed: u64) -> Result<(Matrix, Matrix)> {
    let u = engine.runif_range(n, 2, seed, -5.0, 5.0)?;
    let above = u.row_sums()?.gt_scalar(0.0)?.cast(ElemType::F64)?;
    let shift = above.mul_scalar(2.0)?.sub_scalar(1.0)?.mul_scalar(margin / 2.0 / 2f64.sqrt())?;
    let x = u.mapply_col(&shift, BinaryFn::Add)?;
    Ok((x, above))
}

/// Directed graph where every vertex has `degree` out-edges to uniformly
/// chosen targets. Self-loops and repeats are possible; loading drops repeats.
pub fn random_graph(n: usize, degree: usize, seed: u64) -> Vec<(usize, usize)> {
    let rng = Rng::new(seed);
    let mut edges = Vec::with_capacity(n * degree);
    for v in 0..n {
        for e in 0..degree {
            let t = rng.below_at((v * degree + e) as u64, n as u64) as usize;
            edges.push((v, t));
        }
    }
    edges
}

/// Formats edges as `src dst` lines.
pub fn edges_to_text(edges: &[(usize, usize)]) -> String {
    let mut s = String::with_capacity(edges.len() * 12);
    for (a, b) in edges {
        s.push_str(&format!("{a} {b}\n"));
    }
    s
}
