use std::collections::HashMap;

use crate::dag::{CacheWhere, Matrix};
use crate::engine::BackingKind;
use crate::error::{Error, Result};
use crate::genops::{AggFn, BinaryFn};
use crate::rng::Rng;
use crate::storage::{DenseMatrix, ElemType};

#[derive(Clone, Debug)]
pub struct KmeansResult {
    pub centers: DenseMatrix,
    /// Cluster of every row, an `n×1` `i64` matrix.
    pub assignment: Matrix,
    pub iterations: usize,
    /// Rows whose label changed in the last iteration.
    pub moved_last: u64,
    pub converged: bool,
    /// Within-cluster sum of squares of each iteration's assignment.
    pub objective: Vec<f64>,
    pub moved: Vec<u64>,
}

/// One Lloyd iteration as a lazy DAG over `X`.
pub struct KmeansStep {
    pub distances: Matrix,
    pub labels: Matrix,
    pub counts: Matrix,
    pub sums: Matrix,
    pub objective: Matrix,
    pub moved: Option<Matrix>,
}

impl KmeansStep {
    /// Builds the DAG for centers `c`; nothing is computed yet.
    pub fn build(x: &Matrix, c: &DenseMatrix, prev: Option<&Matrix>) -> Result<KmeansStep> {
        let k = c.nrow();
        let engine = x.engine();
        let cm = engine.from_local(&DenseMatrix::from_f64(k, c.ncol(), c.to_f64_vec())?)?;
        let distances = x.inner_prod(&cm.t(), BinaryFn::SqDiff, AggFn::Sum)?;
        let labels = distances.agg_row(AggFn::WhichMin)?;
        let counts = engine.rep_int(1i64, x.nrow())?.groupby(&labels, AggFn::Sum, k)?;
        let sums = x.groupby_row(&labels, AggFn::Sum, k)?;
        let objective = distances.agg_row(AggFn::Min)?.agg(AggFn::Sum)?;
        let moved = match prev {
            Some(p) => Some(labels.ne(p)?.agg(AggFn::Sum)?),
            None => None,
        };
        Ok(KmeansStep {
            distances,
            labels,
            counts,
            sums,
            objective,
            moved,
        })
    }

    /// The lazy center update `sums / counts`, row by row.
    pub fn centers(&self) -> Result<Matrix> {
        self.sums.mapply_col(&self.counts, BinaryFn::Div)
    }
}

/// Picks `k` distinct rows. A seeded partial Fisher-Yates shuffle draws
/// `16k + 16` candidate rows; k-means++ seeding over the candidates then
/// chooses the centers, each with probability proportional to its squared
/// distance from the nearest center so far.
pub fn init_centers(x: &Matrix, k: usize, seed: u64) -> Result<DenseMatrix> {
    let n = x.nrow();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k-means needs 1 <= k <= n = {n}, got {k}")));
    }
    let m = n.min(16 * k + 16);
    let rng = Rng::new(seed).split(0x6b6d);
    let mut swapped: HashMap<usize, usize> = HashMap::new();
    let mut idx = Vec::with_capacity(m);
    for i in 0..m {
        let j = i + rng.below_at(i as u64, (n - i) as u64) as usize;
        let vi = *swapped.get(&i).unwrap_or(&i);
        let vj = *swapped.get(&j).unwrap_or(&j);
        swapped.insert(j, vi);
        idx.push(vj);
    }
    let local = x.cast(ElemType::F64)?.subset_rows(&idx)?.to_local()?;
    let rows: Vec<Vec<f64>> = (0..m).map(|r| local.row_f64(r)).collect();
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();

    // Greedy k-means++: each step draws a few candidates and keeps the one
    // that lowers the total squared distance the most.
    let pick = rng.split(1);
    let tries = 2 + (k as f64).ln() as usize;
    let mut draws = 0u64;
    let mut picked = vec![0];
    let mut near: Vec<f64> = rows.iter().map(|r| dist2(r, &rows[0])).collect();
    while picked.len() < k {
        let total: f64 = near.iter().filter(|&&d| d > 0.0).sum();
        if !(total > 0.0) {
            return Err(Error::invalid(format!(
                "found only {} distinct rows among {m} sampled for k = {k}",
                picked.len()
            )));
        }
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..tries {
            let target = pick.uniform_at(draws) * total;
            draws += 1;
            let mut acc = 0.0;
            let mut chosen = 0;
            for (r, &d) in near.iter().enumerate() {
                if d > 0.0 {
                    acc += d;
                    chosen = r;
                    if acc > target {
                        break;
                    }
                }
            }
            let cand: Vec<f64> = near.iter().zip(&rows).map(|(&d, r)| d.min(dist2(r, &rows[chosen]))).collect();
            let pot: f64 = cand.iter().filter(|&&d| d > 0.0).sum();
            if best.as_ref().is_none_or(|b| pot < b.0) {
                best = Some((pot, chosen, cand));
            }
        }
        let (_, c, cand) = best.expect("at least one try");
        picked.push(c);
        near = cand;
    }
    let centers: Vec<Vec<f64>> = picked.into_iter().map(|r| rows[r].clone()).collect();
    DenseMatrix::from_rows(&centers)
}

/// Lloyd's algorithm from `k` sampled rows; see [`kmeans_from`].
pub fn kmeans(x: &Matrix, k: usize, max_iters: usize, seed: u64) -> Result<KmeansResult> {
    let c = init_centers(x, k, seed)?;
    kmeans_from(x, &c, max_iters)
}

/// Lloyd's algorithm: one pass over `X` per iteration computes labels,
/// per-cluster counts and sums, the objective and the number of moved rows.
/// Stops when no row changes cluster. An empty cluster keeps its center.
pub fn kmeans_from(x: &Matrix, init: &DenseMatrix, max_iters: usize) -> Result<KmeansResult> {
    let (k, p) = init.shape();
    if p != x.ncol() {
        return Err(Error::Shape {
            op: "kmeans",
            left: x.shape(),
            right: init.shape(),
        });
    }
    if k > x.nrow() {
        return Err(Error::invalid(format!("k = {k} exceeds n = {}", x.nrow())));
    }
    let file_backed = x.store().is_some_and(|s| s.is_file()) || x.engine().config().backing == BackingKind::File;
    let cache = if file_backed { CacheWhere::File } else { CacheWhere::Memory };
    let mut c = init.to_f64_vec();
    let mut prev: Option<Matrix> = None;
    let mut objective = Vec::new();
    let mut moved_trace = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters.max(1) {
        let cm = DenseMatrix::from_f64(k, p, c.clone())?;
        let step = KmeansStep::build(x, &cm, prev.as_ref())?;
        step.labels.set_cache(cache);
        let counts = step.counts.to_local()?.to_i64_vec();
        objective.push(step.objective.value()?);
        let moved = match &step.moved {
            Some(m) => m.value()? as u64,
            None => x.nrow() as u64,
        };
        moved_trace.push(moved);
        prev = Some(step.labels.materialize()?);
        if moved == 0 {
            converged = true;
            break;
        }
        let next = step.centers()?.to_local()?.to_f64_vec();
        for j in (0..k).filter(|&j| counts[j] > 0) {
            c[j * p..(j + 1) * p].copy_from_slice(&next[j * p..(j + 1) * p]);
        }
        if moved_trace.len() == max_iters {
            break;
        }
    }
    Ok(KmeansResult {
        centers: DenseMatrix::from_f64(k, p, c)?,
        assignment: prev.expect("at least one iteration ran"),
        iterations: moved_trace.len(),
        moved_last: *moved_trace.last().unwrap(),
        converged,
        objective,
        moved: moved_trace,
    })
}
