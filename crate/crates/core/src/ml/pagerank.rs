use crate::error::{Error, Result};
use crate::sparse::CsrGraph;
use crate::storage::DenseMatrix;

#[derive(Clone, Debug)]
pub struct PagerankState {
    pub pr: Vec<f64>,
    pub damping: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest `|pr' - pr|` of the last iteration.
    pub last_delta: f64,
}

/// Power iteration `pr' = (1-d)/n + d·t(G)(pr/outdeg)`. `t(G)` is written
/// once and streamed from disk every iteration; vertices without out-edges
/// contribute nothing. Converges when every `|pr' - pr| < epsilon`, which
/// defaults to `0.01/n`.
pub fn pagerank(g: &CsrGraph, damping: f64, epsilon: Option<f64>, max_iters: usize) -> Result<PagerankState> {
    let n = g.n();
    if !(0.0..=1.0).contains(&damping) {
        return Err(Error::invalid(format!("damping {damping} is outside [0, 1]")));
    }
    let epsilon = epsilon.unwrap_or(0.01 / n as f64);
    let deg = g.out_degrees()?;
    let gt = g.transpose()?;
    let nf = n as f64;
    let base = (1.0 - damping) / nf;
    let mut pr = vec![1.0 / nf; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut last_delta = f64::INFINITY;
    while iterations < max_iters {
        let x: Vec<f64> = pr
            .iter()
            .zip(&deg)
            .map(|(&p, &d)| if d > 0.0 { p / d } else { 0.0 })
            .collect();
        let y = gt.spmv(&DenseMatrix::column_f64(x))?.to_f64_vec();
        let next: Vec<f64> = y.iter().map(|&v| base + damping * v).collect();
        last_delta = next.iter().zip(&pr).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pr = next;
        iterations += 1;
        if last_delta < epsilon {
            converged = true;
            break;
        }
    }
    Ok(PagerankState {
        pr,
        damping,
        epsilon,
        iterations,
        converged,
        last_delta,
    })
}
