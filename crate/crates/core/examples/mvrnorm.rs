//! Multivariate normal samples via an eigendecomposition of Sigma.

use oocmat::storage::DenseMatrix;
use oocmat::{ml, Engine};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = Engine::with_defaults();
    let sigma = DenseMatrix::from_f64(2, 2, vec![2.0, 0.8, 0.8, 1.0])?;
    let x = ml::mvrnorm(&e, 100_000, &[1.0, -1.0], &sigma, 3)?.materialize()?;
    let n = x.nrow() as f64;
    let mean = x.col_means()?.to_vec_f64()?;
    let g = x.crossprod(&x)?.to_local()?;
    let cov = |i: usize, j: usize| (g.get_f64(i, j) - n * mean[i] * mean[j]) / (n - 1.0);
    println!("mean {mean:?}");
    println!("covariance [[{:.3}, {:.3}], [{:.3}, {:.3}]]", cov(0, 0), cov(0, 1), cov(1, 0), cov(1, 1));

    let bad = DenseMatrix::from_f64(2, 2, vec![1.0, 2.0, 2.0, 1.0])?;
    println!("indefinite Sigma: {}", ml::mvrnorm(&e, 10, &[0.0, 0.0], &bad, 1).unwrap_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
