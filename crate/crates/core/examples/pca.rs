//! Principal components from the Gramian, with and without centering.

use oocmat::storage::DenseMatrix;
use oocmat::{ml, Engine};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = Engine::with_defaults();
    let sigma = DenseMatrix::from_f64(3, 3, vec![4.0, 1.5, 0.0, 1.5, 1.0, 0.0, 0.0, 0.0, 0.25])?;
    let x = ml::mvrnorm(&e, 50_000, &[5.0, -5.0, 0.0], &sigma, 11)?.materialize()?;
    let raw = ml::pca(&x, 2, false)?;
    let cov = ml::pca(&x, 2, true)?;
    println!("Gramian eigenvalues   {:?}", raw.values);
    println!("covariance eigenvalues {:?}", cov.values);
    println!("leading direction {:?}", (0..3).map(|i| cov.vectors.get_f64(i, 0)).collect::<Vec<_>>());
    let scores = cov.project(&x)?.col_sums()?.to_vec_f64()?;
    println!("score sums {scores:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
