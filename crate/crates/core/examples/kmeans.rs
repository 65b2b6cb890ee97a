//! Lloyd's k-means on synthetic blobs, one pass over the data per iteration.

use oocmat::{datasets, ml, Engine};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = Engine::with_defaults();
    let (x, truth) = datasets::blobs(&e, 30_000, 8, 3, 10.0, 1.0, 1)?;
    let x = x.materialize()?;
    let r = ml::kmeans(&x, 3, 25, 42)?;
    let got = r.assignment.to_local()?.to_i64_vec();
    let want = truth.to_local()?.to_i64_vec();
    println!("iterations {} converged {}", r.iterations, r.converged);
    println!("moved per iteration {:?}", r.moved);
    println!("objective {:?}", r.objective);
    println!("ARI {:.4}", ml::adjusted_rand_index(&got, &want));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
