//! Gradient descent with backtracking on a separable 2-D problem.

use oocmat::{datasets, ml, ElemType, Engine};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = Engine::with_defaults();
    let (x, y) = datasets::logistic2d(&e, 1000, 1.0, 5)?;
    let x = x.materialize()?;
    let m = ml::logistic_regression(&x, &y, 200, 1e-6)?;
    let pred = m.predict(&x)?.cast(ElemType::I64)?.to_local()?.to_i64_vec();
    let truth = y.cast(ElemType::I64)?.to_local()?.to_i64_vec();
    println!("theta {:?}", m.theta);
    println!("iterations {} passes over X {}", m.iterations, m.passes);
    println!("loss {:.6} -> {:.6}", m.logloss_trace[0], m.logloss_trace.last().unwrap());
    println!("accuracy {}", ml::accuracy(&pred, &truth));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
