//! Pearson correlation of all column pairs in one pass.

use oocmat::{ml, Engine};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = Engine::with_defaults();
    let z = e.rnorm_matrix(200_000, 4, 3)?;
    // Column 3 mixes columns 0 and 1.
    let mix = z.select_cols(&[0])?.add(&z.select_cols(&[1])?)?;
    let x = oocmat::Matrix::cbind(&[z.select_cols(&[0, 1, 2])?, mix])?;
    let c = ml::correlation(&x)?;
    for i in 0..4 {
        let row: Vec<String> = (0..4).map(|j| format!("{:+.3}", c.get_f64(i, j))).collect();
        println!("{}", row.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
