//! Gaussian naive Bayes and linear discriminant analysis on three classes.

use oocmat::{datasets, ml, Engine};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = Engine::with_defaults();
    let (x, y) = datasets::blobs(&e, 20_000, 4, 3, 4.0, 1.0, 9)?;
    let x = x.materialize()?;
    let y = y.materialize()?;
    let truth = y.to_local()?.to_i64_vec();

    let nb = ml::naive_bayes_train(&x, &y, None, ml::NB_EPSILON)?;
    let nb_pred = nb.predict(&x)?.to_local()?.to_i64_vec();
    println!("naive Bayes priors {:?}", nb.priors);
    println!("naive Bayes accuracy {:.4}", ml::accuracy(&nb_pred, &truth));

    let lda = ml::lda_train(&x, &y, None)?;
    let lda_pred = lda.predict(&x)?.to_local()?.to_i64_vec();
    println!("pooled covariance diagonal {:?}", (0..4).map(|i| lda.covariance[i * 4 + i]).collect::<Vec<_>>());
    println!("LDA accuracy {:.4}", ml::accuracy(&lda_pred, &truth));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
