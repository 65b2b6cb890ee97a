//! A tour of the eleven generalized operations on a small matrix.

use oocmat::genops::{AggFn, BinaryFn, UnaryFn};
use oocmat::storage::DenseMatrix;
use oocmat::Engine;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = Engine::with_defaults();
    let a = e.from_local(&DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]])?)?;
    let labels = e.from_local(&DenseMatrix::column_i64(vec![0, 1, 0]))?;
    let v = e.from_local(&DenseMatrix::from_f64(1, 2, vec![10.0, 20.0])?)?;
    let w = e.from_local(&DenseMatrix::column_f64(vec![1.0, 0.0, -1.0]))?;

    let show = |name: &str, m: oocmat::Matrix| -> oocmat::Result<()> {
        let d = m.to_local()?;
        println!("{name:<12} {}x{} {:?}", d.nrow(), d.ncol(), d.to_f64_vec());
        Ok(())
    };
    show("sapply", a.sapply(UnaryFn::Square)?)?;
    show("mapply", a.mapply(&a, BinaryFn::Add)?)?;
    show("mapply_row", a.mapply_row(&v, BinaryFn::Mul)?)?;
    show("mapply_col", a.mapply_col(&w, BinaryFn::Add)?)?;
    show("agg", a.agg(AggFn::Sum)?)?;
    show("agg_row", a.agg_row(AggFn::Max)?)?;
    show("agg_col", a.agg_col(AggFn::WhichMin)?)?;
    show("groupby", a.groupby(&e.from_local(&DenseMatrix::from_f64(3, 2, vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0])?)?.cast(oocmat::ElemType::I64)?, AggFn::Sum, 2)?)?;
    show("groupby_row", a.groupby_row(&labels, AggFn::Sum, 2)?)?;
    show("groupby_col", a.groupby_col(&e.from_local(&DenseMatrix::from_i64(1, 2, vec![1, 1])?)?, AggFn::Sum, 2)?)?;
    show("inner_prod", a.t().inner_prod(&a, BinaryFn::Mul, AggFn::Sum)?)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
