//! Every GenOp against the naive reference evaluator on random instances,
//! plus the shape, transpose-duality and determinism laws.

mod common;

use common::*;
use oocmat::genops::{AggFn, BinaryFn, GenOpKind};
use oocmat::storage::{DenseMatrix, ElemType};
use proptest::prelude::*;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

macro_rules! oracle_test {
    ($name:ident, $kind:expr) => {
        proptest! {
            #![proptest_config(cfg(128))]
            #[test]
            fn $name(c in case($kind)) {
                if let Err(msg) = check(&c) {
                    prop_assert!(false, "{:?}: {}", c, msg);
                }
            }
        }
    };
}

oracle_test!(sapply_matches_oracle, GenOpKind::Sapply);
oracle_test!(mapply_matches_oracle, GenOpKind::Mapply);
oracle_test!(mapply_row_matches_oracle, GenOpKind::MapplyRow);
oracle_test!(mapply_col_matches_oracle, GenOpKind::MapplyCol);
oracle_test!(agg_matches_oracle, GenOpKind::Agg);
oracle_test!(agg_row_matches_oracle, GenOpKind::AggRow);
oracle_test!(agg_col_matches_oracle, GenOpKind::AggCol);
oracle_test!(groupby_matches_oracle, GenOpKind::Groupby);
oracle_test!(groupby_row_matches_oracle, GenOpKind::GroupbyRow);
oracle_test!(groupby_col_matches_oracle, GenOpKind::GroupbyCol);
oracle_test!(inner_prod_matches_oracle, GenOpKind::InnerProd);

fn f64m(e: &oocmat::Engine, rows: &[Vec<f64>]) -> oocmat::Matrix {
    e.from_local(&DenseMatrix::from_rows(rows).unwrap()).unwrap()
}

fn ints(e: &oocmat::Engine, v: &[i64]) -> oocmat::Matrix {
    e.from_local(&DenseMatrix::column_i64(v.to_vec())).unwrap()
}

fn rows(m: &oocmat::Matrix) -> Vec<Vec<f64>> {
    let d = m.to_local().unwrap();
    (0..d.nrow()).map(|i| d.row_f64(i)).collect()
}

#[test]
fn table_examples() {
    let e = engine_with(2, 8, 1024);
    let a = f64m(&e, &[vec![1.0, -2.0], vec![3.0, -4.0]]);
    assert_eq!(rows(&a.abs().unwrap()), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    let b = f64m(&e, &[vec![10.0, 20.0], vec![30.0, 40.0]]);
    let a = f64m(&e, &[vec![1.0, 2.0], vec![3.0, 4.0]]);
    assert_eq!(rows(&a.add(&b).unwrap()), vec![vec![11.0, 22.0], vec![33.0, 44.0]]);
    assert_eq!(rows(&a.sub(&a).unwrap()), vec![vec![0.0; 2]; 2]);
    let v = e.from_local(&DenseMatrix::column_f64(vec![10.0, 20.0])).unwrap();
    assert_eq!(
        rows(&a.mapply_row(&v, BinaryFn::Add).unwrap()),
        vec![vec![11.0, 22.0], vec![13.0, 24.0]]
    );
    assert_eq!(
        rows(&a.mapply_col(&v, BinaryFn::Add).unwrap()),
        vec![vec![11.0, 12.0], vec![23.0, 24.0]]
    );
    assert_eq!(e.constant(1.0, 2, 2).unwrap().sum().unwrap().value().unwrap(), 4.0);

    let w = f64m(&e, &[vec![3.0, 1.0], vec![0.0, 5.0]]);
    let idx = w.agg_row(AggFn::WhichMin).unwrap().to_local().unwrap();
    assert_eq!(idx.to_i64_vec(), vec![1, 0]);

    let x = f64m(&e, &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
    let g = x.groupby_row(&ints(&e, &[0, 1, 0]), AggFn::Sum, 2).unwrap();
    assert_eq!(rows(&g), vec![vec![6.0, 8.0], vec![3.0, 4.0]]);

    let cnt = e.rep_int(1i64, 5).unwrap().groupby(&ints(&e, &[0, 0, 1, 2, 2]), AggFn::Sum, 3).unwrap();
    assert_eq!(cnt.to_local().unwrap().to_i64_vec(), vec![2, 1, 2]);

    let empty = x.groupby_row(&ints(&e, &[0, 0, 0]), AggFn::Sum, 2).unwrap();
    assert_eq!(rows(&empty)[1], vec![0.0, 0.0]);

    let id = f64m(&e, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(rows(&a.matmul(&id).unwrap()), rows(&a));

    let pt = f64m(&e, &[vec![1.0, 2.0]]);
    let c = f64m(&e, &[vec![0.0], vec![0.0]]);
    let d = pt.inner_prod(&c, BinaryFn::SqDiff, AggFn::Sum).unwrap();
    assert_eq!(d.value().unwrap(), 5.0);
}

#[test]
fn centroid_normalization_hand_example() {
    // Four points, two clusters: {(0,0),(2,0)} and {(10,10),(10,12)}.
    let e = engine_with(1, 8, 1024);
    let x = f64m(&e, &[vec![0.0, 0.0], vec![10.0, 10.0], vec![2.0, 0.0], vec![10.0, 12.0]]);
    let lab = ints(&e, &[0, 1, 0, 1]);
    let sums = x.groupby_row(&lab, AggFn::Sum, 2).unwrap();
    let cnt = e.rep_int(1i64, 4).unwrap().groupby(&lab, AggFn::Sum, 2).unwrap();
    let centers = sums.mapply_col(&cnt, BinaryFn::Div).unwrap();
    assert_eq!(rows(&centers), vec![vec![1.0, 0.0], vec![10.0, 11.0]]);
}

#[test]
fn integer_product_matches_triple_loop() {
    let e = engine_with(2, 8, 256);
    let a: Vec<i64> = (0..48).map(|i| (i * 7 % 11) - 5).collect();
    let b: Vec<i64> = (0..30).map(|i| (i * 5 % 13) - 6).collect();
    let am = e.from_local(&DenseMatrix::from_i64(8, 6, a.clone()).unwrap()).unwrap();
    let bm = e.from_local(&DenseMatrix::from_i64(6, 5, b.clone()).unwrap()).unwrap();
    let c = am.matmul(&bm).unwrap().to_local().unwrap();
    assert_eq!(c.elem_type(), ElemType::I64);
    let mut want = vec![0i64; 40];
    for i in 0..8 {
        for j in 0..5 {
            for k in 0..6 {
                want[i * 5 + j] += a[i * 6 + k] * b[k * 5 + j];
            }
        }
    }
    assert_eq!(c.to_i64_vec(), want);
}

#[test]
fn which_min_ties_take_smallest_index() {
    let e = engine_with(3, 8, 64);
    let v: Vec<f64> = (0..40).map(|i| if i == 9 || i == 17 || i == 33 { -1.0 } else { i as f64 }).collect();
    let m = e.from_local(&DenseMatrix::column_f64(v)).unwrap();
    assert_eq!(m.agg(AggFn::WhichMin).unwrap().scalar().unwrap().as_i64(), 9);
    assert_eq!(m.t().agg_row(AggFn::WhichMin).unwrap().scalar().unwrap().as_i64(), 9);
    assert_eq!(m.agg_col(AggFn::WhichMin).unwrap().scalar().unwrap().as_i64(), 9);
}

#[test]
fn which_skips_nan_and_empty_fold_errors() {
    let e = engine_with(1, 8, 1024);
    let m = f64m(&e, &[vec![f64::NAN, 2.0, 1.0], vec![f64::NAN, f64::NAN, f64::NAN]]);
    let r = m.agg_row(AggFn::WhichMax).unwrap().to_local();
    assert!(matches!(r.as_ref().map_err(|e| e.root_cause()), Err(oocmat::Error::EmptyFold(_))), "{r:?}");
    let first = m.subset_rows(&[0]).unwrap();
    assert_eq!(first.agg_row(AggFn::WhichMax).unwrap().to_local().unwrap().to_i64_vec(), vec![1]);
}

#[test]
fn grouped_folds_reject_index_functions_and_bad_labels() {
    let e = engine_with(1, 8, 1024);
    let x = f64m(&e, &[vec![1.0], vec![2.0]]);
    assert!(x.groupby_row(&ints(&e, &[0, 1]), AggFn::WhichMin, 2).is_err());
    assert!(x.inner_prod(&x.t(), BinaryFn::Mul, AggFn::WhichMax).is_err());
    let neg = x.groupby_row(&ints(&e, &[0, -1]), AggFn::Sum, 2).unwrap();
    assert!(neg.to_local().is_err());
    let big = x.groupby_row(&ints(&e, &[0, 2]), AggFn::Sum, 2).unwrap();
    assert!(big.to_local().is_err());
    let fl = x.groupby_row(&x, AggFn::Sum, 2);
    assert!(fl.is_err() || fl.unwrap().to_local().is_err());
}

#[test]
fn shape_errors_surface_at_lift() {
    let e = engine_with(1, 8, 1024);
    let a = e.constant(1.0, 4, 3).unwrap();
    let b = e.constant(1.0, 4, 2).unwrap();
    let before = e.io().snapshot();
    assert!(a.add(&b).is_err());
    assert!(a.matmul(&b).is_err());
    assert!(a.mapply_row(&e.constant(1.0, 2, 1).unwrap(), BinaryFn::Add).is_err());
    assert!(a.mapply_col(&e.constant(1.0, 3, 1).unwrap(), BinaryFn::Add).is_err());
    assert_eq!(e.io().snapshot(), before);
}

#[test]
fn integer_overflow_wraps() {
    let e = engine_with(1, 8, 1024);
    let m = e.from_local(&DenseMatrix::column_i64(vec![i64::MAX, i64::MIN])).unwrap();
    let d = m.add_scalar(1i64).unwrap().to_local().unwrap();
    assert_eq!(d.to_i64_vec(), vec![i64::MIN, i64::MIN + 1]);
    assert_eq!(m.sum().unwrap().scalar().unwrap().as_i64(), -1);
}

#[test]
fn division_by_zero_is_ieee() {
    let e = engine_with(1, 8, 1024);
    let m = e.from_local(&DenseMatrix::column_f64(vec![1.0, -1.0, 0.0])).unwrap();
    let d = m.div_scalar(0.0).unwrap().to_local().unwrap().to_f64_vec();
    assert_eq!(d[0], f64::INFINITY);
    assert_eq!(d[1], f64::NEG_INFINITY);
    assert!(d[2].is_nan());
}

#[test]
fn aggregate_identities_hold() {
    for g in AggFn::ALL.into_iter().filter(|g| !g.index_aware()) {
        for x in [-3.5, 0.0, 2.0, 1e300] {
            assert_eq!(g.combine_f64(x, g.identity_f64()), if matches!(g, AggFn::All | AggFn::Any) {
                (x != 0.0) as u8 as f64
            } else {
                x
            });
        }
        for x in [-7i64, 0, 1, 99] {
            let want = if matches!(g, AggFn::All | AggFn::Any) { (x != 0) as i64 } else { x };
            assert_eq!(g.combine_i64(x, g.identity_i64(ElemType::I64)), want);
        }
    }
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn output_shape_law(c in prop::sample::select(GenOpKind::ALL.to_vec()).prop_flat_map(case)) {
        let (n, p, other, k) = match &c.op {
            OpCase::InnerProd { a, b, .. } => (a.n, a.p, (b.n, b.p), 0),
            OpCase::Groupby { a, k, .. } | OpCase::GroupbyRow { a, k, .. } | OpCase::GroupbyCol { a, k, .. } => {
                (a.n, a.p, (0, 0), *k)
            }
            OpCase::Sapply { a, .. }
            | OpCase::Agg { a, .. }
            | OpCase::AggRow { a, .. }
            | OpCase::AggCol { a, .. }
            | OpCase::Mapply { a, .. }
            | OpCase::MapplyRow { a, .. }
            | OpCase::MapplyCol { a, .. } => (a.n, a.p, (0, 0), 0),
        };
        if let Ok(got) = run_engine(&c) {
            prop_assert_eq!(c.op.kind().output_shape(n, p, other, k), got.shape());
        }
    }

    #[test]
    fn transpose_duality(a in any_mat(40, 12), g in agg_fn(), f in binary_fn(), tb in elem_type()) {
        let e = engine_with(2, 8, 512);
        let m = a.lift(&e, false);
        let mt = a.transpose().lift(&e, false);
        let r1 = m.agg_row(g).and_then(|x| x.to_local());
        // The view shares m's store and fold order, so it must match bitwise.
        // The physical transpose splits each fold at partition boundaries,
        // which regroups float sums and products.
        match (&r1, m.t().agg_col(g).and_then(|x| x.to_local())) {
            (Ok(x), Ok(y)) => prop_assert_eq!(bits(x), bits(&y)),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
        match (&r1, mt.agg_col(g).and_then(|x| x.to_local())) {
            (Ok(x), Ok(y)) if x.elem_type() == ElemType::F64 => {
                prop_assert_eq!(x.shape(), y.shape());
                let scale = reference(&OpCase::AggRow { a: a.clone(), g }).unwrap().scale;
                let (xv, yv) = (x.to_f64_vec(), y.to_f64_vec());
                for i in 0..xv.len() {
                    prop_assert!(f64_close(xv[i], yv[i], scale[i]), "row {}: {} vs {}", i, xv[i], yv[i]);
                }
            }
            (Ok(x), Ok(y)) => prop_assert_eq!(bits(x), bits(&y)),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
        let v = Mat { n: a.p, p: 1, ty: tb, v: (0..a.p).map(|j| store(tb, V::F(j as f64 - 2.0))).collect() };
        let vm = e.from_local(&v.to_dense()).unwrap();
        let x = m.mapply_row(&vm, f).unwrap().to_local().unwrap();
        let y = mt.mapply_col(&vm, f).unwrap().t().to_local().unwrap();
        prop_assert_eq!(bits(&x), bits(&y));
    }

    #[test]
    fn reductions_identical_across_workers(a in any_mat(64, 8), g in value_agg_fn(), labels in labels(64, 3, 1)) {
        let mut seen = None;
        for workers in [1, 2, 5] {
            let e = engine_with(workers, 8, 128);
            let m = a.lift(&e, false);
            let lab = Mat { n: a.n, p: 1, ty: ElemType::I64, v: labels.v[..a.n].to_vec() };
            let l = e.from_local(&lab.to_dense()).unwrap();
            let outs = [
                m.agg(g).unwrap().to_local().unwrap(),
                m.agg_col(g).unwrap().to_local().unwrap(),
                m.groupby_row(&l, g, 3).unwrap().to_local().unwrap(),
                m.t().inner_prod(&m, BinaryFn::Mul, g).unwrap().to_local().unwrap(),
            ];
            let b: Vec<_> = outs.iter().map(bits).collect();
            match &seen {
                None => seen = Some(b),
                Some(s) => prop_assert_eq!(s, &b),
            }
        }
    }
}
