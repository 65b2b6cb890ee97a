//! Native and text formats, transpose views, block splitting, chunk
//! accounting and I/O metering through the public engine API.

mod common;

use std::fs;

use common::*;
use oocmat::storage::native::NativeHeader;
use oocmat::storage::{parse_dense_text, DenseMatrix, ElemType, Layout};
use oocmat::{BackingKind, Engine, EngineConfig, Error, Matrix};
use proptest::prelude::*;

fn engine(dir: &std::path::Path, part_rows: usize) -> Engine {
    file_engine(dir, 2, part_rows)
}

#[test]
fn native_round_trip_1000x8() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(dir.path(), 64);
    let x = e.runif_matrix(1000, 8, 7).unwrap();
    let path = dir.path().join("x.flmx");
    x.save_native(&path).unwrap();
    let y = e.load_native(&path).unwrap();
    assert_eq!(y.meta(), x.meta());
    assert_eq!(bits(&y.to_local().unwrap()), bits(&x.to_local().unwrap()));
    assert_eq!(fs::metadata(&path).unwrap().len() as usize, 36 + 1000 * 8 * 8);
}

#[test]
fn wide_round_trip_keeps_orientation() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(dir.path(), 16);
    let x = e.runif_matrix(50, 3, 1).unwrap().materialize().unwrap();
    let w = x.t();
    let path = dir.path().join("w.flmx");
    w.save_native(&path).unwrap();
    let back = e.load_native(&path).unwrap();
    assert_eq!(back.shape(), (3, 50));
    assert!(back.is_transposed());
    assert_eq!(back.to_local().unwrap(), w.to_local().unwrap());
}

#[test]
fn corrupt_magic_and_truncation_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(dir.path(), 32);
    let x = e.runif_matrix(100, 4, 3).unwrap();
    let path = dir.path().join("x.flmx");
    x.save_native(&path).unwrap();
    let good = fs::read(&path).unwrap();

    let mut bad = good.clone();
    bad[0] = b'X';
    fs::write(&path, &bad).unwrap();
    assert!(matches!(e.load_native(&path), Err(Error::BadMagic { .. })));

    let mut ver = good.clone();
    ver[4] = 9;
    fs::write(&path, &ver).unwrap();
    assert!(matches!(e.load_native(&path), Err(Error::Version(9))));

    fs::write(&path, &good[..good.len() - 8]).unwrap();
    let err = e.load_native(&path).and_then(|m| m.to_local());
    match err {
        Err(err) => assert!(matches!(err.root_cause(), Error::Truncated { partition: 3 }), "{err}"),
        Ok(_) => panic!("truncated file loaded"),
    }
}

#[test]
fn header_is_bit_exact() {
    let h = NativeHeader {
        elem_type: ElemType::I32,
        layout: Layout::RowMajor,
        orientation: oocmat::storage::Orientation::Wide,
        nrow: 5,
        ncol: 2,
        part_rows: 4,
    };
    let b = h.encode();
    assert_eq!(&b[..4], b"FLMX");
    assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
    assert_eq!(&b[8..12], &[2, 1, 1, 0]);
    assert_eq!(u64::from_le_bytes(b[12..20].try_into().unwrap()), 5);
    assert_eq!(u64::from_le_bytes(b[20..28].try_into().unwrap()), 2);
    assert_eq!(u64::from_le_bytes(b[28..36].try_into().unwrap()), 4);
    assert_eq!(NativeHeader::decode(&b).unwrap(), h);
}

#[test]
fn text_loading() {
    let m = parse_dense_text("1,2\n3,4", ',', ElemType::F64).unwrap();
    assert_eq!(m.to_f64_vec(), vec![1.0, 2.0, 3.0, 4.0]);
    assert!(matches!(
        parse_dense_text("1,2\n3", ',', ElemType::F64),
        Err(Error::Ragged { row: 1, .. })
    ));
    assert_eq!(parse_dense_text("1e3", ',', ElemType::F64).unwrap().to_f64_vec(), vec![1000.0]);
    assert!(matches!(parse_dense_text("1,x", ',', ElemType::F64), Err(Error::Parse { .. })));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    fs::write(&path, "1,2,3\n4,5,6\n").unwrap();
    let e = engine(dir.path(), 8);
    let m = e.load_dense_text(&path, ',', ElemType::I64).unwrap();
    assert_eq!(m.shape(), (2, 3));
    assert_eq!(m.to_local().unwrap().to_i64_vec(), vec![1, 2, 3, 4, 5, 6]);
}

#[test]
fn transpose_view_is_free_and_involutive() {
    let e = engine_with(1, 16, 1024);
    let x = e.runif_matrix(100, 4, 5).unwrap().materialize().unwrap();
    let before = e.io().snapshot();
    let t = x.t();
    assert_eq!(t.shape(), (4, 100));
    assert!(t.is_transposed());
    let tt = t.t();
    assert!(tt.same_as(&x));
    assert_eq!(tt.meta(), x.meta());
    assert_eq!(e.io().snapshot(), before);
    let a = x.to_local().unwrap();
    let b = t.to_local().unwrap();
    for i in 0..100 {
        for j in 0..4 {
            assert_eq!(a.get_f64(i, j), b.get_f64(j, i));
        }
    }
}

#[test]
fn block_split_widths() {
    let e = engine_with(1, 64, 4096);
    for (p, want) in [(32, vec![32]), (40, vec![32, 8]), (70, vec![32, 32, 6])] {
        let m = e.runif_matrix(10, p, 1).unwrap();
        let b = m.as_blocks().unwrap();
        assert_eq!(b.block_widths(), want);
        assert_eq!(b.locate(p - 1), ((p - 1) / 32, (p - 1) % 32));
        let back = b.to_matrix().unwrap().to_local().unwrap();
        assert_eq!(back, m.to_local().unwrap());
    }
}

#[test]
fn streaming_a_file_reads_it_once() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(dir.path(), 32);
    let path = dir.path().join("x.flmx");
    e.runif_matrix(100, 4, 9).unwrap().save_native(&path).unwrap();
    let x = e.load_native(&path).unwrap();
    let id = x.store().unwrap().id();
    x.col_sums().unwrap().to_local().unwrap();
    assert_eq!(e.io().store(id).bytes_read, 3200);
    x.row_sums().unwrap().to_local().unwrap();
    assert_eq!(e.io().store(id).bytes_read, 6400);
}

#[test]
fn chunks_return_to_pool_when_handles_drop() {
    let e = Engine::new(EngineConfig {
        workers: 3,
        part_rows: 256,
        chunk_bytes: 1 << 20,
        memory_budget: 64 << 20,
        ..EngineConfig::default()
    })
    .unwrap();
    {
        let x = e.rnorm_matrix(5000, 6, 1).unwrap();
        let y = x.abs().unwrap().materialize().unwrap();
        let s = y.crossprod(&x).unwrap();
        s.to_local().unwrap();
        let z = Matrix::rbind(&[y.clone(), x.clone()]).unwrap();
        z.col_sums().unwrap().to_local().unwrap();
        assert!(e.pool_stats().live_chunks > 0);
    }
    assert_eq!(e.pool_stats().live_chunks, 0);
}

#[test]
fn memory_budget_is_an_error() {
    let e = Engine::new(EngineConfig {
        workers: 1,
        part_rows: 1024,
        chunk_bytes: 1 << 20,
        memory_budget: 2 << 20,
        ..EngineConfig::default()
    })
    .unwrap();
    let x = e.runif_matrix(100_000, 8, 1).unwrap();
    let err = x.materialize().unwrap_err();
    assert_eq!(err.category(), "memory");
}

#[test]
fn non_power_of_two_part_rows_rejected() {
    let r = Engine::new(EngineConfig {
        part_rows: 1000,
        ..EngineConfig::default()
    });
    assert!(matches!(r, Err(Error::PartRows(1000))));
}

#[test]
fn file_backed_stores_need_no_pool_memory() {
    let dir = tempfile::tempdir().unwrap();
    let e = engine(dir.path(), 128);
    let x = e.from_local_backed(&DenseMatrix::from_f64(300, 2, vec![1.5; 600]).unwrap(), BackingKind::File).unwrap();
    assert_eq!(x.retained_bytes(), 0);
    assert_eq!(x.sum().unwrap().value().unwrap(), 900.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn native_round_trip_any_type(a in any_mat(80, 6), part_rows in prop::sample::select(vec![8usize, 32, 128]), wide in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let e = engine(dir.path(), part_rows);
        let m = a.lift(&e, wide);
        let path = dir.path().join("m.flmx");
        m.save_native(&path).unwrap();
        let back = e.load_native(&path).unwrap();
        prop_assert_eq!(back.meta(), m.meta());
        prop_assert_eq!(bits(&back.to_local().unwrap()), bits(&a.to_dense()));
    }

    #[test]
    fn partition_rows_sum_to_nrow(n in 1usize..5000, shift in 0u32..10) {
        let dir = tempfile::tempdir().unwrap();
        let part_rows = 1usize << shift;
        let e = engine(dir.path(), part_rows);
        let m = e.constant(1i64, n, 1).unwrap().materialize().unwrap();
        let s = m.store().unwrap();
        prop_assert_eq!(s.num_partitions(), n.div_ceil(part_rows));
        let total: usize = (0..s.num_partitions()).map(|p| s.partition_rows(p)).sum();
        prop_assert_eq!(total, n);
    }
}
