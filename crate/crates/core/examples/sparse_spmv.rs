//! Semi-external sparse times dense: the graph stays on disk, the vector in
//! memory.

use oocmat::sparse::CsrGraph;
use oocmat::storage::DenseMatrix;
use oocmat::{datasets, BackingKind, Engine, EngineConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let e = Engine::new(EngineConfig {
        backing: BackingKind::File,
        tmpdir: dir.path().to_path_buf(),
        part_rows: 1 << 12,
        ..EngineConfig::default()
    })?;
    let n = 50_000;
    let (g, dups) = CsrGraph::from_edges(&e, n, &datasets::random_graph(n, 10, 3))?;
    println!("n {} nnz {} (dropped {dups} repeats), {} partitions", g.n(), g.nnz(), g.num_partitions());

    let before = e.io().store(g.id()).bytes_read;
    let y = g.spmv(&DenseMatrix::column_f64(vec![1.0; n]))?;
    println!("read {} of {} bytes", e.io().store(g.id()).bytes_read - before, g.file_bytes());
    let deg = g.out_degrees()?;
    let same = y.to_f64_vec() == deg;
    println!("G * ones equals the out-degrees: {same}");

    // Several right-hand sides share one scan of the graph.
    let x = e.runif_matrix(n, 4, 1)?;
    let z = g.matmul(&x)?;
    println!("G * X column sums {:?}", z.col_sums()?.to_vec_f64()?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
