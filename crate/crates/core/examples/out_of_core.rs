//! A file-backed matrix far larger than the chunk-pool budget is streamed
//! partition by partition.

use oocmat::{BackingKind, Engine, EngineConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    run(2_000_000)
}

pub fn run(n: usize) -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let e = Engine::new(EngineConfig {
        backing: BackingKind::File,
        tmpdir: dir.path().to_path_buf(),
        memory_budget: 64 << 20,
        chunk_bytes: 4 << 20,
        io_batch_bytes: 8 << 20,
        part_rows: 1 << 15,
        ..EngineConfig::default()
    })?;
    let x = e.rnorm_matrix(n, 16, 7)?.materialize()?;
    let store = x.store().expect("materialized");
    println!("{} rows in {} partitions, {} MiB on disk", n, store.num_partitions(), store.data_bytes() >> 20);

    e.pool().reset_high_water();
    let means = x.col_means()?.to_vec_f64()?;
    let gram = x.crossprod(&x)?.to_local()?;
    let stats = e.pool_stats();
    println!("column means[0..4] = {:?}", &means[..4]);
    println!("gram[0][0] / n = {:.4}", gram.get_f64(0, 0) / n as f64);
    println!("pool peak {} MiB of a {} MiB budget", stats.high_water_bytes >> 20, stats.budget >> 20);
    if let Some(run) = e.last_run() {
        println!("last run: {} partitions, {} tasks, per worker {:?}", run.partitions, run.tasks, run.per_worker);
    }
    Ok(())
}

/// `cargo run --release --example out_of_core -- 20000000` for a larger run.
#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    match std::env::args().nth(1) {
        Some(n) => run(n.parse()?),
        None => run_example(),
    }
}
