//! Operations build a DAG; nothing runs until a result is needed, and then
//! every sink of the DAG is computed in one pass over the input.

use oocmat::{BackingKind, Engine, EngineConfig, Matrix};

fn summaries(x: &Matrix) -> oocmat::Result<Vec<Matrix>> {
    Ok(vec![
        x.col_sums()?,
        x.crossprod(x)?,
        x.square()?.row_sums()?.sqrt()?.max_all()?,
    ])
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let e = Engine::new(EngineConfig {
        backing: BackingKind::File,
        tmpdir: dir.path().to_path_buf(),
        part_rows: 1 << 12,
        ..EngineConfig::default()
    })?;
    let x = e.runif_matrix(100_000, 8, 1)?.materialize()?;
    let size = x.store().expect("materialized").data_bytes();

    let outs = summaries(&x)?;
    println!("{}", Matrix::dump_all(&outs));
    let before = e.io().snapshot();
    for m in &outs {
        m.to_local()?;
    }
    let fused = e.io().snapshot().since(&before);
    println!("X is {size} bytes; fused: read {} written {}", fused.bytes_read, fused.bytes_written);

    e.set_fused(false);
    let before = e.io().snapshot();
    for m in summaries(&x)? {
        m.to_local()?;
    }
    let unfused = e.io().snapshot().since(&before);
    println!("unfused: read {} written {}", unfused.bytes_read, unfused.bytes_written);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
