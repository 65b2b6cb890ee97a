//! PageRank by power iteration over the transposed graph on disk.

use oocmat::sparse::CsrGraph;
use oocmat::{datasets, ml, BackingKind, Engine, EngineConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let e = Engine::new(EngineConfig {
        backing: BackingKind::File,
        tmpdir: dir.path().to_path_buf(),
        ..EngineConfig::default()
    })?;
    let n = 20_000;
    let (g, _) = CsrGraph::from_edges(&e, n, &datasets::random_graph(n, 8, 1))?;
    for d in [0.15, 0.85] {
        let s = ml::pagerank(&g, d, None, 100)?;
        let mut top: Vec<(usize, f64)> = s.pr.iter().copied().enumerate().collect();
        top.sort_by(|a, b| b.1.total_cmp(&a.1));
        println!("d={d}: {} iterations, converged {}, sum {:.6}", s.iterations, s.converged, s.pr.iter().sum::<f64>());
        println!("  top vertices {:?}", &top[..3]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
