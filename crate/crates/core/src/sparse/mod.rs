//! Sparse matrices: in-memory COO for small data and a file-resident,
//! row-partitioned CSR graph with semi-external multiply.

mod coo;
mod csr;

use std::path::Path;

pub use coo::CooMatrix;
pub use csr::{CsrGraph, CsrPart, HEADER_LEN};

use crate::engine::Engine;
use crate::error::{Error, Result};

/// Parses a `src dst [weight]` edge list. Blank lines and lines starting
/// with `#` are skipped. Without `n` the vertex count is the largest index
/// plus one. The graph is weighted iff some line carries a weight; missing
/// weights default to 1.
pub fn parse_edges(text: &str, n: Option<usize>) -> Result<(usize, Vec<(usize, usize, f64)>, bool)> {
    let mut edges = Vec::new();
    let mut weighted = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|f| !f.is_empty()).collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::EdgeList {
                line: line_no,
                msg: format!("expected `src dst [weight]`, found {} fields", fields.len()),
            });
        }
        let vertex = |f: &str| {
            f.parse::<u64>().map_err(|_| Error::EdgeList {
                line: line_no,
                msg: format!("bad vertex {f:?}"),
            })
        };
        let (s, d) = (vertex(fields[0])?, vertex(fields[1])?);
        if let Some(n) = n {
            if s.max(d) >= n as u64 {
                return Err(Error::VertexRange {
                    index: s.max(d),
                    n: n as u64,
                });
            }
        }
        let w = match fields.get(2) {
            Some(f) => {
                weighted = true;
                f.parse::<f64>().map_err(|_| Error::EdgeList {
                    line: line_no,
                    msg: format!("bad weight {f:?}"),
                })?
            }
            None => 1.0,
        };
        edges.push((s as usize, d as usize, w));
    }
    let n = match n {
        Some(n) => n,
        None => edges.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0),
    };
    Ok((n, edges, weighted))
}

/// Loads an edge-list file into a temporary CSR graph. Returns the graph and
/// the number of duplicate edges dropped (each keeps its first weight).
pub fn load_sparse_edges(engine: &Engine, path: &Path, n: Option<usize>) -> Result<(CsrGraph, usize)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (n, edges, weighted) = parse_edges(&text, n)?;
    let (g, dups) = CsrGraph::from_triples(engine, n, edges, weighted)?;
    if dups > 0 {
        log::warn!("{}: dropped {dups} duplicate edges", path.display());
    }
    Ok((g, dups))
}
