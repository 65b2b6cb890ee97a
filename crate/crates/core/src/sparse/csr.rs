use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::CooMatrix;
use crate::dag::Matrix;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::exec::Scheduler;
use crate::storage::{next_store_id, DenseMatrix, ElemType, StoreId};

const MAGIC: [u8; 4] = *b"FLSX";
const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 33;

#[derive(Clone, Copy, Debug)]
struct PartIndex {
    offset: u64,
    nnz: usize,
}

/// One decoded partition: offsets are relative to the partition start.
#[derive(Debug)]
pub struct CsrPart {
    pub row0: usize,
    pub offsets: Vec<u64>,
    pub cols: Vec<u64>,
    pub vals: Option<Vec<f64>>,
}

impl CsrPart {
    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    fn row(&self, r: usize) -> std::ops::Range<usize> {
        self.offsets[r] as usize..self.offsets[r + 1] as usize
    }

    fn value(&self, e: usize) -> f64 {
        self.vals.as_ref().map_or(1.0, |v| v[e])
    }
}

/// Square sparse matrix in row-partitioned CSR form, kept in a file and
/// streamed one partition at a time.
#[derive(Debug)]
pub struct CsrGraph {
    engine: Engine,
    n: usize,
    nnz: usize,
    part_rows: usize,
    weighted: bool,
    path: PathBuf,
    temporary: bool,
    parts: Vec<PartIndex>,
    id: StoreId,
}

impl CsrGraph {
    /// Unweighted graph from an edge list; see [`CsrGraph::from_weighted_edges`].
    pub fn from_edges(engine: &Engine, n: usize, edges: &[(usize, usize)]) -> Result<(CsrGraph, usize)> {
        let triples: Vec<_> = edges.iter().map(|&(s, d)| (s, d, 1.0)).collect();
        build(engine, n, triples, false)
    }

    /// Builds a temporary graph file. Edges are sorted by `(src, dst)`; a
    /// repeated edge keeps its first weight. Returns the graph and the
    /// number of dropped duplicates.
    pub fn from_weighted_edges(
        engine: &Engine,
        n: usize,
        edges: &[(usize, usize, f64)],
    ) -> Result<(CsrGraph, usize)> {
        build(engine, n, edges.to_vec(), true)
    }

    pub(crate) fn from_triples(
        engine: &Engine,
        n: usize,
        triples: Vec<(usize, usize, f64)>,
        weighted: bool,
    ) -> Result<(CsrGraph, usize)> {
        build(engine, n, triples, weighted)
    }

    /// Opens an existing sparse file. Reading the partition index is metered.
    pub fn open(engine: &Engine, path: &Path) -> Result<CsrGraph> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let mut head = [0u8; HEADER_LEN];
        if len < HEADER_LEN as u64 {
            return Err(Error::Header(format!("{} bytes is shorter than the header", len)));
        }
        file.read_exact_at(&mut head, 0).map_err(|e| Error::io(path, e))?;
        let magic: [u8; 4] = head[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic {
                expected: MAGIC,
                found: magic,
            });
        }
        let u64_at = |o: usize| u64::from_le_bytes(head[o..o + 8].try_into().unwrap());
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Version(version));
        }
        let n = u64_at(8) as usize;
        let nnz = u64_at(16) as usize;
        let part_rows = u64_at(24) as usize;
        let weighted = match head[32] {
            0 => false,
            1 => true,
            f => return Err(Error::Header(format!("bad value flag {f}"))),
        };
        if !part_rows.is_power_of_two() {
            return Err(Error::PartRows(part_rows));
        }
        let id = next_store_id();
        let nparts = n.div_ceil(part_rows);
        let mut parts = Vec::with_capacity(nparts);
        let mut offset = HEADER_LEN as u64;
        let mut total = 0usize;
        for p in 0..nparts {
            let rows = part_rows.min(n - p * part_rows);
            let mut buf = vec![0u8; (rows + 1) * 8];
            file.read_exact_at(&mut buf, offset)
                .map_err(|_| Error::Truncated { partition: p })?;
            engine.io().record_read(id, buf.len() as u64);
            let offs: Vec<u64> = buf
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if offs[0] != 0 || offs.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Header(format!("partition {p} has decreasing row offsets")));
            }
            let pn = offs[rows] as usize;
            parts.push(PartIndex { offset, nnz: pn });
            total += pn;
            offset += part_bytes(rows, pn, weighted) as u64;
        }
        if total != nnz {
            return Err(Error::Header(format!("partitions hold {total} entries, header says {nnz}")));
        }
        if offset != len {
            return Err(Error::Truncated {
                partition: nparts.saturating_sub(1),
            });
        }
        Ok(CsrGraph {
            engine: engine.clone(),
            n,
            nnz,
            part_rows,
            weighted,
            path: path.to_path_buf(),
            temporary: false,
            parts,
            id,
        })
    }

    /// Copies the graph file to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::copy(&self.path, path).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn part_rows(&self) -> usize {
        self.part_rows
    }

    pub fn num_partitions(&self) -> usize {
        self.parts.len()
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Id under which reads of this file are counted in the engine's `IoStats`.
    pub fn id(&self) -> StoreId {
        self.id
    }

    pub fn file_bytes(&self) -> u64 {
        self.data_bytes() + HEADER_LEN as u64
    }

    /// Bytes of all partitions, i.e. what one full stream reads.
    pub fn data_bytes(&self) -> u64 {
        (0..self.parts.len()).map(|p| self.partition_bytes(p) as u64).sum()
    }

    fn partition_rows(&self, p: usize) -> usize {
        self.part_rows.min(self.n - p * self.part_rows)
    }

    fn partition_bytes(&self, p: usize) -> usize {
        part_bytes(self.partition_rows(p), self.parts[p].nnz, self.weighted)
    }

    /// Reads partition `p` with a single positioned read.
    pub fn read_partition(&self, p: usize) -> Result<CsrPart> {
        let idx = self.parts[p];
        let rows = self.partition_rows(p);
        let mut buf = vec![0u8; self.partition_bytes(p)];
        let file = File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        file.read_exact_at(&mut buf, idx.offset)
            .map_err(|e| Error::PartitionIo {
                partition: p,
                path: self.path.clone(),
                source: e,
            })?;
        self.engine.io().record_read(self.id, buf.len() as u64);
        let words = |a: usize, b: usize| -> Vec<u64> {
            buf[a..b]
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        };
        let o_end = (rows + 1) * 8;
        let c_end = o_end + idx.nnz * 8;
        let offsets = words(0, o_end);
        let cols = words(o_end, c_end);
        if let Some(&bad) = cols.iter().find(|&&c| c as usize >= self.n) {
            return Err(Error::VertexRange {
                index: bad,
                n: self.n as u64,
            });
        }
        let vals = self.weighted.then(|| {
            buf[c_end..]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        });
        Ok(CsrPart {
            row0: p * self.part_rows,
            offsets,
            cols,
            vals,
        })
    }

    /// Streams every partition through `f` on the engine's workers; each
    /// partition is read exactly once and handed to one worker.
    fn for_each_partition<F>(&self, f: F) -> Result<()>
    where
        F: Fn(usize, CsrPart) -> Result<()> + Sync,
    {
        let nparts = self.parts.len();
        let workers = self.engine.config().workers.min(nparts).max(1);
        let sched = Mutex::new(Scheduler::new(nparts, workers, 1));
        let failed: Mutex<Option<(usize, Error)>> = Mutex::new(None);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if failed.lock().unwrap().is_some() {
                        return;
                    }
                    let Some(task) = sched.lock().unwrap().next_task() else {
                        return;
                    };
                    for p in task.first..task.first + task.count {
                        if let Err(e) = self.read_partition(p).and_then(|part| f(p, part)) {
                            let mut slot = failed.lock().unwrap();
                            if slot.as_ref().is_none_or(|(q, _)| p < *q) {
                                *slot = Some((p, e));
                            }
                            return;
                        }
                    }
                });
            }
        });
        match failed.into_inner().unwrap() {
            Some((_, e)) => Err(e),
            None => Ok(()),
        }
    }

    /// `y = G·x` for an in-memory `n×k` dense `x`, keeping `G` on disk.
    /// Each row of `y` sums its entries in stored column order.
    pub fn spmv(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.nrow() != self.n {
            return Err(Error::Shape {
                op: "spmv",
                left: (self.n, self.n),
                right: x.shape(),
            });
        }
        let k = x.ncol();
        let need = 2 * self.n * k * 8;
        let budget = self.engine.config().memory_budget;
        if need > budget {
            return Err(Error::Budget {
                requested: need,
                allocated: 0,
                budget,
            });
        }
        let xv = x.to_f64_vec();
        let mut y = vec![0.0; self.n * k];
        let slots: Vec<Mutex<&mut [f64]>> = y.chunks_mut(self.part_rows * k.max(1)).map(Mutex::new).collect();
        self.for_each_partition(|p, part| {
            let mut out = slots[p].lock().unwrap();
            for r in 0..part.rows() {
                let dst = &mut out[r * k..(r + 1) * k];
                for e in part.row(r) {
                    let v = part.value(e);
                    let c = part.cols[e] as usize;
                    for (o, &xv) in dst.iter_mut().zip(&xv[c * k..(c + 1) * k]) {
                        *o += v * xv;
                    }
                }
            }
            Ok(())
        })?;
        drop(slots);
        DenseMatrix::from_f64(self.n, k, y)
    }

    /// Multiplies by an engine matrix, materializing `x` locally.
    pub fn matmul(&self, x: &Matrix) -> Result<Matrix> {
        let xl = x.cast(ElemType::F64)?.to_local()?;
        let y = self.spmv(&xl)?;
        self.engine.from_local(&y)
    }

    /// Number of stored entries per row, ignoring weights.
    pub fn out_degrees(&self) -> Result<Vec<f64>> {
        let mut deg = vec![0.0; self.n];
        let slots: Vec<Mutex<&mut [f64]>> = deg.chunks_mut(self.part_rows).map(Mutex::new).collect();
        self.for_each_partition(|p, part| {
            let mut out = slots[p].lock().unwrap();
            for r in 0..part.rows() {
                out[r] = part.row(r).len() as f64;
            }
            Ok(())
        })?;
        drop(slots);
        Ok(deg)
    }

    /// All entries as `(row, col, value)`, in row-major order.
    pub fn to_coo(&self) -> Result<CooMatrix> {
        let mut triples = Vec::with_capacity(self.nnz);
        for p in 0..self.parts.len() {
            let part = self.read_partition(p)?;
            for r in 0..part.rows() {
                for e in part.row(r) {
                    triples.push((part.row0 + r, part.cols[e] as usize, part.value(e)));
                }
            }
        }
        CooMatrix::new(self.n, self.n, triples)
    }

    /// Writes `t(G)` to a new temporary file. Entries of each transposed row
    /// come out sorted because source rows are scanned in order.
    pub fn transpose(&self) -> Result<CsrGraph> {
        let mut counts = vec![0usize; self.n + 1];
        let mut entries = Vec::with_capacity(self.nnz);
        for p in 0..self.parts.len() {
            let part = self.read_partition(p)?;
            for r in 0..part.rows() {
                for e in part.row(r) {
                    let c = part.cols[e] as usize;
                    counts[c + 1] += 1;
                    entries.push((c, part.row0 + r, part.value(e)));
                }
            }
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0u64; self.nnz];
        let mut vals = vec![0.0; self.nnz];
        for (c, r, v) in entries {
            cols[next[c]] = r as u64;
            vals[next[c]] = v;
            next[c] += 1;
        }
        let path = self.engine.temp_path("graph-t").with_extension("flsx");
        let vals = self.weighted.then_some(vals);
        write_file(&self.engine, &path, self.n, self.part_rows, &counts, &cols, vals.as_deref())?;
        let mut g = CsrGraph::open(&self.engine, &path)?;
        g.temporary = true;
        Ok(g)
    }
}

impl Drop for CsrGraph {
    fn drop(&mut self) {
        if self.temporary {
            let _ = fs::remove_file(&self.path);
        }
    }
}

fn part_bytes(rows: usize, nnz: usize, weighted: bool) -> usize {
    (rows + 1) * 8 + nnz * if weighted { 16 } else { 8 }
}

fn build(
    engine: &Engine,
    n: usize,
    mut triples: Vec<(usize, usize, f64)>,
    weighted: bool,
) -> Result<(CsrGraph, usize)> {
    if n == 0 {
        return Err(Error::invalid("a graph needs at least one vertex"));
    }
    for &(s, d, _) in &triples {
        if s.max(d) >= n {
            return Err(Error::VertexRange {
                index: s.max(d) as u64,
                n: n as u64,
            });
        }
    }
    triples.sort_by_key(|&(s, d, _)| (s, d));
    let before = triples.len();
    triples.dedup_by_key(|t| (t.0, t.1));
    let dups = before - triples.len();
    let mut offsets = vec![0usize; n + 1];
    for &(s, _, _) in &triples {
        offsets[s + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let cols: Vec<u64> = triples.iter().map(|t| t.1 as u64).collect();
    let vals: Option<Vec<f64>> = weighted.then(|| triples.iter().map(|t| t.2).collect());
    let path = engine.temp_path("graph").with_extension("flsx");
    let part_rows = engine.config().part_rows;
    write_file(engine, &path, n, part_rows, &offsets, &cols, vals.as_deref())?;
    let mut g = CsrGraph::open(engine, &path)?;
    g.temporary = true;
    Ok((g, dups))
}

fn write_file(
    engine: &Engine,
    path: &Path,
    n: usize,
    part_rows: usize,
    offsets: &[usize],
    cols: &[u64],
    vals: Option<&[f64]>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut head = Vec::with_capacity(HEADER_LEN);
    head.extend_from_slice(&MAGIC);
    head.extend_from_slice(&VERSION.to_le_bytes());
    head.extend_from_slice(&(n as u64).to_le_bytes());
    head.extend_from_slice(&(cols.len() as u64).to_le_bytes());
    head.extend_from_slice(&(part_rows as u64).to_le_bytes());
    head.push(vals.is_some() as u8);
    let io = |e| Error::io(path, e);
    w.write_all(&head).map_err(io)?;
    let mut written = head.len() as u64;
    for r0 in (0..n).step_by(part_rows) {
        let r1 = (r0 + part_rows).min(n);
        let (e0, e1) = (offsets[r0], offsets[r1]);
        for &o in &offsets[r0..=r1] {
            w.write_all(&((o - e0) as u64).to_le_bytes()).map_err(io)?;
        }
        for &c in &cols[e0..e1] {
            w.write_all(&c.to_le_bytes()).map_err(io)?;
        }
        if let Some(v) = vals {
            for &x in &v[e0..e1] {
                w.write_all(&x.to_le_bytes()).map_err(io)?;
            }
        }
        written += part_bytes(r1 - r0, e1 - e0, vals.is_some()) as u64;
    }
    w.flush().map_err(io)?;
    engine.io().record_write(next_store_id(), written);
    Ok(())
}
