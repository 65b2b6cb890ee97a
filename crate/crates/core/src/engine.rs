//! Engine session: configuration, chunk pool, I/O counters and the registry
//! of pending sinks.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, Weak};

use crate::dag::{CacheWhere, Matrix, Node};
use crate::error::{Error, Result};
use crate::exec::RunStats;
use crate::storage::{
    Backing, ChunkPool, DenseMatrix, ElemType, IoStats, MatrixMeta, Orientation, PoolStats, TasStore,
};

pub const MIB: usize = 1 << 20;

/// Engine settings. Every field has a default; see [`EngineConfig::default`].
#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Worker threads for materialization.
    pub workers: usize,
    /// Upper bound on bytes held by the chunk pool.
    pub memory_budget: usize,
    /// Size of one pool chunk.
    pub chunk_bytes: usize,
    /// Target byte size of a Pcache slice of the widest node.
    pub cache_budget: usize,
    /// Target bytes per scheduler task; converted to a partition count.
    pub io_batch_bytes: usize,
    /// Rows per I/O partition for stores the engine creates.
    pub part_rows: usize,
    /// Where materialized non-sink results live unless a cache flag says otherwise.
    pub backing: BackingKind,
    /// Directory for temporary files.
    pub tmpdir: PathBuf,
    /// When false every lifted operation is materialized immediately.
    pub fused: bool,
    /// Largest matrix `to_local` will return.
    pub local_cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackingKind {
    Memory,
    File,
}

impl BackingKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "memory" | "mem" => Ok(BackingKind::Memory),
            "file" => Ok(BackingKind::File),
            other => Err(Error::invalid(format!("unknown backing {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BackingKind::Memory => "memory",
            BackingKind::File => "file",
        }
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            memory_budget: 4096 * MIB,
            chunk_bytes: 64 * MIB,
            cache_budget: 256 * 1024,
            io_batch_bytes: 64 * MIB,
            part_rows: 1 << 16,
            backing: BackingKind::Memory,
            tmpdir: std::env::temp_dir(),
            fused: true,
            local_cap: 1 << 30,
        }
    }
}

pub(crate) struct EngineInner {
    pub config: EngineConfig,
    pub pool: ChunkPool,
    pub io: Arc<IoStats>,
    pending: Mutex<Vec<Weak<Node>>>,
    fused: AtomicBool,
    next_node: AtomicU64,
    next_temp: AtomicU64,
    last_run: Mutex<Option<RunStats>>,
    exec_lock: Mutex<()>,
}

/// A cheap, cloneable handle to an engine session.
#[derive(Clone)]
pub struct Engine {
    pub(crate) inner: Arc<EngineInner>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("config", &self.inner.config).finish()
    }
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Engine> {
        if config.workers == 0 {
            return Err(Error::invalid("workers must be at least 1"));
        }
        if !config.part_rows.is_power_of_two() {
            return Err(Error::PartRows(config.part_rows));
        }
        let pool = ChunkPool::new(config.chunk_bytes, config.memory_budget)?;
        let fused = config.fused;
        Ok(Engine {
            inner: Arc::new(EngineInner {
                config,
                pool,
                io: Arc::new(IoStats::new()),
                pending: Mutex::new(Vec::new()),
                fused: AtomicBool::new(fused),
                next_node: AtomicU64::new(1),
                next_temp: AtomicU64::new(0),
                last_run: Mutex::new(None),
                exec_lock: Mutex::new(()),
            }),
        })
    }

    /// An engine with default settings.
    pub fn with_defaults() -> Engine {
        Engine::new(EngineConfig::default()).expect("default configuration is valid")
    }

    pub fn config(&self) -> &EngineConfig {
        &self.inner.config
    }

    pub fn io(&self) -> &Arc<IoStats> {
        &self.inner.io
    }

    pub fn pool(&self) -> &ChunkPool {
        &self.inner.pool
    }

    pub fn pool_stats(&self) -> PoolStats {
        self.inner.pool.stats()
    }

    /// Switches between fused (lazy) and unfused (materialize per op) mode.
    pub fn set_fused(&self, fused: bool) {
        self.inner.fused.store(fused, Ordering::SeqCst);
    }

    pub fn is_fused(&self) -> bool {
        self.inner.fused.load(Ordering::SeqCst)
    }

    /// Statistics of the most recent DAG execution.
    pub fn last_run(&self) -> Option<RunStats> {
        self.inner.last_run.lock().unwrap().clone()
    }

    pub(crate) fn set_last_run(&self, stats: RunStats) {
        *self.inner.last_run.lock().unwrap() = Some(stats);
    }

    pub(crate) fn exec_lock(&self) -> std::sync::MutexGuard<'_, ()> {
        self.inner.exec_lock.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub(crate) fn next_node_id(&self) -> u64 {
        self.inner.next_node.fetch_add(1, Ordering::Relaxed)
    }

    /// Registers a node that should be computed with any DAG it can join.
    pub(crate) fn register_pending(&self, node: &Arc<Node>) {
        let mut p = self.inner.pending.lock().unwrap();
        p.retain(|w| w.strong_count() > 0);
        p.push(Arc::downgrade(node));
    }

    pub(crate) fn pending(&self) -> Vec<Arc<Node>> {
        let mut p = self.inner.pending.lock().unwrap();
        p.retain(|w| w.upgrade().is_some_and(|n| !n.is_done()));
        p.iter().filter_map(|w| w.upgrade()).collect()
    }

    pub(crate) fn temp_path(&self, tag: &str) -> PathBuf {
        let n = self.inner.next_temp.fetch_add(1, Ordering::Relaxed);
        self.inner.config.tmpdir.join(format!(
            "oocmat-{}-{:x}-{}-{}.flmx",
            std::process::id(),
            Arc::as_ptr(&self.inner) as usize,
            tag,
            n
        ))
    }

    pub(crate) fn backing_for(&self, kind: BackingKind, tag: &str) -> Backing {
        match kind {
            BackingKind::Memory => Backing::Memory,
            BackingKind::File => Backing::File(self.temp_path(tag)),
        }
    }

    /// Creates an empty store owned by the engine. File stores are temporary.
    pub(crate) fn create_store(
        &self,
        meta: MatrixMeta,
        part_rows: usize,
        kind: BackingKind,
        tag: &str,
    ) -> Result<TasStore> {
        let backing = self.backing_for(kind, tag);
        let mut store = TasStore::create(meta, part_rows, &backing, &self.inner.pool, &self.inner.io)?;
        store.set_temporary(true);
        Ok(store)
    }

    /// Copies a caller array into an in-memory store.
    pub fn from_local(&self, m: &DenseMatrix) -> Result<Matrix> {
        let store = self.store_from_local(m, BackingKind::Memory)?;
        Ok(Matrix::physical(self, Arc::new(store), false))
    }

    /// Copies a caller array into a store of the given backing.
    pub fn from_local_backed(&self, m: &DenseMatrix, kind: BackingKind) -> Result<Matrix> {
        let store = self.store_from_local(m, kind)?;
        Ok(Matrix::physical(self, Arc::new(store), false))
    }

    pub(crate) fn store_from_local(&self, m: &DenseMatrix, kind: BackingKind) -> Result<TasStore> {
        let meta = MatrixMeta::tall(m.nrow(), m.ncol(), m.elem_type());
        let part_rows = self.inner.config.part_rows;
        let store = self.create_store(meta, part_rows, kind, "local")?;
        let esz = m.elem_type().size();
        let src = m.data().as_bytes();
        for p in 0..store.num_partitions() {
            let rows = store.partition_rows(p);
            let r0 = p * part_rows;
            let mut buf = self.inner.pool.alloc(rows * m.ncol() * esz)?;
            let dst = buf.bytes_mut();
            for c in 0..m.ncol() {
                for r in 0..rows {
                    let s = ((r0 + r) * m.ncol() + c) * esz;
                    let d = (c * rows + r) * esz;
                    dst[d..d + esz].copy_from_slice(&src[s..s + esz]);
                }
            }
            store.put_partition(p, buf)?;
        }
        Ok(store)
    }

    /// Opens a native dense file without reading its elements.
    pub fn load_native(&self, path: &Path) -> Result<Matrix> {
        let (store, orientation) = TasStore::open(path, &self.inner.pool, &self.inner.io)?;
        Ok(Matrix::physical(self, Arc::new(store), orientation == Orientation::Wide))
    }

    /// Opens a native file; with `Memory` backing its partitions are copied
    /// into the pool so later passes do no file I/O.
    pub fn load_native_backed(&self, path: &Path, kind: BackingKind) -> Result<Matrix> {
        let (file, orientation) = TasStore::open(path, &self.inner.pool, &self.inner.io)?;
        let wide = orientation == Orientation::Wide;
        if kind == BackingKind::File {
            return Ok(Matrix::physical(self, Arc::new(file), wide));
        }
        let mem = TasStore::create(*file.meta(), file.part_rows(), &Backing::Memory, &self.inner.pool, &self.inner.io)?;
        for p in 0..file.num_partitions() {
            let view = file.read_partitions(p, 1)?;
            let src = view.partition(0);
            let mut buf = self.inner.pool.alloc(src.len())?;
            buf.bytes_mut().copy_from_slice(src);
            mem.put_partition(p, buf)?;
        }
        Ok(Matrix::physical(self, Arc::new(mem), wide))
    }

    /// Parses delimited text into an in-memory matrix.
    pub fn load_dense_text(&self, path: &Path, delimiter: char, elem_type: ElemType) -> Result<Matrix> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m = crate::storage::parse_dense_text(&text, delimiter, elem_type)?;
        self.from_local(&m)
    }

    /// Materializes a matrix into a cache flagged store; see [`Matrix::set_cache`].
    pub(crate) fn cache_kind(where_: CacheWhere) -> BackingKind {
        match where_ {
            CacheWhere::Memory => BackingKind::Memory,
            CacheWhere::File => BackingKind::File,
        }
    }
}
