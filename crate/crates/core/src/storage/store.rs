//! Tall-and-skinny stores split into power-of-two-row I/O partitions.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use super::native::{NativeHeader, HEADER_LEN};
use super::{ChunkPool, IoStats, MatrixMeta, Orientation, PoolBuf};
use crate::error::{Error, Result};

pub type StoreId = u64;

static NEXT_STORE_ID: AtomicU64 = AtomicU64::new(1);

/// A fresh id for I/O accounting, shared with non-dense files.
pub(crate) fn next_store_id() -> StoreId {
    NEXT_STORE_ID.fetch_add(1, Ordering::Relaxed)
}

/// Where a new store keeps its partitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backing {
    Memory,
    File(PathBuf),
}

enum Storage {
    Memory(Vec<OnceLock<PoolBuf>>),
    File {
        path: PathBuf,
        file: File,
        temporary: bool,
    },
}

/// Physical storage of a tall matrix.
///
/// Every partition holds `part_rows` rows except possibly the last, and its
/// elements are contiguous in the declared layout. Memory partitions are
/// written at most once.
pub struct TasStore {
    id: StoreId,
    meta: MatrixMeta,
    part_rows: usize,
    nparts: usize,
    storage: Storage,
    io: Arc<IoStats>,
    pool: ChunkPool,
}

impl std::fmt::Debug for TasStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TasStore")
            .field("id", &self.id)
            .field("meta", &self.meta)
            .field("part_rows", &self.part_rows)
            .field("file", &self.path())
            .finish()
    }
}

/// Partitions returned by [`TasStore::read_partitions`].
pub enum PartitionsView<'a> {
    Memory(Vec<&'a [u8]>),
    File {
        buf: PoolBuf,
        bounds: Vec<(usize, usize)>,
    },
}

impl PartitionsView<'_> {
    pub fn len(&self) -> usize {
        match self {
            PartitionsView::Memory(v) => v.len(),
            PartitionsView::File { bounds, .. } => bounds.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bytes of the `k`-th partition in the view.
    pub fn partition(&self, k: usize) -> &[u8] {
        match self {
            PartitionsView::Memory(v) => v[k],
            PartitionsView::File { buf, bounds } => {
                let (a, b) = bounds[k];
                &buf.bytes()[a..b]
            }
        }
    }

    /// All partitions as one contiguous buffer.
    pub fn to_vec(&self) -> Vec<u8> {
        match self {
            PartitionsView::Memory(v) => v.concat(),
            PartitionsView::File { buf, .. } => buf.bytes().to_vec(),
        }
    }
}

fn check_geometry(meta: &MatrixMeta, part_rows: usize) -> Result<()> {
    if part_rows == 0 || !part_rows.is_power_of_two() {
        return Err(Error::PartRows(part_rows));
    }
    if meta.nrow == 0 || meta.ncol == 0 {
        return Err(Error::invalid(format!(
            "matrix dimensions must be at least 1, got {}x{}",
            meta.nrow, meta.ncol
        )));
    }
    Ok(())
}

impl TasStore {
    /// Creates a store. Memory partitions start unwritten; file partitions
    /// start zero-filled.
    pub fn create(
        meta: MatrixMeta,
        part_rows: usize,
        backing: &Backing,
        pool: &ChunkPool,
        io: &Arc<IoStats>,
    ) -> Result<TasStore> {
        let mut meta = meta;
        meta.orientation = Orientation::Tall;
        check_geometry(&meta, part_rows)?;
        let nparts = meta.nrow.div_ceil(part_rows);
        let storage = match backing {
            Backing::Memory => Storage::Memory((0..nparts).map(|_| OnceLock::new()).collect()),
            Backing::File(path) => {
                let mut file = OpenOptions::new()
                    .read(true)
                    .write(true)
                    .create(true)
                    .truncate(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                let header = NativeHeader {
                    elem_type: meta.elem_type,
                    layout: meta.layout,
                    orientation: Orientation::Tall,
                    nrow: meta.nrow as u64,
                    ncol: meta.ncol as u64,
                    part_rows: part_rows as u64,
                };
                file.write_all(&header.encode())
                    .map_err(|e| Error::io(path, e))?;
                let total = HEADER_LEN + meta.nrow * meta.ncol * meta.elem_type.size();
                file.set_len(total as u64).map_err(|e| Error::io(path, e))?;
                Storage::File {
                    path: path.clone(),
                    file,
                    temporary: false,
                }
            }
        };
        Ok(TasStore {
            id: next_store_id(),
            meta,
            part_rows,
            nparts,
            storage,
            io: io.clone(),
            pool: pool.clone(),
        })
    }

    /// Opens an existing native file without reading its partitions.
    /// Returns the store and the orientation recorded in the header.
    pub fn open(path: &Path, pool: &ChunkPool, io: &Arc<IoStats>) -> Result<(TasStore, Orientation)> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len() as usize;
        let mut head = vec![0u8; HEADER_LEN.min(len)];
        file.read_exact_at(&mut head, 0)
            .map_err(|e| Error::io(path, e))?;
        let h = NativeHeader::decode(&head)?;
        let meta = MatrixMeta {
            nrow: h.nrow as usize,
            ncol: h.ncol as usize,
            elem_type: h.elem_type,
            layout: h.layout,
            orientation: Orientation::Tall,
        };
        let part_rows = h.part_rows as usize;
        let nparts = meta.nrow.div_ceil(part_rows);
        let expected = HEADER_LEN + meta.nrow * meta.ncol * meta.elem_type.size();
        if len < expected {
            let full = part_rows * meta.ncol * meta.elem_type.size();
            let partition = ((len - HEADER_LEN) / full).min(nparts - 1);
            return Err(Error::Truncated { partition });
        }
        let store = TasStore {
            id: next_store_id(),
            meta,
            part_rows,
            nparts,
            storage: Storage::File {
                path: path.to_path_buf(),
                file,
                temporary: false,
            },
            io: io.clone(),
            pool: pool.clone(),
        };
        Ok((store, h.orientation))
    }

    /// Marks a file-backed store for deletion when dropped.
    pub fn set_temporary(&mut self, temporary: bool) {
        if let Storage::File { temporary: t, .. } = &mut self.storage {
            *t = temporary;
        }
    }

    pub fn id(&self) -> StoreId {
        self.id
    }

    pub fn meta(&self) -> &MatrixMeta {
        &self.meta
    }

    pub fn nrow(&self) -> usize {
        self.meta.nrow
    }

    pub fn ncol(&self) -> usize {
        self.meta.ncol
    }

    pub fn part_rows(&self) -> usize {
        self.part_rows
    }

    pub fn num_partitions(&self) -> usize {
        self.nparts
    }

    pub fn is_file(&self) -> bool {
        matches!(self.storage, Storage::File { .. })
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.storage {
            Storage::File { path, .. } => Some(path),
            Storage::Memory(_) => None,
        }
    }

    pub fn pool(&self) -> &ChunkPool {
        &self.pool
    }

    pub fn io(&self) -> &Arc<IoStats> {
        &self.io
    }

    /// Rows in partition `idx`.
    pub fn partition_rows(&self, idx: usize) -> usize {
        let start = idx * self.part_rows;
        self.part_rows.min(self.meta.nrow - start)
    }

    pub fn partition_bytes(&self, idx: usize) -> usize {
        self.partition_rows(idx) * self.meta.ncol * self.meta.elem_type.size()
    }

    /// Total element bytes.
    pub fn data_bytes(&self) -> usize {
        self.meta.nrow * self.meta.ncol * self.meta.elem_type.size()
    }

    fn file_offset(&self, idx: usize) -> u64 {
        (HEADER_LEN + idx * self.part_rows * self.meta.ncol * self.meta.elem_type.size()) as u64
    }

    fn check_range(&self, first: usize, count: usize) -> Result<()> {
        if count == 0 || first + count > self.nparts {
            return Err(Error::PartitionRange {
                first,
                end: first + count,
                count: self.nparts,
            });
        }
        Ok(())
    }

    /// Reads `count` consecutive partitions. A file-backed read is a single
    /// positioned read and is charged to [`IoStats`]; memory reads are free.
    pub fn read_partitions(&self, first: usize, count: usize) -> Result<PartitionsView<'_>> {
        self.check_range(first, count)?;
        match &self.storage {
            Storage::Memory(parts) => {
                let mut out = Vec::with_capacity(count);
                for (i, p) in parts.iter().enumerate().skip(first).take(count) {
                    out.push(p.get().ok_or(Error::Unwritten(i))?.bytes());
                }
                Ok(PartitionsView::Memory(out))
            }
            Storage::File { path, file, .. } => {
                let mut bounds = Vec::with_capacity(count);
                let mut total = 0;
                for i in first..first + count {
                    let b = self.partition_bytes(i);
                    bounds.push((total, total + b));
                    total += b;
                }
                let mut buf = self.pool.alloc(total)?;
                file.read_exact_at(buf.bytes_mut(), self.file_offset(first))
                    .map_err(|e| Error::PartitionIo {
                        partition: first,
                        path: path.clone(),
                        source: e,
                    })?;
                self.io.record_read(self.id, total as u64);
                Ok(PartitionsView::File { buf, bounds })
            }
        }
    }

    /// Borrows a resident memory partition; `None` for file backing.
    pub(crate) fn memory_partition(&self, idx: usize) -> Option<Result<&[u8]>> {
        match &self.storage {
            Storage::Memory(parts) => Some(
                parts
                    .get(idx)
                    .and_then(|p| p.get())
                    .map(|b| b.bytes())
                    .ok_or(Error::Unwritten(idx)),
            ),
            Storage::File { .. } => None,
        }
    }

    /// Writes one partition; `bytes` must match its geometry exactly.
    pub fn write_partition(&self, idx: usize, bytes: &[u8]) -> Result<()> {
        self.check_range(idx, 1)?;
        let expected = self.partition_bytes(idx);
        if bytes.len() != expected {
            return Err(Error::Geometry {
                partition: idx,
                expected,
                actual: bytes.len(),
            });
        }
        match &self.storage {
            Storage::Memory(_) => {
                let mut buf = self.pool.alloc(expected)?;
                buf.bytes_mut().copy_from_slice(bytes);
                self.put_partition(idx, buf)
            }
            Storage::File { path, file, .. } => {
                file.write_all_at(bytes, self.file_offset(idx))
                    .map_err(|e| Error::PartitionIo {
                        partition: idx,
                        path: path.clone(),
                        source: e,
                    })?;
                self.io.record_write(self.id, bytes.len() as u64);
                Ok(())
            }
        }
    }

    /// Hands a filled pool buffer to the store, avoiding a copy for memory backing.
    pub fn put_partition(&self, idx: usize, buf: PoolBuf) -> Result<()> {
        self.check_range(idx, 1)?;
        let expected = self.partition_bytes(idx);
        if buf.len() != expected {
            return Err(Error::Geometry {
                partition: idx,
                expected,
                actual: buf.len(),
            });
        }
        match &self.storage {
            Storage::Memory(parts) => parts[idx]
                .set(buf)
                .map_err(|_| Error::invalid(format!("partition {idx} written twice"))),
            Storage::File { .. } => self.write_partition(idx, buf.bytes()),
        }
    }

    /// Bytes of resident partitions (memory backing only).
    pub fn resident_bytes(&self) -> usize {
        match &self.storage {
            Storage::Memory(parts) => parts.iter().filter_map(|p| p.get()).map(|b| b.len()).sum(),
            Storage::File { .. } => 0,
        }
    }

    /// Flushes file data to disk.
    pub fn sync(&self) -> Result<()> {
        if let Storage::File { path, file, .. } = &self.storage {
            file.sync_data().map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    /// Writes this store as a native file with the given logical orientation.
    pub fn save_native(&self, path: &Path, orientation: Orientation) -> Result<()> {
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        let header = NativeHeader {
            elem_type: self.meta.elem_type,
            layout: self.meta.layout,
            orientation,
            nrow: self.meta.nrow as u64,
            ncol: self.meta.ncol as u64,
            part_rows: self.part_rows as u64,
        };
        file.write_all(&header.encode())
            .map_err(|e| Error::io(path, e))?;
        for i in 0..self.nparts {
            let view = self.read_partitions(i, 1)?;
            file.write_all(view.partition(0))
                .map_err(|e| Error::io(path, e))?;
            self.io.record_write(self.id, view.partition(0).len() as u64);
        }
        file.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

impl Drop for TasStore {
    fn drop(&mut self) {
        if let Storage::File {
            path,
            temporary: true,
            ..
        } = &self.storage
        {
            let _ = std::fs::remove_file(path);
        }
    }
}
