//! Fixed-size memory chunks shared by all in-memory partitions and scratch.
//!
//! Allocations of at most a quarter chunk are carved out of a shared "open"
//! chunk with a bump pointer; larger ones take one or more whole chunk units.
//! A chunk goes back to the free list when its last allocation is dropped.

use std::collections::BTreeMap;
use std::ptr::NonNull;
use std::sync::{Arc, Mutex, MutexGuard, Weak};

use crate::error::{Error, Result};

const ALIGN: usize = 64;

struct RawChunk {
    ptr: NonNull<u64>,
    words: usize,
}

// The chunk is plain memory owned by exactly one RawChunk.
unsafe impl Send for RawChunk {}
unsafe impl Sync for RawChunk {}

impl RawChunk {
    fn new(bytes: usize) -> Self {
        let words = bytes.div_ceil(8);
        let boxed: Box<[u64]> = vec![0u64; words].into_boxed_slice();
        let ptr = NonNull::new(Box::into_raw(boxed) as *mut u64).expect("non-null allocation");
        RawChunk { ptr, words }
    }
}

impl Drop for RawChunk {
    fn drop(&mut self) {
        // SAFETY: ptr/words came from Box::into_raw of a boxed slice of this length.
        unsafe {
            drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(
                self.ptr.as_ptr(),
                self.words,
            )));
        }
    }
}

struct ChunkGuard {
    raw: Option<RawChunk>,
    units: usize,
    pool: Arc<PoolInner>,
}

impl ChunkGuard {
    fn base(&self) -> *mut u8 {
        self.raw.as_ref().expect("live chunk").ptr.as_ptr() as *mut u8
    }
}

impl Drop for ChunkGuard {
    fn drop(&mut self) {
        if let Some(raw) = self.raw.take() {
            let mut st = self.pool.lock();
            st.live_units -= self.units;
            st.free.entry(self.units).or_default().push(raw);
        }
    }
}

struct OpenChunk {
    guard: Weak<ChunkGuard>,
    offset: usize,
}

#[derive(Default)]
struct PoolState {
    free: BTreeMap<usize, Vec<RawChunk>>,
    allocated_units: usize,
    live_units: usize,
    high_water_bytes: usize,
    open: Option<OpenChunk>,
}

impl PoolState {
    fn free_units(&self) -> usize {
        self.free.iter().map(|(u, v)| u * v.len()).sum()
    }
}

struct PoolInner {
    chunk_bytes: usize,
    budget: usize,
    state: Mutex<PoolState>,
}

impl PoolInner {
    fn lock(&self) -> MutexGuard<'_, PoolState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Snapshot of pool accounting. Chunk counts are in chunk units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoolStats {
    pub chunk_bytes: usize,
    pub budget: usize,
    pub allocated_bytes: usize,
    pub live_chunks: usize,
    pub free_chunks: usize,
    pub high_water_bytes: usize,
}

/// Recycling allocator with a hard memory budget.
#[derive(Clone)]
pub struct ChunkPool {
    inner: Arc<PoolInner>,
}

impl std::fmt::Debug for ChunkPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChunkPool").field("stats", &self.stats()).finish()
    }
}

impl ChunkPool {
    pub fn new(chunk_bytes: usize, budget: usize) -> Result<Self> {
        if chunk_bytes < ALIGN || chunk_bytes % ALIGN != 0 {
            return Err(Error::invalid(format!(
                "chunk size must be a positive multiple of {ALIGN} bytes, got {chunk_bytes}"
            )));
        }
        Ok(ChunkPool {
            inner: Arc::new(PoolInner {
                chunk_bytes,
                budget,
                state: Mutex::new(PoolState::default()),
            }),
        })
    }

    pub fn chunk_bytes(&self) -> usize {
        self.inner.chunk_bytes
    }

    /// Allocates a zeroed buffer of `bytes` bytes, 64-byte aligned.
    pub fn alloc(&self, bytes: usize) -> Result<PoolBuf> {
        let chunk = self.inner.chunk_bytes;
        let aligned = bytes.div_ceil(ALIGN).max(1) * ALIGN;
        // Declared before the lock guard so a stale chunk is released after unlocking.
        let mut _stale: Option<Arc<ChunkGuard>> = None;
        let mut st = self.inner.lock();
        let buf = if aligned <= chunk / 4 {
            let reuse = st.open.as_ref().and_then(|o| {
                let g = o.guard.upgrade()?;
                Some((g, o.offset))
            });
            let (guard, offset) = match reuse {
                Some((g, off)) if off + aligned <= chunk => (g, off),
                other => {
                    _stale = other.map(|(g, _)| g);
                    let g = self.take_chunk(&mut st, 1)?;
                    (g, 0)
                }
            };
            st.open = Some(OpenChunk {
                guard: Arc::downgrade(&guard),
                offset: offset + aligned,
            });
            PoolBuf {
                guard,
                offset,
                len: bytes,
            }
        } else {
            let units = bytes.div_ceil(chunk);
            let guard = self.take_chunk(&mut st, units)?;
            PoolBuf {
                guard,
                offset: 0,
                len: bytes,
            }
        };
        drop(st);
        let mut buf = buf;
        buf.bytes_mut().fill(0);
        Ok(buf)
    }

    fn take_chunk(&self, st: &mut PoolState, units: usize) -> Result<Arc<ChunkGuard>> {
        let chunk = self.inner.chunk_bytes;
        let raw = match st.free.get_mut(&units).and_then(|v| v.pop()) {
            Some(raw) => raw,
            None => {
                let need = units * chunk;
                if (st.allocated_units * chunk) + need > self.inner.budget {
                    // Give back cached chunks of other sizes before failing.
                    let released = std::mem::take(&mut st.free);
                    let freed: usize = released.iter().map(|(u, v)| u * v.len()).sum();
                    st.allocated_units -= freed;
                    drop(released);
                }
                if (st.allocated_units * chunk) + need > self.inner.budget {
                    return Err(Error::Budget {
                        requested: need,
                        allocated: st.allocated_units * chunk,
                        budget: self.inner.budget,
                    });
                }
                st.allocated_units += units;
                st.high_water_bytes = st.high_water_bytes.max(st.allocated_units * chunk);
                RawChunk::new(need)
            }
        };
        st.live_units += units;
        Ok(Arc::new(ChunkGuard {
            raw: Some(raw),
            units,
            pool: self.inner.clone(),
        }))
    }

    pub fn stats(&self) -> PoolStats {
        let st = self.inner.lock();
        PoolStats {
            chunk_bytes: self.inner.chunk_bytes,
            budget: self.inner.budget,
            allocated_bytes: st.allocated_units * self.inner.chunk_bytes,
            live_chunks: st.live_units,
            free_chunks: st.free_units(),
            high_water_bytes: st.high_water_bytes,
        }
    }

    /// Returns cached free chunks to the system allocator.
    pub fn trim(&self) {
        let released = {
            let mut st = self.inner.lock();
            let released = std::mem::take(&mut st.free);
            let freed: usize = released.iter().map(|(u, v)| u * v.len()).sum();
            st.allocated_units -= freed;
            released
        };
        drop(released);
    }

    pub fn reset_high_water(&self) {
        let mut st = self.inner.lock();
        st.high_water_bytes = st.allocated_units * self.inner.chunk_bytes;
    }
}

/// A region of a pool chunk. Dropping it releases its share of the chunk.
pub struct PoolBuf {
    guard: Arc<ChunkGuard>,
    offset: usize,
    len: usize,
}

// Each PoolBuf owns a disjoint region of its chunk; mutation requires &mut.
unsafe impl Send for PoolBuf {}
unsafe impl Sync for PoolBuf {}

impl PoolBuf {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bytes(&self) -> &[u8] {
        // SAFETY: offset + len lies inside the chunk and no other PoolBuf overlaps it.
        unsafe { std::slice::from_raw_parts(self.guard.base().add(self.offset), self.len) }
    }

    pub fn bytes_mut(&mut self) -> &mut [u8] {
        // SAFETY: as above, and &mut self guarantees exclusive access to the region.
        unsafe { std::slice::from_raw_parts_mut(self.guard.base().add(self.offset), self.len) }
    }

    pub fn typed<T: bytemuck::Pod>(&self) -> &[T] {
        let n = self.len / std::mem::size_of::<T>();
        bytemuck::cast_slice(&self.bytes()[..n * std::mem::size_of::<T>()])
    }

    pub fn typed_mut<T: bytemuck::Pod>(&mut self) -> &mut [T] {
        let n = self.len / std::mem::size_of::<T>();
        bytemuck::cast_slice_mut(&mut self.bytes_mut()[..n * std::mem::size_of::<T>()])
    }
}

impl std::fmt::Debug for PoolBuf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoolBuf")
            .field("offset", &self.offset)
            .field("len", &self.len)
            .finish()
    }
}
