use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use super::StoreId;

/// Byte and call counters for file-backed storage.
#[derive(Debug, Default)]
pub struct IoStats {
    bytes_read: AtomicU64,
    bytes_written: AtomicU64,
    read_calls: AtomicU64,
    write_calls: AtomicU64,
    per_store: Mutex<HashMap<StoreId, StoreIo>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StoreIo {
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub read_calls: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IoSnapshot {
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub read_calls: u64,
    pub write_calls: u64,
}

impl IoSnapshot {
    /// Counter deltas since an earlier snapshot.
    pub fn since(&self, earlier: &IoSnapshot) -> IoSnapshot {
        IoSnapshot {
            bytes_read: self.bytes_read - earlier.bytes_read,
            bytes_written: self.bytes_written - earlier.bytes_written,
            read_calls: self.read_calls - earlier.read_calls,
            write_calls: self.write_calls - earlier.write_calls,
        }
    }
}

impl IoStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn record_read(&self, store: StoreId, bytes: u64) {
        self.bytes_read.fetch_add(bytes, Ordering::Relaxed);
        self.read_calls.fetch_add(1, Ordering::Relaxed);
        let mut m = self.per_store.lock().unwrap_or_else(|e| e.into_inner());
        let e = m.entry(store).or_default();
        e.bytes_read += bytes;
        e.read_calls += 1;
    }

    pub(crate) fn record_write(&self, store: StoreId, bytes: u64) {
        self.bytes_written.fetch_add(bytes, Ordering::Relaxed);
        self.write_calls.fetch_add(1, Ordering::Relaxed);
        let mut m = self.per_store.lock().unwrap_or_else(|e| e.into_inner());
        m.entry(store).or_default().bytes_written += bytes;
    }

    pub fn snapshot(&self) -> IoSnapshot {
        IoSnapshot {
            bytes_read: self.bytes_read.load(Ordering::Relaxed),
            bytes_written: self.bytes_written.load(Ordering::Relaxed),
            read_calls: self.read_calls.load(Ordering::Relaxed),
            write_calls: self.write_calls.load(Ordering::Relaxed),
        }
    }

    pub fn bytes_read(&self) -> u64 {
        self.bytes_read.load(Ordering::Relaxed)
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes_written.load(Ordering::Relaxed)
    }

    pub fn store(&self, id: StoreId) -> StoreIo {
        let m = self.per_store.lock().unwrap_or_else(|e| e.into_inner());
        m.get(&id).copied().unwrap_or_default()
    }

    /// Zeroes every counter.
    pub fn reset(&self) {
        self.bytes_read.store(0, Ordering::Relaxed);
        self.bytes_written.store(0, Ordering::Relaxed);
        self.read_calls.store(0, Ordering::Relaxed);
        self.write_calls.store(0, Ordering::Relaxed);
        self.per_store
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .clear();
    }
}
