/// A contiguous range of I/O partitions handed to one worker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Task {
    pub first: usize,
    pub count: usize,
}

/// Dispatches partitions in ascending order: batches of `io_batch` while
/// plenty of work remains, single partitions near the end.
#[derive(Debug)]
pub struct Scheduler {
    next: usize,
    nparts: usize,
    workers: usize,
    io_batch: usize,
}

impl Scheduler {
    pub fn new(nparts: usize, workers: usize, io_batch: usize) -> Self {
        Scheduler {
            next: 0,
            nparts,
            workers: workers.max(1),
            io_batch: io_batch.max(1),
        }
    }

    pub fn remaining(&self) -> usize {
        self.nparts - self.next
    }

    pub fn next_task(&mut self) -> Option<Task> {
        let remaining = self.remaining();
        if remaining == 0 {
            return None;
        }
        let count = if remaining > self.workers * self.io_batch {
            self.io_batch
        } else {
            1
        };
        let task = Task {
            first: self.next,
            count,
        };
        self.next += count;
        Some(task)
    }
}

impl Iterator for Scheduler {
    type Item = Task;

    fn next(&mut self) -> Option<Task> {
        self.next_task()
    }
}
