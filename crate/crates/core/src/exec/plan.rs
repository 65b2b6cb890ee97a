use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use super::scheduler::Scheduler;
use super::worker::{self, MergeState};
use crate::dag::{node_store, state_mat, Generator, Kind, Node};
use crate::engine::{BackingKind, Engine};
use crate::error::{Error, Result};
use crate::genops::kernels::{self, Acc, StateMat};
use crate::genops::{AggFn, BinaryFn, Lane, MapFn};
use crate::storage::{DenseMatrix, ElemType, MatrixMeta, TasStore};

/// Counters from one DAG execution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub nodes: usize,
    pub sinks: usize,
    pub partitions: usize,
    pub part_rows: usize,
    pub slice_rows: usize,
    pub io_batch: usize,
    pub tasks: usize,
    /// Partitions processed by each worker.
    pub per_worker: Vec<usize>,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub seconds: f64,
}

pub(crate) enum Op {
    Root(Arc<TasStore>),
    Gen(Generator),
    Sapply(MapFn),
    Mapply(BinaryFn),
    MapplyRow(BinaryFn, StateMat),
    MapplyCol(BinaryFn),
    AggRow(AggFn),
    GroupbyCol { g: AggFn, k: usize, labels: Vec<usize> },
    InnerProd { f1: BinaryFn, f2: AggFn, b: StateMat },
    Cbind,
    SelectCols(Vec<usize>),
    Agg { g: AggFn, row_major: bool },
    AggCol(AggFn),
    Groupby { g: AggFn, k: usize },
    GroupbyRow { g: AggFn, k: usize },
    Crossprod { f1: BinaryFn, f2: AggFn, upper: bool },
}

pub(crate) struct Step {
    pub id: u64,
    pub op: Op,
    pub inputs: Vec<usize>,
    pub ncol: usize,
    pub ty: ElemType,
    /// Index into the plan's output stores.
    pub out: Option<usize>,
    /// Index into the plan's sinks.
    pub sink: Option<usize>,
}

impl Step {
    pub fn is_sink(&self) -> bool {
        self.sink.is_some()
    }
}

pub(crate) struct SinkInfo {
    pub step: usize,
    pub g: AggFn,
    pub lane: Lane,
    pub in_ty: ElemType,
    pub len: usize,
    pub out_ty: ElemType,
    pub shape: (usize, usize),
    /// Accumulator is column-major `shape` and must be transposed to row-major.
    pub col_major: bool,
    pub mirror: Option<usize>,
}

impl SinkInfo {
    pub fn new_acc(&self) -> Acc {
        Acc::new(self.g, self.lane, self.in_ty, self.len)
    }
}

pub(crate) struct Plan {
    pub nodes: Vec<Arc<Node>>,
    pub steps: Vec<Step>,
    pub sinks: Vec<SinkInfo>,
    pub outputs: Vec<(usize, Arc<TasStore>)>,
    pub nrow: usize,
    pub part_rows: usize,
    pub nparts: usize,
    pub slice_rows: usize,
    pub io_batch: usize,
}

fn visit(n: &Arc<Node>, order: &mut Vec<Arc<Node>>, index: &mut HashMap<u64, usize>) {
    if index.contains_key(&n.id) {
        return;
    }
    if !n.is_done() {
        for i in &n.inputs {
            visit(i, order, index);
        }
    }
    index.insert(n.id, order.len());
    order.push(n.clone());
}

impl Plan {
    pub fn build(engine: &Engine, outputs: &[Arc<Node>]) -> Result<Plan> {
        let mut nodes = Vec::new();
        let mut index = HashMap::new();
        for o in outputs {
            visit(o, &mut nodes, &mut index);
        }
        let nrow = outputs[0].partition_len();

        // Partition geometry follows the roots.
        let mut file_rows = None;
        let mut mem_rows = 0;
        for n in nodes.iter().filter(|n| n.is_done()) {
            let store = node_store(n)?;
            if store.nrow() != nrow {
                return Err(Error::invalid(format!(
                    "root #{} has {} rows, expected {nrow}",
                    n.id,
                    store.nrow()
                )));
            }
            if store.is_file() {
                match file_rows {
                    None => file_rows = Some(store.part_rows()),
                    Some(p) if p != store.part_rows() => {
                        return Err(Error::invalid(format!(
                            "file-backed inputs disagree on partition rows ({p} vs {})",
                            store.part_rows()
                        )))
                    }
                    _ => {}
                }
            } else {
                mem_rows = mem_rows.max(store.part_rows());
            }
        }
        let part_rows = file_rows.unwrap_or(if mem_rows > 0 {
            mem_rows
        } else {
            engine.config().part_rows
        });
        let nparts = nrow.div_ceil(part_rows);

        let mut steps = Vec::with_capacity(nodes.len());
        let mut sinks = Vec::new();
        let mut out_stores = Vec::new();
        let is_output = |n: &Arc<Node>| outputs.iter().any(|o| o.id == n.id);
        for (si, n) in nodes.iter().enumerate() {
            let inputs: Vec<usize> = if n.is_done() {
                Vec::new()
            } else {
                n.inputs.iter().map(|i| index[&i.id]).collect()
            };
            let in_ty = |k: usize| nodes[inputs[k]].ty;
            let op = if n.is_done() {
                Op::Root(node_store(n)?)
            } else {
                match &n.kind {
                    Kind::Physical => Op::Root(node_store(n)?),
                    Kind::Gen(g) => Op::Gen(*g),
                    Kind::Sapply(f) => Op::Sapply(*f),
                    Kind::Mapply(f) => Op::Mapply(*f),
                    Kind::MapplyRow(f) => {
                        let (s, t) = &n.state[0];
                        Op::MapplyRow(*f, state_mat(s, *t)?)
                    }
                    Kind::MapplyCol(f) => Op::MapplyCol(*f),
                    Kind::AggRow(g) => Op::AggRow(*g),
                    Kind::GroupbyCol { g, k } => {
                        let (s, t) = &n.state[0];
                        let st = state_mat(s, *t)?;
                        let labels = kernels::check_labels("groupby_col", st.i64s(), *k)?;
                        if st.ty.is_float() && st.f64s().iter().any(|x| x.fract() != 0.0) {
                            return Err(Error::Type {
                                op: "groupby_col",
                                detail: "labels must be integers".into(),
                            });
                        }
                        Op::GroupbyCol { g: *g, k: *k, labels }
                    }
                    Kind::InnerProd { f1, f2 } => {
                        let (s, t) = &n.state[0];
                        Op::InnerProd {
                            f1: *f1,
                            f2: *f2,
                            b: state_mat(s, *t)?,
                        }
                    }
                    Kind::Cbind => Op::Cbind,
                    Kind::SelectCols(idx) => Op::SelectCols(idx.clone()),
                    Kind::Agg { g, row_major_index } => Op::Agg {
                        g: *g,
                        row_major: *row_major_index,
                    },
                    Kind::AggCol(g) => Op::AggCol(*g),
                    Kind::Groupby { g, k } => Op::Groupby { g: *g, k: *k },
                    Kind::GroupbyRow { g, k } => Op::GroupbyRow { g: *g, k: *k },
                    Kind::Crossprod { f1, f2 } => Op::Crossprod {
                        f1: *f1,
                        f2: *f2,
                        upper: inputs[0] == inputs[1] && f1.is_commutative(),
                    },
                }
            };
            let mut sink = None;
            if n.is_sink() && !n.is_done() {
                let info = match &op {
                    Op::Agg { g, .. } => sink_info(si, *g, in_ty(0), 1, (1, 1), false, None),
                    Op::AggCol(g) => sink_info(si, *g, in_ty(0), n.nrow, (n.nrow, 1), false, None),
                    Op::Groupby { g, k } => sink_info(si, *g, in_ty(0), *k, (*k, 1), false, None),
                    Op::GroupbyRow { g, k } => {
                        sink_info(si, *g, in_ty(0), k * n.ncol, (*k, n.ncol), true, None)
                    }
                    Op::Crossprod { f1, f2, upper } => {
                        let (a, b) = (in_ty(0), in_ty(1));
                        let mut info = sink_info(
                            si,
                            *f2,
                            f1.output_type(a, b),
                            n.nrow * n.ncol,
                            (n.nrow, n.ncol),
                            true,
                            upper.then_some(n.nrow),
                        );
                        info.lane = f1.lane(a, b);
                        info
                    }
                    _ => unreachable!(),
                };
                let mut info = info;
                info.out_ty = n.ty;
                sink = Some(sinks.len());
                sinks.push(info);
            }
            let mut out = None;
            if !n.is_done() && !n.is_sink() && (is_output(n) || n.cache_flag().is_some()) {
                let kind = match n.cache_flag() {
                    Some(w) => Engine::cache_kind(w),
                    None => engine.config().backing,
                };
                let meta = MatrixMeta::tall(n.nrow, n.ncol, n.ty);
                let tag = if kind == BackingKind::File { "cache" } else { "mem" };
                let store = engine.create_store(meta, part_rows, kind, tag)?;
                out = Some(out_stores.len());
                out_stores.push((si, Arc::new(store)));
            }
            steps.push(Step {
                id: n.id,
                op,
                inputs,
                ncol: n.ncol,
                ty: n.ty,
                out,
                sink,
            });
        }

        // Cache slices: the widest tile must fit the cache budget.
        let widest = steps
            .iter()
            .filter(|s| !s.is_sink())
            .map(|s| s.ncol * 8)
            .max()
            .unwrap_or(8);
        let budget_rows = (engine.config().cache_budget / widest).max(1);
        let slice_rows = (1usize << (usize::BITS - 1 - budget_rows.leading_zeros())).min(part_rows);

        let part_bytes = steps
            .iter()
            .filter_map(|s| match &s.op {
                Op::Root(st) => Some(st.partition_bytes(0)),
                _ => None,
            })
            .max()
            .unwrap_or(part_rows * 8)
            .max(1);
        let io_batch = (engine.config().io_batch_bytes / part_bytes).max(1);

        Ok(Plan {
            nodes,
            steps,
            sinks,
            outputs: out_stores,
            nrow,
            part_rows,
            nparts,
            slice_rows,
            io_batch,
        })
    }

    pub fn partition_rows(&self, p: usize) -> usize {
        self.part_rows.min(self.nrow - p * self.part_rows)
    }

    /// Runs the pass and stores results into the nodes.
    pub fn run(self, engine: &Engine) -> Result<RunStats> {
        let start = Instant::now();
        let io0 = engine.io().snapshot();
        let workers = engine.config().workers.min(self.nparts).max(1);
        let scheduler = Mutex::new(Scheduler::new(self.nparts, engine.config().workers, self.io_batch));
        let cancel = AtomicBool::new(false);
        let error: Mutex<Option<(usize, Error)>> = Mutex::new(None);
        let processed: Vec<AtomicUsize> = (0..self.nparts).map(|_| AtomicUsize::new(0)).collect();
        let tasks = AtomicUsize::new(0);
        let merge = Mutex::new(MergeState::new(&self.sinks));
        let mut per_worker = vec![0usize; workers];

        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    scope.spawn(|| {
                        worker::run_worker(
                            engine, &self, &scheduler, &cancel, &error, &processed, &tasks, &merge,
                        )
                    })
                })
                .collect();
            for (w, h) in handles.into_iter().enumerate() {
                match h.join() {
                    Ok(n) => per_worker[w] = n,
                    Err(panic) => {
                        let msg = panic
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_else(|| "worker panicked".into());
                        cancel.store(true, Ordering::SeqCst);
                        let mut e = error.lock().unwrap_or_else(|e| e.into_inner());
                        if e.is_none() {
                            *e = Some((usize::MAX, Error::Worker(msg)));
                        }
                    }
                }
            }
        });

        if let Some((_, e)) = error.into_inner().unwrap_or_else(|e| e.into_inner()) {
            return Err(e);
        }
        for (p, c) in processed.iter().enumerate() {
            let c = c.load(Ordering::SeqCst);
            if c != 1 {
                return Err(Error::Worker(format!("partition {p} processed {c} times")));
            }
        }

        let merged = merge.into_inner().unwrap().finish()?;
        for (info, mut acc) in self.sinks.iter().zip(merged) {
            if let Some(m) = info.mirror {
                kernels::mirror_upper(&mut acc, m);
            }
            let buf = acc.finish(info.g, info.out_ty)?;
            let (r, c) = info.shape;
            let m = if info.col_major {
                DenseMatrix::new(c, r, buf)?.transpose()
            } else {
                DenseMatrix::new(r, c, buf)?
            };
            let node = &self.nodes[info.step];
            let _ = node.sink.set(m);
        }
        for (si, store) in &self.outputs {
            store.sync()?;
            let _ = self.nodes[*si].store.set(store.clone());
        }

        let io = engine.io().snapshot().since(&io0);
        Ok(RunStats {
            nodes: self.steps.len(),
            sinks: self.sinks.len(),
            partitions: self.nparts,
            part_rows: self.part_rows,
            slice_rows: self.slice_rows,
            io_batch: self.io_batch,
            tasks: tasks.load(Ordering::SeqCst),
            per_worker,
            bytes_read: io.bytes_read,
            bytes_written: io.bytes_written,
            seconds: start.elapsed().as_secs_f64(),
        })
    }
}

fn sink_info(
    step: usize,
    g: AggFn,
    in_ty: ElemType,
    len: usize,
    shape: (usize, usize),
    col_major: bool,
    mirror: Option<usize>,
) -> SinkInfo {
    SinkInfo {
        step,
        g,
        lane: g.lane(in_ty),
        in_ty,
        len,
        out_ty: g.output_type(in_ty),
        shape,
        col_major,
        mirror,
    }
}
