use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use super::plan::{Op, Plan, SinkInfo};
use super::scheduler::{Scheduler, Task};
use crate::dag::Generator;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::genops::kernels::{self, Acc, LaneVal, Tile};
use crate::genops::AggFn;
use crate::rng::Rng;
use crate::storage::{ElemType, Layout, PartitionsView, PoolBuf, TasStore};

/// Merges per-partition partials strictly in ascending partition order.
pub(crate) struct MergeState {
    next: usize,
    pending: BTreeMap<usize, Vec<Acc>>,
    total: Vec<Acc>,
    gs: Vec<AggFn>,
}

impl MergeState {
    pub fn new(sinks: &[SinkInfo]) -> Self {
        MergeState {
            next: 0,
            pending: BTreeMap::new(),
            total: sinks.iter().map(|s| s.new_acc()).collect(),
            gs: sinks.iter().map(|s| s.g).collect(),
        }
    }

    fn push(&mut self, part: usize, accs: Vec<Acc>) {
        self.pending.insert(part, accs);
        while let Some(accs) = self.pending.remove(&self.next) {
            for ((t, a), g) in self.total.iter_mut().zip(&accs).zip(&self.gs) {
                t.merge(*g, a);
            }
            self.next += 1;
        }
    }

    pub fn finish(self) -> Result<Vec<Acc>> {
        if !self.pending.is_empty() {
            return Err(Error::Worker("partials left unmerged".into()));
        }
        Ok(self.total)
    }
}

const ALIGN: usize = 64;

fn tile_layout(plan: &Plan) -> (Vec<(usize, usize)>, usize) {
    let mut off = 0;
    let mut spans = Vec::with_capacity(plan.steps.len());
    for s in &plan.steps {
        let len = if s.is_sink() {
            0
        } else {
            plan.slice_rows * s.ncol * s.ty.size()
        };
        spans.push((off, len));
        off += len.div_ceil(ALIGN) * ALIGN;
    }
    (spans, off.max(ALIGN))
}

fn carve<'a>(mut arena: &'a mut [u8], spans: &[(usize, usize)]) -> Vec<&'a mut [u8]> {
    let mut out = Vec::with_capacity(spans.len());
    let mut pos = 0;
    for &(off, len) in spans {
        let (_, rest) = std::mem::take(&mut arena).split_at_mut(off - pos);
        let (tile, rest) = rest.split_at_mut(len);
        out.push(tile);
        arena = rest;
        pos = off + len;
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_worker(
    engine: &Engine,
    plan: &Plan,
    scheduler: &Mutex<Scheduler>,
    cancel: &AtomicBool,
    error: &Mutex<Option<(usize, Error)>>,
    processed: &[AtomicUsize],
    tasks: &AtomicUsize,
    merge: &Mutex<MergeState>,
) -> usize {
    let fail = |part: usize, e: Error| {
        cancel.store(true, Ordering::SeqCst);
        let mut slot = error.lock().unwrap_or_else(|e| e.into_inner());
        if slot.as_ref().is_none_or(|(p, _)| part < *p) {
            *slot = Some((part, e));
        }
    };
    let (spans, total) = tile_layout(plan);
    let mut arena = match engine.pool().alloc(total) {
        Ok(b) => b,
        Err(e) => {
            fail(0, e);
            return 0;
        }
    };
    let mut count = 0;
    while !cancel.load(Ordering::SeqCst) {
        let task = match scheduler.lock().unwrap().next_task() {
            Some(t) => t,
            None => break,
        };
        tasks.fetch_add(1, Ordering::SeqCst);
        match run_task(engine, plan, task, &mut arena, &spans, processed, merge) {
            Ok(()) => count += task.count,
            Err((p, e)) => {
                fail(p, e);
                break;
            }
        }
    }
    count
}

fn run_task(
    engine: &Engine,
    plan: &Plan,
    task: Task,
    arena: &mut PoolBuf,
    spans: &[(usize, usize)],
    processed: &[AtomicUsize],
    merge: &Mutex<MergeState>,
) -> std::result::Result<(), (usize, Error)> {
    let node_err = |id: u64, rows: (usize, usize), e: Error| Error::Node {
        node: id,
        rows,
        source: Box::new(e),
    };
    let task_rows = (
        task.first * plan.part_rows,
        ((task.first + task.count) * plan.part_rows).min(plan.nrow),
    );
    let mut views: Vec<Option<PartitionsView<'_>>> = Vec::with_capacity(plan.steps.len());
    for s in &plan.steps {
        views.push(match &s.op {
            Op::Root(store) if store.is_file() => Some(
                store
                    .read_partitions(task.first, task.count)
                    .map_err(|e| (task.first, node_err(s.id, task_rows, e)))?,
            ),
            _ => None,
        });
    }
    for p in task.first..task.first + task.count {
        let prow = plan.partition_rows(p);
        let mut accs: Vec<Acc> = plan.sinks.iter().map(|s| s.new_acc()).collect();
        let mut outbufs = Vec::with_capacity(plan.outputs.len());
        for (_, st) in &plan.outputs {
            outbufs.push(engine.pool().alloc(st.partition_bytes(p)).map_err(|e| (p, e))?);
        }
        let mut s0 = 0;
        while s0 < prow {
            let n = plan.slice_rows.min(prow - s0);
            let grow = p * plan.part_rows + s0;
            let mut tiles = carve(arena.bytes_mut(), spans);
            for (si, step) in plan.steps.iter().enumerate() {
                eval_step(plan, si, &mut tiles, n, grow, &views, task.first, &mut accs)
                    .map_err(|e| (p, node_err(step.id, (grow, grow + n), e)))?;
                if let Some(o) = step.out {
                    let esz = step.ty.size();
                    let dst = outbufs[o].bytes_mut();
                    let src = &tiles[si];
                    for c in 0..step.ncol {
                        let d = (c * prow + s0) * esz;
                        dst[d..d + n * esz].copy_from_slice(&src[c * n * esz..(c + 1) * n * esz]);
                    }
                }
            }
            s0 += n;
        }
        processed[p].fetch_add(1, Ordering::SeqCst);
        merge.lock().unwrap().push(p, accs);
        for ((_, st), buf) in plan.outputs.iter().zip(outbufs) {
            st.put_partition(p, buf).map_err(|e| (p, e))?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eval_step(
    plan: &Plan,
    si: usize,
    tiles: &mut [&mut [u8]],
    n: usize,
    grow: usize,
    views: &[Option<PartitionsView<'_>>],
    first: usize,
    accs: &mut [Acc],
) -> Result<()> {
    let step = &plan.steps[si];
    let (before, rest) = tiles.split_at_mut(si);
    let out: &mut [u8] = &mut rest[0][..];
    let tile = |k: usize| {
        let i = step.inputs[k];
        let s = &plan.steps[i];
        Tile {
            rows: n,
            cols: s.ncol,
            ty: s.ty,
            bytes: &before[i][..],
        }
    };
    let ty = step.ty;
    match &step.op {
        Op::Root(store) => copy_rows(store, views[si].as_ref(), first, grow, n, out)?,
        Op::Gen(g) => fill_gen(g, plan.nrow, step.ncol, ty, grow, n, out),
        Op::Sapply(f) => kernels::sapply(*f, &tile(0), ty, out),
        Op::Mapply(f) => kernels::mapply(*f, &tile(0), &tile(1), ty, out),
        Op::MapplyRow(f, v) => kernels::mapply_row(*f, &tile(0), v, ty, out),
        Op::MapplyCol(f) => kernels::mapply_col(*f, &tile(0), &tile(1), ty, out),
        Op::AggRow(g) => kernels::agg_row(*g, &tile(0), ty, out)?,
        Op::GroupbyCol { g, k, labels } => kernels::groupby_col(*g, *k, labels, &tile(0), ty, out),
        Op::InnerProd { f1, f2, b } => kernels::inner_prod(*f1, *f2, &tile(0), b, ty, out),
        Op::Cbind => {
            let ts: Vec<Tile> = (0..step.inputs.len()).map(tile).collect();
            kernels::cbind(&ts, out)
        }
        Op::SelectCols(idx) => kernels::select_cols(idx, &tile(0), out),
        Op::Agg { g, row_major } => {
            let a = tile(0);
            let (nr, nc) = (plan.nrow, a.cols);
            let acc = &mut accs[step.sink.unwrap()];
            if *row_major {
                kernels::fold_agg(*g, acc, &a, |r, c| ((grow + r) * nc + c) as i64)
            } else {
                kernels::fold_agg(*g, acc, &a, |r, c| (c * nr + grow + r) as i64)
            }
        }
        Op::AggCol(g) => kernels::fold_agg_col(*g, &mut accs[step.sink.unwrap()], &tile(0), grow),
        Op::Groupby { g, k } => {
            let lab = kernels::labels("groupby", &tile(1), *k)?;
            kernels::fold_groupby(*g, &mut accs[step.sink.unwrap()], &tile(0), &lab)
        }
        Op::GroupbyRow { g, k } => {
            let lab = kernels::labels("groupby_row", &tile(1), *k)?;
            kernels::fold_groupby_row(*g, *k, &mut accs[step.sink.unwrap()], &tile(0), &lab)
        }
        Op::Crossprod { f1, f2, upper } => {
            kernels::fold_crossprod(*f1, *f2, &mut accs[step.sink.unwrap()], &tile(0), &tile(1), *upper)
        }
    }
    Ok(())
}

/// Copies global rows `grow..grow+n` of a store into a column-major tile.
fn copy_rows(
    store: &TasStore,
    view: Option<&PartitionsView<'_>>,
    first: usize,
    grow: usize,
    n: usize,
    out: &mut [u8],
) -> Result<()> {
    let meta = store.meta();
    let q = store.part_rows();
    let esz = meta.elem_type.size();
    let ncol = meta.ncol;
    let end = grow + n;
    let mut r = grow;
    while r < end {
        let qi = r / q;
        let lr = r % q;
        let qrows = store.partition_rows(qi);
        let take = (qrows - lr).min(end - r);
        let src: &[u8] = match view {
            Some(v) => v.partition(qi - first),
            None => store
                .memory_partition(qi)
                .ok_or_else(|| Error::invalid("file store read without a view"))??,
        };
        let o = r - grow;
        match meta.layout {
            Layout::ColMajor => {
                for c in 0..ncol {
                    let s = (c * qrows + lr) * esz;
                    let d = (c * n + o) * esz;
                    out[d..d + take * esz].copy_from_slice(&src[s..s + take * esz]);
                }
            }
            Layout::RowMajor => {
                for i in 0..take {
                    for c in 0..ncol {
                        let s = ((lr + i) * ncol + c) * esz;
                        let d = (c * n + o + i) * esz;
                        out[d..d + esz].copy_from_slice(&src[s..s + esz]);
                    }
                }
            }
        }
        r += take;
    }
    Ok(())
}

fn fill_gen(g: &Generator, nrow: usize, ncol: usize, ty: ElemType, grow: usize, n: usize, out: &mut [u8]) {
    let len = n * ncol;
    let out = &mut out[..len * ty.size()];
    match *g {
        Generator::Rep(s) => {
            let mut one = [0u8; 8];
            if s.elem_type().is_float() {
                f64::write(&[s.as_f64()], ty, &mut one[..ty.size()]);
            } else {
                i64::write(&[s.as_i64()], ty, &mut one[..ty.size()]);
            }
            for c in out.chunks_exact_mut(ty.size()) {
                c.copy_from_slice(&one[..ty.size()]);
            }
        }
        Generator::Seq { start } => {
            let mut v = Vec::with_capacity(len);
            for _ in 0..ncol {
                v.extend((0..n).map(|r| start + (grow + r) as i64));
            }
            i64::write(&v, ty, out);
        }
        Generator::Runif { seed, lo, hi } => {
            let rng = Rng::new(seed);
            let mut v = Vec::with_capacity(len);
            for c in 0..ncol {
                let base = (c * nrow + grow) as u64;
                v.extend((0..n as u64).map(|r| lo + (hi - lo) * rng.uniform_at(base + r)));
            }
            f64::write(&v, ty, out);
        }
        Generator::Rnorm { seed, mean, sd } => {
            let rng = Rng::new(seed);
            let mut v = Vec::with_capacity(len);
            for c in 0..ncol {
                let base = (c * nrow + grow) as u64;
                v.extend((0..n as u64).map(|r| mean + sd * rng.normal_at(base + r)));
            }
            f64::write(&v, ty, out);
        }
    }
}
