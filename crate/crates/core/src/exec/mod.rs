//! Parallel DAG materialization.
//!
//! A pass streams the I/O partitions of a DAG's roots once. Workers take
//! contiguous partition ranges from the [`Scheduler`], split each partition
//! into cache-sized row slices and push every slice through the fused node
//! chain. Sink nodes fold per partition; partials are merged on a single
//! lock in ascending partition order, so results do not depend on the
//! worker count.

mod plan;
mod scheduler;
mod worker;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

pub use plan::RunStats;
pub use scheduler::{Scheduler, Task};

use crate::dag::{Kind, Node};
use crate::engine::Engine;
use crate::error::Result;

/// Materializes `target` and every pending node that can share its pass.
pub(crate) fn materialize(engine: &Engine, target: &Arc<Node>) -> Result<()> {
    loop {
        if target.is_done() {
            return Ok(());
        }
        let mut pre = Vec::new();
        prerequisites(target, &mut pre, &mut HashSet::new());
        if pre.is_empty() {
            break;
        }
        for p in pre {
            materialize(engine, &p)?;
        }
    }
    let _guard = engine.exec_lock();
    if target.is_done() {
        return Ok(());
    }
    let outputs = select_outputs(engine, target);
    let plan = plan::Plan::build(engine, &outputs)?;
    let stats = plan.run(engine)?;
    engine.set_last_run(stats);
    Ok(())
}

/// Nodes that must be materialized by earlier passes: state inputs and
/// sinks consumed as streamed inputs.
fn prerequisites(n: &Arc<Node>, out: &mut Vec<Arc<Node>>, seen: &mut HashSet<u64>) {
    if n.is_done() || !seen.insert(n.id) {
        return;
    }
    for i in &n.inputs {
        if i.is_sink() && !i.is_done() {
            if !out.iter().any(|o| o.id == i.id) {
                out.push(i.clone());
            }
        } else {
            prerequisites(i, out, seen);
        }
    }
    for (s, _) in &n.state {
        if !s.is_done() && !out.iter().any(|o| o.id == s.id) {
            out.push(s.clone());
        }
    }
}

/// Ids of nodes reachable through streamed inputs, including done roots.
fn streamed_closure(n: &Arc<Node>, ids: &mut HashSet<u64>) {
    if !ids.insert(n.id) || n.is_done() {
        return;
    }
    for i in &n.inputs {
        streamed_closure(i, ids);
    }
}

fn select_outputs(engine: &Engine, target: &Arc<Node>) -> Vec<Arc<Node>> {
    let mut outputs = vec![target.clone()];
    let mut ids = HashSet::new();
    streamed_closure(target, &mut ids);
    let plen = target.partition_len();
    let mut candidates: BTreeMap<u64, Arc<Node>> = BTreeMap::new();
    for p in engine.pending() {
        if p.id != target.id && !matches!(p.kind, Kind::Physical) && p.partition_len() == plen {
            candidates.insert(p.id, p);
        }
    }
    loop {
        let mut joined = None;
        for (id, c) in &candidates {
            let mut pre = Vec::new();
            prerequisites(c, &mut pre, &mut HashSet::new());
            if !pre.is_empty() {
                continue;
            }
            let mut cids = HashSet::new();
            streamed_closure(c, &mut cids);
            if !cids.is_disjoint(&ids) {
                joined = Some((*id, cids));
                break;
            }
        }
        match joined {
            Some((id, cids)) => {
                let c = candidates.remove(&id).unwrap();
                ids.extend(cids);
                outputs.push(c);
            }
            None => break,
        }
    }
    outputs
}
