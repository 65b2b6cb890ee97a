use std::sync::{Arc, Mutex, OnceLock};

use crate::engine::Engine;
use crate::genops::{AggFn, BinaryFn, GenOpKind, MapFn};
use crate::storage::{DenseMatrix, ElemType, Scalar, TasStore};

/// Where a cache-flagged matrix is kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheWhere {
    Memory,
    File,
}

/// Lazily generated matrices; each element depends only on its global index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    Rep(Scalar),
    /// `start + row`.
    Seq { start: i64 },
    Runif { seed: u64, lo: f64, hi: f64 },
    Rnorm { seed: u64, mean: f64, sd: f64 },
}

impl Generator {
    pub fn name(&self) -> String {
        match self {
            Generator::Rep(s) => format!("rep[{s}]"),
            Generator::Seq { start } => format!("seq[{start}]"),
            Generator::Runif { seed, lo, hi } => format!("runif[seed={seed},{lo},{hi}]"),
            Generator::Rnorm { seed, mean, sd } => format!("rnorm[seed={seed},{mean},{sd}]"),
        }
    }
}

/// What a node computes. Nodes are stored in tall orientation; transposed
/// handles are rewritten at lift time.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Kind {
    Physical,
    Gen(Generator),
    Sapply(MapFn),
    Mapply(BinaryFn),
    /// state[0] holds one value per column.
    MapplyRow(BinaryFn),
    /// inputs[1] is a one-column matrix over the same rows.
    MapplyCol(BinaryFn),
    AggRow(AggFn),
    /// state[0] holds one label per column.
    GroupbyCol { g: AggFn, k: usize },
    /// state[0] is the right operand.
    InnerProd { f1: BinaryFn, f2: AggFn },
    Cbind,
    SelectCols(Vec<usize>),
    Agg { g: AggFn, row_major_index: bool },
    AggCol(AggFn),
    /// inputs[1] holds a label per element.
    Groupby { g: AggFn, k: usize },
    /// inputs[1] holds a label per row.
    GroupbyRow { g: AggFn, k: usize },
    /// `t(inputs[0]) ⊗ inputs[1]`, reduced over rows.
    Crossprod { f1: BinaryFn, f2: AggFn },
}

impl Kind {
    pub fn is_sink(&self) -> bool {
        matches!(
            self,
            Kind::Agg { .. } | Kind::AggCol(_) | Kind::Groupby { .. } | Kind::GroupbyRow { .. } | Kind::Crossprod { .. }
        )
    }

    pub fn genop(&self) -> Option<GenOpKind> {
        Some(match self {
            Kind::Sapply(_) => GenOpKind::Sapply,
            Kind::Mapply(_) => GenOpKind::Mapply,
            Kind::MapplyRow(_) => GenOpKind::MapplyRow,
            Kind::MapplyCol(_) => GenOpKind::MapplyCol,
            Kind::AggRow(_) => GenOpKind::AggRow,
            Kind::GroupbyCol { .. } => GenOpKind::GroupbyCol,
            Kind::InnerProd { .. } | Kind::Crossprod { .. } => GenOpKind::InnerProd,
            Kind::Agg { .. } => GenOpKind::Agg,
            Kind::AggCol(_) => GenOpKind::AggCol,
            Kind::Groupby { .. } => GenOpKind::Groupby,
            Kind::GroupbyRow { .. } => GenOpKind::GroupbyRow,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Physical => "physical",
            Kind::Gen(_) => "generator",
            Kind::Cbind => "cbind",
            Kind::SelectCols(_) => "select_cols",
            Kind::Crossprod { .. } => "inner_prod",
            other => other.genop().map_or("?", |g| g.name()),
        }
    }

    pub fn fn_label(&self) -> String {
        match self {
            Kind::Physical => "-".into(),
            Kind::Gen(g) => g.name(),
            Kind::Sapply(f) => f.to_string(),
            Kind::Mapply(f) | Kind::MapplyRow(f) | Kind::MapplyCol(f) => f.name().into(),
            Kind::AggRow(g) | Kind::AggCol(g) | Kind::Agg { g, .. } => g.name().into(),
            Kind::GroupbyCol { g, k } | Kind::Groupby { g, k } | Kind::GroupbyRow { g, k } => {
                format!("{}[k={k}]", g.name())
            }
            Kind::InnerProd { f1, f2 } => format!("{},{}", f1.name(), f2.name()),
            Kind::Crossprod { f1, f2 } => format!("{},{}[crossprod]", f1.name(), f2.name()),
            Kind::Cbind => "-".into(),
            Kind::SelectCols(idx) => {
                let s: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
                format!("[{}]", s.join(","))
            }
        }
    }
}

/// A matrix node: physical data, a lazily evaluated computation, or a sink.
pub struct Node {
    pub(crate) id: u64,
    pub(crate) engine: Engine,
    pub(crate) kind: Kind,
    pub(crate) nrow: usize,
    pub(crate) ncol: usize,
    pub(crate) ty: ElemType,
    /// Inputs streamed along the partition dimension.
    pub(crate) inputs: Vec<Arc<Node>>,
    /// Small inputs replicated to every worker; the flag marks a transposed view.
    pub(crate) state: Vec<(Arc<Node>, bool)>,
    pub(crate) store: OnceLock<Arc<TasStore>>,
    pub(crate) sink: OnceLock<DenseMatrix>,
    pub(crate) cache: Mutex<Option<CacheWhere>>,
}

impl std::fmt::Debug for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Node")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("shape", &(self.nrow, self.ncol))
            .field("ty", &self.ty)
            .finish()
    }
}

impl Node {
    pub(crate) fn is_sink(&self) -> bool {
        self.kind.is_sink()
    }

    /// Length of the dimension this node is partitioned along when it runs.
    pub(crate) fn partition_len(&self) -> usize {
        if self.is_sink() {
            self.inputs[0].nrow
        } else {
            self.nrow
        }
    }

    pub(crate) fn is_done(&self) -> bool {
        self.store.get().is_some() || self.sink.get().is_some()
    }

    pub(crate) fn cache_flag(&self) -> Option<CacheWhere> {
        *self.cache.lock().unwrap()
    }

    pub(crate) fn tag(&self) -> &'static str {
        if matches!(self.kind, Kind::Physical) {
            "physical"
        } else if self.is_sink() {
            "sink"
        } else {
            "virtual"
        }
    }
}
