//! Generalized operations and their element functions.

mod functions;
pub(crate) mod kernels;

pub use functions::{registry, AggFn, BinaryFn, ElemFn, Lane, MapFn, UnaryFn};

/// The eleven generalized operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GenOpKind {
    Sapply,
    Mapply,
    MapplyRow,
    MapplyCol,
    Agg,
    AggRow,
    AggCol,
    Groupby,
    GroupbyRow,
    GroupbyCol,
    InnerProd,
}

impl GenOpKind {
    pub const ALL: [GenOpKind; 11] = [
        GenOpKind::Sapply,
        GenOpKind::Mapply,
        GenOpKind::MapplyRow,
        GenOpKind::MapplyCol,
        GenOpKind::Agg,
        GenOpKind::AggRow,
        GenOpKind::AggCol,
        GenOpKind::Groupby,
        GenOpKind::GroupbyRow,
        GenOpKind::GroupbyCol,
        GenOpKind::InnerProd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GenOpKind::Sapply => "sapply",
            GenOpKind::Mapply => "mapply",
            GenOpKind::MapplyRow => "mapply_row",
            GenOpKind::MapplyCol => "mapply_col",
            GenOpKind::Agg => "agg",
            GenOpKind::AggRow => "agg_row",
            GenOpKind::AggCol => "agg_col",
            GenOpKind::Groupby => "groupby",
            GenOpKind::GroupbyRow => "groupby_row",
            GenOpKind::GroupbyCol => "groupby_col",
            GenOpKind::InnerProd => "inner_prod",
        }
    }

    /// Output shape for an `n×p` input. `other` is the second operand's
    /// shape for `inner_prod` and `k` the group count for groupby kinds.
    pub fn output_shape(self, n: usize, p: usize, other: (usize, usize), k: usize) -> (usize, usize) {
        match self {
            GenOpKind::Sapply | GenOpKind::Mapply | GenOpKind::MapplyRow | GenOpKind::MapplyCol => (n, p),
            GenOpKind::Agg => (1, 1),
            GenOpKind::AggRow => (n, 1),
            GenOpKind::AggCol => (p, 1),
            GenOpKind::Groupby => (k, 1),
            GenOpKind::GroupbyRow => (k, p),
            GenOpKind::GroupbyCol => (n, k),
            GenOpKind::InnerProd => (n, other.1),
        }
    }
}
