//! Physical representation of dense matrices.

mod block;
mod elem;
mod io_stats;
mod local;
pub mod native;
mod pool;
mod store;
mod text;

pub use block::{BlockMatrix, BLOCK_COLS};
pub use elem::{Buffer, ElemType, Element, Scalar};
pub use io_stats::{IoSnapshot, IoStats, StoreIo};
pub use local::DenseMatrix;
pub use pool::{ChunkPool, PoolBuf, PoolStats};
pub use store::{Backing, PartitionsView, StoreId, TasStore};
pub(crate) use store::next_store_id;
pub use text::{parse_dense_text, write_dense_text};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layout {
    ColMajor,
    RowMajor,
}

impl Layout {
    pub fn flip(self) -> Layout {
        match self {
            Layout::ColMajor => Layout::RowMajor,
            Layout::RowMajor => Layout::ColMajor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Tall,
    Wide,
}

impl Orientation {
    pub fn flip(self) -> Orientation {
        match self {
            Orientation::Tall => Orientation::Wide,
            Orientation::Wide => Orientation::Tall,
        }
    }
}

/// Shape, element type and layout of a matrix. Orientation is explicit and
/// never inferred from the shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatrixMeta {
    pub nrow: usize,
    pub ncol: usize,
    pub elem_type: ElemType,
    pub layout: Layout,
    pub orientation: Orientation,
}

impl MatrixMeta {
    /// Column-major tall matrix.
    pub fn tall(nrow: usize, ncol: usize, elem_type: ElemType) -> Self {
        MatrixMeta {
            nrow,
            ncol,
            elem_type,
            layout: Layout::ColMajor,
            orientation: Orientation::Tall,
        }
    }

    /// The metadata of the transposed view.
    pub fn transpose(&self) -> Self {
        MatrixMeta {
            nrow: self.ncol,
            ncol: self.nrow,
            elem_type: self.elem_type,
            layout: self.layout.flip(),
            orientation: self.orientation.flip(),
        }
    }

    pub fn bytes(&self) -> usize {
        self.nrow * self.ncol * self.elem_type.size()
    }
}
