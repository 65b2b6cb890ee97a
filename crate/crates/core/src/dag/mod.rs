//! Lazy evaluation: matrix handles, computation nodes and DAG inspection.

mod dump;
mod matrix;
mod node;

pub use matrix::{Matrix, MatrixHandle};
pub use node::{CacheWhere, Generator};
pub(crate) use matrix::{node_store, state_mat};
pub(crate) use node::{Kind, Node};
