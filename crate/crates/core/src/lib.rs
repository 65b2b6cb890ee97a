//! Out-of-core matrix engine with lazy evaluation and fused generalized
//! operations.
//!
//! Matrices are tall-and-skinny, stored column-major in row-interval
//! partitions, either in memory or in files. Operations build a DAG of
//! virtual matrices; materializing a node streams its roots once and
//! evaluates every fused operation on cache-sized slices of each partition.
//!
//! ```
//! use oocmat::{Engine, EngineConfig};
//!
//! let engine = Engine::new(EngineConfig::default()).unwrap();
//! let x = engine.runif_matrix(1000, 4, 7).unwrap();
//! let s = x.mul(&x).unwrap().col_sums().unwrap();
//! assert_eq!(s.to_vec_f64().unwrap().len(), 4);
//! ```

pub mod cli;
pub mod dag;
pub mod datasets;
pub mod engine;
pub mod error;
pub mod exec;
pub mod genops;
pub mod ml;
pub mod rbase;
pub mod rng;
pub mod sparse;
pub mod storage;

pub use dag::{CacheWhere, Matrix, MatrixHandle};
pub use engine::{BackingKind, Engine, EngineConfig};
pub use error::{Error, Result};
pub use exec::RunStats;
pub use genops::{AggFn, BinaryFn, ElemFn, MapFn, UnaryFn};
pub use rng::Rng;
pub use storage::{BlockMatrix, DenseMatrix, ElemType, Scalar};
