//! Convenience functions built from GenOps: arithmetic, reductions, matrix
//! products, constructors and structural helpers.

use std::sync::Arc;

use crate::dag::{node_store, Generator, Matrix};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::genops::{AggFn, BinaryFn, MapFn, UnaryFn};
use crate::storage::{BlockMatrix, ElemType, Layout, MatrixMeta, PoolBuf, Scalar, TasStore};

impl Engine {
    /// An `n×1` vector repeating `v`.
    pub fn rep_int(&self, v: impl Into<Scalar>, n: usize) -> Result<Matrix> {
        let v = v.into();
        Matrix::generator(self, Generator::Rep(v), n, 1, v.elem_type())
    }

    /// A constant `n×p` matrix.
    pub fn constant(&self, v: impl Into<Scalar>, n: usize, p: usize) -> Result<Matrix> {
        let v = v.into();
        Matrix::generator(self, Generator::Rep(v), n, p, v.elem_type())
    }

    /// `a, a+1, ..., b` as an `i64` column.
    pub fn seq_int(&self, a: i64, b: i64) -> Result<Matrix> {
        if b < a {
            return Err(Error::invalid(format!("seq_int bounds {a}..{b} are empty")));
        }
        Matrix::generator(self, Generator::Seq { start: a }, (b - a + 1) as usize, 1, ElemType::I64)
    }

    /// Uniform `[0, 1)` entries; element `(i, j)` depends only on `(seed, i, j)`.
    pub fn runif_matrix(&self, n: usize, p: usize, seed: u64) -> Result<Matrix> {
        self.runif_range(n, p, seed, 0.0, 1.0)
    }

    pub fn runif_range(&self, n: usize, p: usize, seed: u64, lo: f64, hi: f64) -> Result<Matrix> {
        if !(lo < hi) {
            return Err(Error::invalid(format!("runif bounds [{lo}, {hi}) are empty")));
        }
        Matrix::generator(self, Generator::Runif { seed, lo, hi }, n, p, ElemType::F64)
    }

    /// Standard normal entries via Box-Muller over counter-based uniforms.
    pub fn rnorm_matrix(&self, n: usize, p: usize, seed: u64) -> Result<Matrix> {
        self.rnorm_params(n, p, seed, 0.0, 1.0)
    }

    pub fn rnorm_params(&self, n: usize, p: usize, seed: u64, mean: f64, sd: f64) -> Result<Matrix> {
        if !(sd >= 0.0) {
            return Err(Error::invalid(format!("negative standard deviation {sd}")));
        }
        Matrix::generator(self, Generator::Rnorm { seed, mean, sd }, n, p, ElemType::F64)
    }
}

macro_rules! binary_methods {
    ($($name:ident => $f:ident),* $(,)?) => {
        $(
            pub fn $name(&self, b: &Matrix) -> Result<Matrix> {
                self.mapply(b, BinaryFn::$f)
            }
        )*
    };
}

macro_rules! scalar_methods {
    ($($name:ident => $f:ident),* $(,)?) => {
        $(
            pub fn $name(&self, s: impl Into<Scalar>) -> Result<Matrix> {
                self.sapply(MapFn::BindRight(BinaryFn::$f, s.into()))
            }
        )*
    };
}

macro_rules! unary_methods {
    ($($name:ident => $f:ident),* $(,)?) => {
        $(
            pub fn $name(&self) -> Result<Matrix> {
                self.sapply(UnaryFn::$f)
            }
        )*
    };
}

macro_rules! agg_methods {
    ($($name:ident, $row:ident, $col:ident => $g:ident),* $(,)?) => {
        $(
            pub fn $name(&self) -> Result<Matrix> {
                self.agg(AggFn::$g)
            }
            pub fn $row(&self) -> Result<Matrix> {
                self.agg_row(AggFn::$g)
            }
            pub fn $col(&self) -> Result<Matrix> {
                self.agg_col(AggFn::$g)
            }
        )*
    };
}

impl Matrix {
    binary_methods!(
        add => Add, sub => Sub, mul => Mul, div => Div, pmin => Pmin, pmax => Pmax,
        eq => Eq, ne => Ne, lt => Lt, le => Le, gt => Gt, ge => Ge, and => And, or => Or,
    );

    scalar_methods!(
        add_scalar => Add, sub_scalar => Sub, mul_scalar => Mul, div_scalar => Div,
        pmin_scalar => Pmin, pmax_scalar => Pmax, eq_scalar => Eq, ne_scalar => Ne,
        lt_scalar => Lt, le_scalar => Le, gt_scalar => Gt, ge_scalar => Ge,
    );

    unary_methods!(
        sqrt => Sqrt, abs => Abs, exp => Exp, log => Log, log1p => Log1p,
        neg => Neg, square => Square, not => Not,
    );

    agg_methods!(
        sum, row_sums, col_sums => Sum,
        min_all, row_mins, col_mins => Min,
        max_all, row_maxs, col_maxs => Max,
        any, row_any, col_any => Any,
        all, row_all, col_all => All,
    );

    /// `s - A`, `s / A`, ...: the scalar on the left.
    pub fn scalar_op(&self, s: impl Into<Scalar>, f: BinaryFn) -> Result<Matrix> {
        self.sapply(MapFn::BindLeft(f, s.into()))
    }

    pub fn cast(&self, ty: ElemType) -> Result<Matrix> {
        if ty == self.elem_type() {
            return Ok(self.clone());
        }
        self.sapply(UnaryFn::Cast(ty))
    }

    /// Matrix product. Every element type goes through `inner_prod(*, +)`;
    /// `f64` tiles use the register-tiled kernel.
    pub fn matmul(&self, b: &Matrix) -> Result<Matrix> {
        self.inner_prod(b, BinaryFn::Mul, AggFn::Sum)
    }

    /// `t(A) %*% B` computed in one pass over the rows of both.
    pub fn crossprod(&self, b: &Matrix) -> Result<Matrix> {
        self.t().matmul(b)
    }

    pub fn col_means(&self) -> Result<Matrix> {
        self.col_sums()?.cast(ElemType::F64)?.div_scalar(self.nrow() as f64)
    }

    pub fn row_means(&self) -> Result<Matrix> {
        self.row_sums()?.cast(ElemType::F64)?.div_scalar(self.ncol() as f64)
    }

    /// Lazy column subset.
    pub fn subset_cols(&self, idx: &[usize]) -> Result<Matrix> {
        self.select_cols(idx)
    }

    /// Row subset; gathers eagerly into a new store.
    pub fn subset_rows(&self, idx: &[usize]) -> Result<Matrix> {
        if self.is_transposed() {
            return self.t().select_cols(idx).map(|m| m.t());
        }
        gather_rows(self, idx)
    }

    pub fn as_blocks(&self) -> Result<BlockMatrix> {
        BlockMatrix::from_matrix(self)
    }

    /// Column concatenation re-split into 32-column blocks.
    pub fn cbind_blocks(parts: &[Matrix]) -> Result<BlockMatrix> {
        BlockMatrix::from_matrix(&Matrix::cbind(parts)?)
    }

    /// Row concatenation; copies partitions into a new store.
    pub fn rbind(parts: &[Matrix]) -> Result<Matrix> {
        let first = parts.first().ok_or_else(|| Error::invalid("rbind of nothing"))?;
        let ty = parts.iter().fold(first.elem_type(), |t, m| t.promote(m.elem_type()));
        let mut stores = Vec::new();
        for m in parts {
            if m.ncol() != first.ncol() {
                return Err(Error::Shape {
                    op: "rbind",
                    left: first.shape(),
                    right: m.shape(),
                });
            }
            let m = m.cast(ty)?;
            let m = Matrix {
                node: m.tall_node()?,
                t: false,
            };
            m.materialize()?;
            stores.push(node_store(&m.node)?);
        }
        let engine = first.engine();
        let nrow: usize = stores.iter().map(|s| s.nrow()).sum();
        let mut w = RowWriter::new(engine, MatrixMeta::tall(nrow, first.ncol(), ty))?;
        for s in &stores {
            for p in 0..s.num_partitions() {
                let view = s.read_partitions(p, 1)?;
                let rows = s.partition_rows(p);
                w.push_rows(view.partition(0), s.meta().layout, rows, 0, rows)?;
            }
        }
        w.finish()
    }
}

/// Streams rows into a new store, filling partitions in order.
struct RowWriter {
    engine: Engine,
    store: TasStore,
    part: usize,
    filled: usize,
    buf: Option<PoolBuf>,
}

impl RowWriter {
    fn new(engine: &Engine, meta: MatrixMeta) -> Result<Self> {
        let store = engine.create_store(meta, engine.config().part_rows, engine.config().backing, "rows")?;
        Ok(RowWriter {
            engine: engine.clone(),
            store,
            part: 0,
            filled: 0,
            buf: None,
        })
    }

    /// Appends rows `r0..r0+count` of a source partition holding `rows` rows.
    fn push_rows(&mut self, src: &[u8], layout: Layout, rows: usize, r0: usize, count: usize) -> Result<()> {
        let meta = *self.store.meta();
        let esz = meta.elem_type.size();
        let ncol = meta.ncol;
        let mut done = 0;
        while done < count {
            if self.buf.is_none() {
                self.buf = Some(self.engine.pool().alloc(self.store.partition_bytes(self.part))?);
            }
            let prow = self.store.partition_rows(self.part);
            let take = (prow - self.filled).min(count - done);
            let dst = self.buf.as_mut().unwrap().bytes_mut();
            for c in 0..ncol {
                for i in 0..take {
                    let sr = r0 + done + i;
                    let s = match layout {
                        Layout::ColMajor => (c * rows + sr) * esz,
                        Layout::RowMajor => (sr * ncol + c) * esz,
                    };
                    let d = (c * prow + self.filled + i) * esz;
                    dst[d..d + esz].copy_from_slice(&src[s..s + esz]);
                }
            }
            self.filled += take;
            done += take;
            if self.filled == prow {
                self.store.put_partition(self.part, self.buf.take().unwrap())?;
                self.part += 1;
                self.filled = 0;
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<Matrix> {
        if self.part != self.store.num_partitions() {
            return Err(Error::invalid("row writer finished early"));
        }
        self.store.sync()?;
        Ok(Matrix::physical(&self.engine, Arc::new(self.store), false))
    }
}

/// Gathers rows of a tall matrix into a new store.
pub(crate) fn gather_rows(m: &Matrix, idx: &[usize]) -> Result<Matrix> {
    if idx.is_empty() {
        return Err(Error::invalid("empty row selection"));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= m.nrow()) {
        return Err(Error::invalid(format!("row {bad} out of range for {} rows", m.nrow())));
    }
    let m = Matrix {
        node: m.tall_node()?,
        t: false,
    };
    m.materialize()?;
    let src = node_store(&m.node)?;
    let engine = m.engine();
    let mut w = RowWriter::new(engine, MatrixMeta::tall(idx.len(), src.ncol(), src.meta().elem_type))?;
    let mut cached: Option<(usize, Vec<u8>)> = None;
    for &r in idx {
        let p = r / src.part_rows();
        if cached.as_ref().is_none_or(|(q, _)| *q != p) {
            cached = Some((p, src.read_partitions(p, 1)?.partition(0).to_vec()));
        }
        let bytes = &cached.as_ref().unwrap().1;
        w.push_rows(bytes, src.meta().layout, src.partition_rows(p), r % src.part_rows(), 1)?;
    }
    w.finish()
}
