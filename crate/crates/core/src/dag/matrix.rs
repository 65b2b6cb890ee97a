use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use super::node::{CacheWhere, Generator, Kind, Node};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::genops::{kernels, AggFn, BinaryFn, MapFn, UnaryFn};
use crate::storage::{Buffer, DenseMatrix, ElemType, MatrixMeta, Orientation, Scalar, TasStore};

/// Immutable handle to a physical, virtual or sink matrix.
///
/// A handle is a node plus a transpose flag; `t()` never moves elements.
#[derive(Clone)]
pub struct Matrix {
    pub(crate) node: Arc<Node>,
    pub(crate) t: bool,
}

pub type MatrixHandle = Matrix;

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Matrix(#{} {} {}x{} {}{})",
            self.node.id,
            self.node.tag(),
            self.nrow(),
            self.ncol(),
            self.elem_type(),
            if self.t { " t" } else { "" }
        )
    }
}

fn shape_err(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Error {
    Error::Shape { op, left, right }
}

impl Matrix {
    pub(crate) fn physical(engine: &Engine, store: Arc<TasStore>, t: bool) -> Matrix {
        let meta = *store.meta();
        let node = Node {
            id: engine.next_node_id(),
            engine: engine.clone(),
            kind: Kind::Physical,
            nrow: meta.nrow,
            ncol: meta.ncol,
            ty: meta.elem_type,
            inputs: Vec::new(),
            state: Vec::new(),
            store: OnceLock::from(store),
            sink: OnceLock::new(),
            cache: Mutex::new(None),
        };
        Matrix {
            node: Arc::new(node),
            t,
        }
    }

    /// Builds a node and returns its handle. In unfused mode the node is
    /// materialized immediately.
    pub(crate) fn lift(
        engine: &Engine,
        kind: Kind,
        shape: (usize, usize),
        ty: ElemType,
        inputs: Vec<Arc<Node>>,
        state: Vec<(Arc<Node>, bool)>,
    ) -> Result<Matrix> {
        let node = Arc::new(Node {
            id: engine.next_node_id(),
            engine: engine.clone(),
            kind,
            nrow: shape.0,
            ncol: shape.1,
            ty,
            inputs,
            state,
            store: OnceLock::new(),
            sink: OnceLock::new(),
            cache: Mutex::new(None),
        });
        if let Some(first) = node.inputs.first() {
            let len = first.nrow;
            if node.inputs.iter().any(|i| i.nrow != len) || (!node.is_sink() && node.nrow != len) {
                return Err(Error::invalid("inputs of one node must share the partition dimension"));
            }
        }
        if node.is_sink() {
            engine.register_pending(&node);
        }
        if !engine.is_fused() {
            crate::exec::materialize(engine, &node)?;
        }
        Ok(Matrix { node, t: false })
    }

    pub(crate) fn generator(engine: &Engine, gen: Generator, nrow: usize, ncol: usize, ty: ElemType) -> Result<Matrix> {
        if nrow == 0 || ncol == 0 {
            return Err(Error::invalid(format!("generated matrix must be at least 1x1, got {nrow}x{ncol}")));
        }
        Self::lift(engine, Kind::Gen(gen), (nrow, ncol), ty, Vec::new(), Vec::new())
    }

    pub fn engine(&self) -> &Engine {
        &self.node.engine
    }

    pub fn nrow(&self) -> usize {
        if self.t {
            self.node.ncol
        } else {
            self.node.nrow
        }
    }

    pub fn ncol(&self) -> usize {
        if self.t {
            self.node.nrow
        } else {
            self.node.ncol
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrow(), self.ncol())
    }

    pub fn len(&self) -> usize {
        self.nrow() * self.ncol()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn elem_type(&self) -> ElemType {
        self.node.ty
    }

    /// Logical metadata: a transposed handle reports swapped dimensions and
    /// flipped layout and orientation.
    pub fn meta(&self) -> MatrixMeta {
        let base = match self.node.store.get() {
            Some(s) => *s.meta(),
            None => MatrixMeta::tall(self.node.nrow, self.node.ncol, self.node.ty),
        };
        if self.t {
            base.transpose()
        } else {
            base
        }
    }

    /// Transpose view sharing the same node.
    pub fn t(&self) -> Matrix {
        Matrix {
            node: self.node.clone(),
            t: !self.t,
        }
    }

    pub fn is_transposed(&self) -> bool {
        self.t
    }

    pub fn is_sink(&self) -> bool {
        self.node.is_sink()
    }

    pub fn is_virtual(&self) -> bool {
        !self.node.is_sink() && !matches!(self.node.kind, Kind::Physical)
    }

    pub fn is_physical(&self) -> bool {
        matches!(self.node.kind, Kind::Physical)
    }

    pub fn is_materialized(&self) -> bool {
        self.node.is_done()
    }

    /// Whether both handles view the same node in the same orientation.
    pub fn same_as(&self, other: &Matrix) -> bool {
        Arc::ptr_eq(&self.node, &other.node) && self.t == other.t
    }

    pub fn node_id(&self) -> u64 {
        self.node.id
    }

    /// The backing store, once materialized (sinks have none until needed).
    pub fn store(&self) -> Option<Arc<TasStore>> {
        self.node.store.get().cloned()
    }

    /// Bytes retained by this matrix in memory.
    pub fn retained_bytes(&self) -> usize {
        let store = self.node.store.get().map_or(0, |s| s.resident_bytes());
        let sink = self.node.sink.get().map_or(0, |m| m.data().as_bytes().len());
        store + sink
    }

    /// A tall node holding the logical (untransposed) contents.
    pub(crate) fn tall_node(&self) -> Result<Arc<Node>> {
        if !self.t {
            return Ok(self.node.clone());
        }
        let local = self.to_local()?;
        let engine = self.engine();
        let store = engine.store_from_local(&local, engine.config().backing)?;
        Ok(Matrix::physical(engine, Arc::new(store), false).node)
    }

    /// The node `N` with `self == N` (`t == false`) or `self == t(N)`.
    pub(crate) fn node_as(&self, t: bool) -> Result<Arc<Node>> {
        if self.t == t {
            Ok(self.node.clone())
        } else if t {
            self.t().tall_node()
        } else {
            self.tall_node()
        }
    }

    /// A one-column node with `len` rows holding this vector.
    pub(crate) fn column_node(&self, op: &'static str, len: usize) -> Result<Arc<Node>> {
        if self.len() != len || (self.nrow() != 1 && self.ncol() != 1) {
            return Err(shape_err(op, (len, 1), self.shape()));
        }
        if self.node.ncol == 1 && self.node.nrow == len {
            return Ok(self.node.clone());
        }
        let local = self.to_local()?;
        let col = DenseMatrix::new(len, 1, local.into_data())?;
        let engine = self.engine();
        let store = engine.store_from_local(&col, engine.config().backing)?;
        Ok(Matrix::physical(engine, Arc::new(store), false).node)
    }

    fn vector_state(&self, op: &'static str, len: usize) -> Result<(Arc<Node>, bool)> {
        if self.len() != len || (self.nrow() != 1 && self.ncol() != 1) {
            return Err(shape_err(op, (1, len), self.shape()));
        }
        Ok((self.node.clone(), self.t))
    }

    fn wrap(m: Matrix, t: bool) -> Matrix {
        Matrix { node: m.node, t }
    }

    // ---- GenOps ----

    /// `C[i,j] = f(A[i,j])`.
    pub fn sapply(&self, f: impl Into<MapFn>) -> Result<Matrix> {
        let f = f.into();
        let ty = f.output_type(self.node.ty);
        let m = Self::lift(
            self.engine(),
            Kind::Sapply(f),
            (self.node.nrow, self.node.ncol),
            ty,
            vec![self.node.clone()],
            Vec::new(),
        )?;
        Ok(Self::wrap(m, self.t))
    }

    /// `C[i,j] = f(A[i,j], B[i,j])`.
    pub fn mapply(&self, b: &Matrix, f: BinaryFn) -> Result<Matrix> {
        if self.shape() != b.shape() {
            return Err(shape_err("mapply", self.shape(), b.shape()));
        }
        let bn = b.node_as(self.t)?;
        let ty = f.output_type(self.node.ty, bn.ty);
        let m = Self::lift(
            self.engine(),
            Kind::Mapply(f),
            (self.node.nrow, self.node.ncol),
            ty,
            vec![self.node.clone(), bn],
            Vec::new(),
        )?;
        Ok(Self::wrap(m, self.t))
    }

    /// `C[i,j] = f(A[i,j], v[j])`.
    pub fn mapply_row(&self, v: &Matrix, f: BinaryFn) -> Result<Matrix> {
        let ty = f.output_type(self.node.ty, v.elem_type());
        let shape = (self.node.nrow, self.node.ncol);
        let m = if self.t {
            let w = v.column_node("mapply_row", self.node.nrow)?;
            Self::lift(self.engine(), Kind::MapplyCol(f), shape, ty, vec![self.node.clone(), w], Vec::new())?
        } else {
            let s = v.vector_state("mapply_row", self.ncol())?;
            Self::lift(self.engine(), Kind::MapplyRow(f), shape, ty, vec![self.node.clone()], vec![s])?
        };
        Ok(Self::wrap(m, self.t))
    }

    /// `C[i,j] = f(A[i,j], w[i])`.
    pub fn mapply_col(&self, w: &Matrix, f: BinaryFn) -> Result<Matrix> {
        let ty = f.output_type(self.node.ty, w.elem_type());
        let shape = (self.node.nrow, self.node.ncol);
        let m = if self.t {
            let s = w.vector_state("mapply_col", self.nrow())?;
            Self::lift(self.engine(), Kind::MapplyRow(f), shape, ty, vec![self.node.clone()], vec![s])?
        } else {
            let wn = w.column_node("mapply_col", self.node.nrow)?;
            Self::lift(self.engine(), Kind::MapplyCol(f), shape, ty, vec![self.node.clone(), wn], Vec::new())?
        };
        Ok(Self::wrap(m, self.t))
    }

    /// Fold of every element into a 1×1 sink. Index-aware folds report the
    /// column-major linear index.
    pub fn agg(&self, g: AggFn) -> Result<Matrix> {
        Self::lift(
            self.engine(),
            Kind::Agg {
                g,
                row_major_index: self.t,
            },
            (1, 1),
            g.output_type(self.node.ty),
            vec![self.node.clone()],
            Vec::new(),
        )
    }

    /// Per-row fold, an `nrow×1` vector.
    pub fn agg_row(&self, g: AggFn) -> Result<Matrix> {
        let ty = g.output_type(self.node.ty);
        if self.t {
            Self::lift(self.engine(), Kind::AggCol(g), (self.node.ncol, 1), ty, vec![self.node.clone()], Vec::new())
        } else {
            Self::lift(self.engine(), Kind::AggRow(g), (self.node.nrow, 1), ty, vec![self.node.clone()], Vec::new())
        }
    }

    /// Per-column fold, an `ncol×1` vector.
    pub fn agg_col(&self, g: AggFn) -> Result<Matrix> {
        let ty = g.output_type(self.node.ty);
        if self.t {
            Self::lift(self.engine(), Kind::AggRow(g), (self.node.nrow, 1), ty, vec![self.node.clone()], Vec::new())
        } else {
            Self::lift(self.engine(), Kind::AggCol(g), (self.node.ncol, 1), ty, vec![self.node.clone()], Vec::new())
        }
    }

    fn check_group_fn(op: &'static str, g: AggFn, k: usize) -> Result<()> {
        if g.index_aware() {
            return Err(Error::Type {
                op,
                detail: format!("{} is not supported for grouped folds", g.name()),
            });
        }
        if k == 0 {
            return Err(Error::invalid(format!("{op} needs at least one group")));
        }
        Ok(())
    }

    /// `C[l] = fold of A[i,j]` with `L[i,j] == l`, a `k×1` sink.
    pub fn groupby(&self, labels: &Matrix, g: AggFn, k: usize) -> Result<Matrix> {
        Self::check_group_fn("groupby", g, k)?;
        if self.shape() != labels.shape() {
            return Err(shape_err("groupby", self.shape(), labels.shape()));
        }
        let ln = labels.node_as(self.t)?;
        Self::lift(
            self.engine(),
            Kind::Groupby { g, k },
            (k, 1),
            g.output_type(self.node.ty),
            vec![self.node.clone(), ln],
            Vec::new(),
        )
    }

    /// `C[l,j] = fold of A[i,j]` over rows with `r[i] == l`, a `k×ncol` matrix.
    pub fn groupby_row(&self, r: &Matrix, g: AggFn, k: usize) -> Result<Matrix> {
        Self::check_group_fn("groupby_row", g, k)?;
        let ty = g.output_type(self.node.ty);
        if self.t {
            let s = r.vector_state("groupby_row", self.nrow())?;
            let m = Self::lift(
                self.engine(),
                Kind::GroupbyCol { g, k },
                (self.node.nrow, k),
                ty,
                vec![self.node.clone()],
                vec![s],
            )?;
            Ok(Self::wrap(m, true))
        } else {
            let rn = r.column_node("groupby_row", self.node.nrow)?;
            Self::lift(
                self.engine(),
                Kind::GroupbyRow { g, k },
                (k, self.node.ncol),
                ty,
                vec![self.node.clone(), rn],
                Vec::new(),
            )
        }
    }

    /// `C[i,l] = fold of A[i,j]` over columns with `c[j] == l`, an `nrow×k` matrix.
    pub fn groupby_col(&self, c: &Matrix, g: AggFn, k: usize) -> Result<Matrix> {
        Self::check_group_fn("groupby_col", g, k)?;
        let ty = g.output_type(self.node.ty);
        if self.t {
            let cn = c.column_node("groupby_col", self.node.nrow)?;
            let m = Self::lift(
                self.engine(),
                Kind::GroupbyRow { g, k },
                (k, self.node.ncol),
                ty,
                vec![self.node.clone(), cn],
                Vec::new(),
            )?;
            Ok(Self::wrap(m, true))
        } else {
            let s = c.vector_state("groupby_col", self.ncol())?;
            Self::lift(
                self.engine(),
                Kind::GroupbyCol { g, k },
                (self.node.nrow, k),
                ty,
                vec![self.node.clone()],
                vec![s],
            )
        }
    }

    /// Generalized product: `t = f1(A[i,k], B[k,j])`, `C[i,j] = f2(t, C[i,j])`
    /// over `k` ascending.
    pub fn inner_prod(&self, b: &Matrix, f1: BinaryFn, f2: AggFn) -> Result<Matrix> {
        if self.ncol() != b.nrow() {
            return Err(shape_err("inner_prod", self.shape(), b.shape()));
        }
        if f2.index_aware() {
            return Err(Error::Type {
                op: "inner_prod",
                detail: format!("{} cannot combine products", f2.name()),
            });
        }
        let t_ty = f1.output_type(self.node.ty, b.elem_type());
        let ty = f2.output_type(t_ty);
        if !self.t {
            return Self::lift(
                self.engine(),
                Kind::InnerProd { f1, f2 },
                (self.node.nrow, b.ncol()),
                ty,
                vec![self.node.clone()],
                vec![(b.node.clone(), b.t)],
            );
        }
        if !b.t && b.node.nrow == self.node.nrow {
            return Self::lift(
                self.engine(),
                Kind::Crossprod { f1, f2 },
                (self.node.ncol, b.node.ncol),
                ty,
                vec![self.node.clone(), b.node.clone()],
                Vec::new(),
            );
        }
        if b.t && f1.is_commutative() {
            return Ok(b.t().inner_prod(&self.t(), f1, f2)?.t());
        }
        let a = Matrix {
            node: self.tall_node()?,
            t: false,
        };
        a.inner_prod(b, f1, f2)
    }

    // ---- structure ----

    /// Lazy column concatenation of matrices with equal row counts.
    pub fn cbind(parts: &[Matrix]) -> Result<Matrix> {
        let first = parts.first().ok_or_else(|| Error::invalid("cbind of nothing"))?;
        let ty = parts.iter().fold(first.elem_type(), |t, m| t.promote(m.elem_type()));
        let mut inputs = Vec::with_capacity(parts.len());
        let mut ncol = 0;
        for m in parts {
            if m.nrow() != first.nrow() {
                return Err(shape_err("cbind", first.shape(), m.shape()));
            }
            let m = if m.elem_type() != ty {
                m.sapply(UnaryFn::Cast(ty))?
            } else {
                m.clone()
            };
            inputs.push(m.node_as(false)?);
            ncol += m.ncol();
        }
        if inputs.len() == 1 {
            return Ok(Matrix {
                node: inputs.pop().unwrap(),
                t: false,
            });
        }
        Self::lift(first.engine(), Kind::Cbind, (first.nrow(), ncol), ty, inputs, Vec::new())
    }

    /// Lazy column selection; `idx` may repeat or reorder columns.
    pub fn select_cols(&self, idx: &[usize]) -> Result<Matrix> {
        if idx.is_empty() {
            return Err(Error::invalid("empty column selection"));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.ncol()) {
            return Err(Error::invalid(format!("column {bad} out of range for {} columns", self.ncol())));
        }
        if self.t {
            return crate::rbase::gather_rows(&self.t(), idx).map(|m| m.t());
        }
        Self::lift(
            self.engine(),
            Kind::SelectCols(idx.to_vec()),
            (self.node.nrow, idx.len()),
            self.node.ty,
            vec![self.node.clone()],
            Vec::new(),
        )
    }

    // ---- materialization ----

    /// Executes this matrix's DAG (plus any pending sinks that share it).
    pub fn materialize(&self) -> Result<Matrix> {
        crate::exec::materialize(self.engine(), &self.node)?;
        Ok(self.clone())
    }

    /// Retain this matrix when its DAG next runs.
    pub fn set_cache(&self, where_: CacheWhere) {
        if self.node.is_sink() {
            log::warn!("node #{} is a sink; sinks are always cached", self.node.id);
            return;
        }
        if matches!(self.node.kind, Kind::Physical) {
            return;
        }
        *self.node.cache.lock().unwrap() = Some(where_);
        self.engine().register_pending(&self.node);
    }

    /// Copies the matrix into a caller-owned row-major array.
    pub fn to_local(&self) -> Result<DenseMatrix> {
        let cap = self.engine().config().local_cap;
        self.to_local_capped(cap)
    }

    /// Like [`to_local`](Self::to_local) with an explicit byte cap.
    pub fn to_local_capped(&self, cap: usize) -> Result<DenseMatrix> {
        let bytes = self.len() * self.elem_type().size();
        if bytes > cap {
            return Err(Error::SizeCap { bytes, cap });
        }
        self.materialize()?;
        let m = node_local(&self.node)?;
        Ok(if self.t { m.transpose() } else { m })
    }

    /// Element `(0, 0)` as `f64`; convenient for aggregation results.
    pub fn value(&self) -> Result<f64> {
        Ok(self.to_local_capped(usize::MAX)?.get_f64(0, 0))
    }

    pub fn scalar(&self) -> Result<Scalar> {
        Ok(self.to_local_capped(usize::MAX)?.get(0, 0))
    }

    /// Column-major `f64` copy of a vector or matrix.
    pub fn to_vec_f64(&self) -> Result<Vec<f64>> {
        let m = self.to_local()?;
        Ok(m.transpose().to_f64_vec())
    }

    /// Writes the matrix as a native file. An unmaterialized matrix is
    /// first streamed into a temporary file rather than memory.
    pub fn save_native(&self, path: &Path) -> Result<()> {
        if !self.is_materialized() {
            self.set_cache(CacheWhere::File);
        }
        self.materialize()?;
        let store = node_store(&self.node)?;
        let orientation = if self.t { Orientation::Wide } else { Orientation::Tall };
        store.save_native(path, orientation)
    }

    /// Deterministic listing of the DAG feeding this matrix.
    pub fn dump(&self) -> String {
        super::dump::dump(std::slice::from_ref(&self.node))
    }

    /// One listing for several outputs, sharing node numbers.
    pub fn dump_all(outputs: &[Matrix]) -> String {
        let nodes: Vec<Arc<Node>> = outputs.iter().map(|m| m.node.clone()).collect();
        super::dump::dump(&nodes)
    }
}

/// Physical store of a materialized node; sink results are copied into a
/// memory store on first use.
pub(crate) fn node_store(node: &Arc<Node>) -> Result<Arc<TasStore>> {
    if let Some(s) = node.store.get() {
        return Ok(s.clone());
    }
    let local = node
        .sink
        .get()
        .ok_or_else(|| Error::invalid(format!("node #{} is not materialized", node.id)))?;
    let store = node
        .engine
        .store_from_local(local, crate::engine::BackingKind::Memory)?;
    let _ = node.store.set(Arc::new(store));
    Ok(node.store.get().unwrap().clone())
}

/// Row-major contents of a materialized node.
pub(crate) fn node_local(node: &Arc<Node>) -> Result<DenseMatrix> {
    if let Some(m) = node.sink.get() {
        return Ok(m.clone());
    }
    let store = node
        .store
        .get()
        .ok_or_else(|| Error::invalid(format!("node #{} is not materialized", node.id)))?;
    store_local(store)
}

pub(crate) fn store_local(store: &TasStore) -> Result<DenseMatrix> {
    let meta = *store.meta();
    let (n, p) = (meta.nrow, meta.ncol);
    let esz = meta.elem_type.size();
    let mut out = Buffer::zeros(meta.elem_type, n * p);
    let dst = out.as_bytes_mut();
    for part in 0..store.num_partitions() {
        let view = store.read_partitions(part, 1)?;
        let src = view.partition(0);
        let rows = store.partition_rows(part);
        let r0 = part * store.part_rows();
        for c in 0..p {
            for r in 0..rows {
                let s = match meta.layout {
                    crate::storage::Layout::ColMajor => (c * rows + r) * esz,
                    crate::storage::Layout::RowMajor => (r * p + c) * esz,
                };
                let d = ((r0 + r) * p + c) * esz;
                dst[d..d + esz].copy_from_slice(&src[s..s + esz]);
            }
        }
    }
    DenseMatrix::new(n, p, out)
}

/// Column-major replicated state for a small input.
pub(crate) fn state_mat(node: &Arc<Node>, t: bool) -> Result<kernels::StateMat> {
    let m = node_local(node)?;
    let m = if t { m.transpose() } else { m };
    Ok(kernels::StateMat::from_buffer(m.nrow(), m.ncol(), m.data()))
}
