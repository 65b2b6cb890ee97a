//! Cache-partition kernels.
//!
//! A tile is a column-major slice of rows of one matrix. Kernels read tiles
//! in an evaluation lane (`f64` or `i64`) and write the output element type.
//! Reduction kernels fold into [`Acc`] accumulators in a fixed order: the
//! sequence of `f(x, acc)` applications is the same regardless of how rows
//! are split into tiles, which keeps results bitwise reproducible.

use std::borrow::Cow;

use super::functions::{AggFn, BinaryFn, Lane, MapFn, UnaryFn};
use crate::error::{Error, Result};
use crate::storage::{Buffer, ElemType, Element};

/// A read-only column-major tile.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Tile<'a> {
    pub rows: usize,
    pub cols: usize,
    pub ty: ElemType,
    pub bytes: &'a [u8],
}

impl<'a> Tile<'a> {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn lane<L: LaneVal>(&self) -> Cow<'a, [L]> {
        L::read(&self.bytes[..self.len() * self.ty.size()], self.ty)
    }
}

/// Numeric lane a kernel evaluates in.
pub(crate) trait LaneVal: Copy + PartialOrd + Send + Sync + 'static + bytemuck::Pod {
    const LANE: Lane;
    fn read(bytes: &[u8], ty: ElemType) -> Cow<'_, [Self]>;
    fn write(vals: &[Self], ty: ElemType, out: &mut [u8]);
    fn bin(f: BinaryFn, x: Self, y: Self) -> Self;
    fn un(f: UnaryFn, x: Self) -> Self;
    fn agg(g: AggFn, x: Self, acc: Self) -> Self;
    fn identity(g: AggFn, input: ElemType) -> Self;
    fn from_f64(v: f64) -> Self;
    fn from_i64(v: i64) -> Self;
    /// Wraps an intermediate into the range of `ty`.
    fn narrow(self, ty: ElemType) -> Self;
}

fn convert_in<T: Element, L>(bytes: &[u8], conv: impl Fn(T) -> L) -> Vec<L> {
    bytes
        .chunks_exact(std::mem::size_of::<T>())
        .map(|c| conv(bytemuck::pod_read_unaligned::<T>(c)))
        .collect()
}

fn convert_out<T: Element, L: Copy>(vals: &[L], out: &mut [u8], conv: impl Fn(L) -> T) {
    let sz = std::mem::size_of::<T>();
    for (v, c) in vals.iter().zip(out.chunks_exact_mut(sz)) {
        c.copy_from_slice(bytemuck::bytes_of(&conv(*v)));
    }
}

fn try_cast<L: bytemuck::Pod>(bytes: &[u8]) -> Option<&[L]> {
    bytemuck::try_cast_slice(bytes).ok()
}

impl LaneVal for f64 {
    const LANE: Lane = Lane::F64;

    fn read(bytes: &[u8], ty: ElemType) -> Cow<'_, [f64]> {
        match ty {
            ElemType::F64 => match try_cast::<f64>(bytes) {
                Some(s) => Cow::Borrowed(s),
                None => Cow::Owned(convert_in::<f64, _>(bytes, |x| x)),
            },
            ElemType::I64 => Cow::Owned(convert_in::<i64, _>(bytes, |x| x as f64)),
            ElemType::I32 => Cow::Owned(convert_in::<i32, _>(bytes, |x| x as f64)),
            ElemType::U8 => Cow::Owned(bytes.iter().map(|&x| x as f64).collect()),
        }
    }

    fn write(vals: &[f64], ty: ElemType, out: &mut [u8]) {
        match ty {
            ElemType::F64 => convert_out::<f64, _>(vals, out, |x| x),
            ElemType::I64 => convert_out::<i64, _>(vals, out, |x| x as i64),
            ElemType::I32 => convert_out::<i32, _>(vals, out, |x| x as i32),
            ElemType::U8 => convert_out::<u8, _>(vals, out, |x| x as u8),
        }
    }

    #[inline(always)]
    fn bin(f: BinaryFn, x: f64, y: f64) -> f64 {
        f.eval_f64(x, y)
    }

    #[inline(always)]
    fn un(f: UnaryFn, x: f64) -> f64 {
        f.eval_f64(x)
    }

    #[inline(always)]
    fn agg(g: AggFn, x: f64, acc: f64) -> f64 {
        g.combine_f64(x, acc)
    }

    fn identity(g: AggFn, _input: ElemType) -> f64 {
        g.identity_f64()
    }

    fn from_f64(v: f64) -> f64 {
        v
    }

    #[inline(always)]
    fn narrow(self, _ty: ElemType) -> f64 {
        self
    }

    fn from_i64(v: i64) -> f64 {
        v as f64
    }
}

impl LaneVal for i64 {
    const LANE: Lane = Lane::I64;

    fn read(bytes: &[u8], ty: ElemType) -> Cow<'_, [i64]> {
        match ty {
            ElemType::I64 => match try_cast::<i64>(bytes) {
                Some(s) => Cow::Borrowed(s),
                None => Cow::Owned(convert_in::<i64, _>(bytes, |x| x)),
            },
            ElemType::F64 => Cow::Owned(convert_in::<f64, _>(bytes, |x| x as i64)),
            ElemType::I32 => Cow::Owned(convert_in::<i32, _>(bytes, |x| x as i64)),
            ElemType::U8 => Cow::Owned(bytes.iter().map(|&x| x as i64).collect()),
        }
    }

    fn write(vals: &[i64], ty: ElemType, out: &mut [u8]) {
        match ty {
            ElemType::F64 => convert_out::<f64, _>(vals, out, |x| x as f64),
            ElemType::I64 => convert_out::<i64, _>(vals, out, |x| x),
            ElemType::I32 => convert_out::<i32, _>(vals, out, |x| x as i32),
            ElemType::U8 => convert_out::<u8, _>(vals, out, |x| x as u8),
        }
    }

    #[inline(always)]
    fn bin(f: BinaryFn, x: i64, y: i64) -> i64 {
        f.eval_i64(x, y)
    }

    #[inline(always)]
    fn un(f: UnaryFn, x: i64) -> i64 {
        f.eval_i64(x)
    }

    #[inline(always)]
    fn agg(g: AggFn, x: i64, acc: i64) -> i64 {
        g.combine_i64(x, acc)
    }

    fn identity(g: AggFn, input: ElemType) -> i64 {
        g.identity_i64(input)
    }

    fn from_f64(v: f64) -> i64 {
        v as i64
    }

    fn from_i64(v: i64) -> i64 {
        v
    }

    #[inline(always)]
    fn narrow(self, ty: ElemType) -> i64 {
        match ty {
            ElemType::I32 => self as i32 as i64,
            ElemType::U8 => self as u8 as i64,
            _ => self,
        }
    }
}

/// Expands `$body` once per binary function with `$F` bound to a
/// compile-time constant, so the per-element match folds away.
macro_rules! with_bin {
    ($f:expr, $F:ident => $body:expr) => {
        match $f {
            BinaryFn::Add => { const $F: BinaryFn = BinaryFn::Add; $body }
            BinaryFn::Sub => { const $F: BinaryFn = BinaryFn::Sub; $body }
            BinaryFn::Mul => { const $F: BinaryFn = BinaryFn::Mul; $body }
            BinaryFn::Div => { const $F: BinaryFn = BinaryFn::Div; $body }
            BinaryFn::Pmin => { const $F: BinaryFn = BinaryFn::Pmin; $body }
            BinaryFn::Pmax => { const $F: BinaryFn = BinaryFn::Pmax; $body }
            BinaryFn::Eq => { const $F: BinaryFn = BinaryFn::Eq; $body }
            BinaryFn::Ne => { const $F: BinaryFn = BinaryFn::Ne; $body }
            BinaryFn::Lt => { const $F: BinaryFn = BinaryFn::Lt; $body }
            BinaryFn::Le => { const $F: BinaryFn = BinaryFn::Le; $body }
            BinaryFn::Gt => { const $F: BinaryFn = BinaryFn::Gt; $body }
            BinaryFn::Ge => { const $F: BinaryFn = BinaryFn::Ge; $body }
            BinaryFn::And => { const $F: BinaryFn = BinaryFn::And; $body }
            BinaryFn::Or => { const $F: BinaryFn = BinaryFn::Or; $body }
            BinaryFn::SqDiff => { const $F: BinaryFn = BinaryFn::SqDiff; $body }
        }
    };
}

macro_rules! with_agg {
    ($g:expr, $G:ident => $body:expr) => {
        match $g {
            AggFn::Sum => { const $G: AggFn = AggFn::Sum; $body }
            AggFn::Prod => { const $G: AggFn = AggFn::Prod; $body }
            AggFn::Min => { const $G: AggFn = AggFn::Min; $body }
            AggFn::Max => { const $G: AggFn = AggFn::Max; $body }
            AggFn::All => { const $G: AggFn = AggFn::All; $body }
            AggFn::Any => { const $G: AggFn = AggFn::Any; $body }
            AggFn::WhichMin => { const $G: AggFn = AggFn::WhichMin; $body }
            AggFn::WhichMax => { const $G: AggFn = AggFn::WhichMax; $body }
        }
    };
}

/// Runs `body` on an output lane buffer and stores it as `ty`.
fn emit<L: LaneVal>(out: &mut [u8], ty: ElemType, n: usize, body: impl FnOnce(&mut [L])) {
    let bytes = &mut out[..n * ty.size()];
    if ty.size() == 8 && (ty == ElemType::F64) == (L::LANE == Lane::F64) {
        if let Ok(s) = bytemuck::try_cast_slice_mut::<u8, L>(bytes) {
            body(s);
            return;
        }
    }
    let mut tmp = vec![L::from_i64(0); n];
    body(&mut tmp);
    L::write(&tmp, ty, bytes);
}

pub(crate) fn sapply(f: MapFn, a: &Tile, out_ty: ElemType, out: &mut [u8]) {
    match f.lane(a.ty) {
        Lane::F64 => sapply_lane::<f64>(f, a, out_ty, out),
        Lane::I64 => sapply_lane::<i64>(f, a, out_ty, out),
    }
}

fn sapply_lane<L: LaneVal>(f: MapFn, a: &Tile, out_ty: ElemType, out: &mut [u8]) {
    let x = a.lane::<L>();
    emit::<L>(out, out_ty, a.len(), |o| match f {
        MapFn::Unary(u) => {
            for (o, &x) in o.iter_mut().zip(x.iter()) {
                *o = L::un(u, x);
            }
        }
        MapFn::BindRight(b, s) => {
            let s = scalar_lane::<L>(s);
            with_bin!(b, F => for (o, &x) in o.iter_mut().zip(x.iter()) {
                *o = L::bin(F, x, s);
            })
        }
        MapFn::BindLeft(b, s) => {
            let s = scalar_lane::<L>(s);
            with_bin!(b, F => for (o, &x) in o.iter_mut().zip(x.iter()) {
                *o = L::bin(F, s, x);
            })
        }
    });
}

fn scalar_lane<L: LaneVal>(s: crate::storage::Scalar) -> L {
    match L::LANE {
        Lane::F64 => L::from_f64(s.as_f64()),
        Lane::I64 => L::from_i64(s.as_i64()),
    }
}

pub(crate) fn mapply(f: BinaryFn, a: &Tile, b: &Tile, out_ty: ElemType, out: &mut [u8]) {
    match f.lane(a.ty, b.ty) {
        Lane::F64 => mapply_lane::<f64>(f, a, b, out_ty, out),
        Lane::I64 => mapply_lane::<i64>(f, a, b, out_ty, out),
    }
}

fn mapply_lane<L: LaneVal>(f: BinaryFn, a: &Tile, b: &Tile, out_ty: ElemType, out: &mut [u8]) {
    let x = a.lane::<L>();
    let y = b.lane::<L>();
    emit::<L>(out, out_ty, a.len(), |o| {
        with_bin!(f, F => for ((o, &x), &y) in o.iter_mut().zip(x.iter()).zip(y.iter()) {
            *o = L::bin(F, x, y);
        })
    });
}

/// `C[i,j] = f(A[i,j], v[j])`; `v` holds one value per column.
pub(crate) fn mapply_row(f: BinaryFn, a: &Tile, v: &StateMat, out_ty: ElemType, out: &mut [u8]) {
    match f.lane(a.ty, v.ty) {
        Lane::F64 => mapply_row_lane::<f64>(f, a, v.f64s(), out_ty, out),
        Lane::I64 => mapply_row_lane::<i64>(f, a, v.i64s(), out_ty, out),
    }
}

fn mapply_row_lane<L: LaneVal>(f: BinaryFn, a: &Tile, v: &[L], out_ty: ElemType, out: &mut [u8]) {
    let x = a.lane::<L>();
    let rows = a.rows;
    emit::<L>(out, out_ty, a.len(), |o| {
        for c in 0..a.cols {
            let s = v[c];
            let xs = &x[c * rows..(c + 1) * rows];
            let os = &mut o[c * rows..(c + 1) * rows];
            with_bin!(f, F => for (o, &x) in os.iter_mut().zip(xs) {
                *o = L::bin(F, x, s);
            })
        }
    });
}

/// `C[i,j] = f(A[i,j], w[i])`; `w` is a one-column tile over the same rows.
pub(crate) fn mapply_col(f: BinaryFn, a: &Tile, w: &Tile, out_ty: ElemType, out: &mut [u8]) {
    match f.lane(a.ty, w.ty) {
        Lane::F64 => mapply_col_lane::<f64>(f, a, w, out_ty, out),
        Lane::I64 => mapply_col_lane::<i64>(f, a, w, out_ty, out),
    }
}

fn mapply_col_lane<L: LaneVal>(f: BinaryFn, a: &Tile, w: &Tile, out_ty: ElemType, out: &mut [u8]) {
    let x = a.lane::<L>();
    let y = w.lane::<L>();
    let rows = a.rows;
    emit::<L>(out, out_ty, a.len(), |o| {
        for c in 0..a.cols {
            let xs = &x[c * rows..(c + 1) * rows];
            let os = &mut o[c * rows..(c + 1) * rows];
            with_bin!(f, F => for ((o, &x), &y) in os.iter_mut().zip(xs).zip(y.iter()) {
                *o = L::bin(F, x, y);
            })
        }
    });
}

/// Row-wise fold over columns in ascending order; index-aware folds emit the
/// column index.
pub(crate) fn agg_row(g: AggFn, a: &Tile, out_ty: ElemType, out: &mut [u8]) -> Result<()> {
    match g.lane(a.ty) {
        Lane::F64 => agg_row_lane::<f64>(g, a, out_ty, out),
        Lane::I64 => agg_row_lane::<i64>(g, a, out_ty, out),
    }
}

fn agg_row_lane<L: LaneVal>(g: AggFn, a: &Tile, out_ty: ElemType, out: &mut [u8]) -> Result<()> {
    let x = a.lane::<L>();
    let rows = a.rows;
    if g.index_aware() {
        let mut best = vec![L::from_i64(0); rows];
        let mut idx = vec![-1i64; rows];
        for c in 0..a.cols {
            let xs = &x[c * rows..(c + 1) * rows];
            for r in 0..rows {
                if g.which_takes(xs[r], c as i64, best[r], idx[r]) {
                    best[r] = xs[r];
                    idx[r] = c as i64;
                }
            }
        }
        if idx.iter().any(|&i| i < 0) {
            return Err(Error::EmptyFold(g.name()));
        }
        i64::write(&idx, out_ty, &mut out[..rows * out_ty.size()]);
        return Ok(());
    }
    let id = L::identity(g, a.ty);
    emit::<L>(out, out_ty, rows, |o| {
        o.fill(id);
        with_agg!(g, G => for c in 0..a.cols {
            let xs = &x[c * rows..(c + 1) * rows];
            for (o, &x) in o.iter_mut().zip(xs) {
                *o = L::agg(G, x, *o);
            }
        })
    });
    Ok(())
}

/// Converts a label tile into group indices, validating `0 <= label < k`.
pub(crate) fn labels(op: &'static str, t: &Tile, k: usize) -> Result<Vec<usize>> {
    let vals: Vec<i64> = match t.ty {
        ElemType::F64 => {
            let v = t.lane::<f64>();
            let mut out = Vec::with_capacity(v.len());
            for &x in v.iter() {
                if x.fract() != 0.0 || !x.is_finite() {
                    return Err(Error::Type {
                        op,
                        detail: format!("label {x} is not an integer"),
                    });
                }
                out.push(x as i64);
            }
            out
        }
        _ => t.lane::<i64>().into_owned(),
    };
    check_labels(op, &vals, k)
}

pub(crate) fn check_labels(op: &'static str, vals: &[i64], k: usize) -> Result<Vec<usize>> {
    vals.iter()
        .map(|&l| {
            if l < 0 || l as u64 >= k as u64 {
                Err(Error::Label { op, label: l, k })
            } else {
                Ok(l as usize)
            }
        })
        .collect()
}

/// `C[i,g] = fold of A[i,j]` over columns `j` with label `g`.
pub(crate) fn groupby_col(
    g: AggFn,
    k: usize,
    labels: &[usize],
    a: &Tile,
    out_ty: ElemType,
    out: &mut [u8],
) {
    match g.lane(a.ty) {
        Lane::F64 => groupby_col_lane::<f64>(g, k, labels, a, out_ty, out),
        Lane::I64 => groupby_col_lane::<i64>(g, k, labels, a, out_ty, out),
    }
}

fn groupby_col_lane<L: LaneVal>(
    g: AggFn,
    k: usize,
    labels: &[usize],
    a: &Tile,
    out_ty: ElemType,
    out: &mut [u8],
) {
    let x = a.lane::<L>();
    let rows = a.rows;
    let id = L::identity(g, a.ty);
    emit::<L>(out, out_ty, rows * k, |o| {
        o.fill(id);
        with_agg!(g, G => for c in 0..a.cols {
            let grp = labels[c];
            let xs = &x[c * rows..(c + 1) * rows];
            let os = &mut o[grp * rows..(grp + 1) * rows];
            for (o, &x) in os.iter_mut().zip(xs) {
                *o = L::agg(G, x, *o);
            }
        })
    });
}

/// A small matrix replicated read-only to every worker, column-major, held
/// in both lanes.
#[derive(Clone, Debug)]
pub(crate) struct StateMat {
    pub rows: usize,
    pub cols: usize,
    pub ty: ElemType,
    f: Vec<f64>,
    i: Vec<i64>,
}

impl StateMat {
    /// From row-major values.
    pub fn from_buffer(rows: usize, cols: usize, data: &Buffer) -> Self {
        let f = data.to_f64_vec();
        let i = data.to_i64_vec();
        let mut fc = vec![0.0; rows * cols];
        let mut ic = vec![0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                fc[c * rows + r] = f[r * cols + c];
                ic[c * rows + r] = i[r * cols + c];
            }
        }
        StateMat {
            rows,
            cols,
            ty: data.elem_type(),
            f: fc,
            i: ic,
        }
    }

    pub fn f64s(&self) -> &[f64] {
        &self.f
    }

    pub fn i64s(&self) -> &[i64] {
        &self.i
    }

    fn lane<L: LaneVal>(&self) -> &[L] {
        match L::LANE {
            Lane::F64 => bytemuck::cast_slice(&self.f),
            Lane::I64 => bytemuck::cast_slice(&self.i),
        }
    }
}

/// `C = A ⊗ B` with `t = f1(A[i,k], B[k,j])`, `C[i,j] = f2(t, C[i,j])`,
/// `k` ascending. `B` is replicated state.
pub(crate) fn inner_prod(
    f1: BinaryFn,
    f2: AggFn,
    a: &Tile,
    b: &StateMat,
    out_ty: ElemType,
    out: &mut [u8],
) {
    let t_ty = f1.output_type(a.ty, b.ty);
    match f1.lane(a.ty, b.ty) {
        Lane::F64 => {
            if f1 == BinaryFn::Mul && f2 == AggFn::Sum {
                let x = a.lane::<f64>();
                emit::<f64>(out, out_ty, a.rows * b.cols, |o| {
                    matmul_tiled(&x, a.rows, b.f64s(), b.rows, b.cols, o)
                });
            } else {
                inner_prod_lane::<f64>(f1, f2, t_ty, a, b, out_ty, out)
            }
        }
        Lane::I64 => inner_prod_lane::<i64>(f1, f2, t_ty, a, b, out_ty, out),
    }
}

fn inner_prod_lane<L: LaneVal>(
    f1: BinaryFn,
    f2: AggFn,
    t_ty: ElemType,
    a: &Tile,
    b: &StateMat,
    out_ty: ElemType,
    out: &mut [u8],
) {
    let x = a.lane::<L>();
    let bv = b.lane::<L>();
    let rows = a.rows;
    let m = b.rows;
    let id = L::identity(f2, t_ty);
    emit::<L>(out, out_ty, rows * b.cols, |o| {
        with_bin!(f1, F => with_agg!(f2, G => for j in 0..b.cols {
            let acc = &mut o[j * rows..(j + 1) * rows];
            acc.fill(id);
            for kk in 0..m {
                let s = bv[j * m + kk];
                let xs = &x[kk * rows..(kk + 1) * rows];
                for (acc, &x) in acc.iter_mut().zip(xs) {
                    *acc = L::agg(G, L::bin(F, x, s).narrow(t_ty), *acc);
                }
            }
        }))
    });
}

const TILE: usize = 8;

/// Register-tiled `f64` product of a column-major `rows×m` tile with a
/// column-major `m×p` matrix. Each output accumulates `k` in ascending order
/// starting from `0.0`, exactly like the naive triple loop.
pub(crate) fn matmul_tiled(x: &[f64], rows: usize, b: &[f64], m: usize, p: usize, out: &mut [f64]) {
    let mut j0 = 0;
    while j0 < p {
        let jn = TILE.min(p - j0);
        let mut r0 = 0;
        while r0 + TILE <= rows && jn == TILE {
            let mut acc = [[0.0f64; TILE]; TILE];
            for kk in 0..m {
                let xs = &x[kk * rows + r0..kk * rows + r0 + TILE];
                for (jj, accj) in acc.iter_mut().enumerate() {
                    let s = b[(j0 + jj) * m + kk];
                    for (a, &xv) in accj.iter_mut().zip(xs) {
                        *a += xv * s;
                    }
                }
            }
            for (jj, accj) in acc.iter().enumerate() {
                out[(j0 + jj) * rows + r0..(j0 + jj) * rows + r0 + TILE].copy_from_slice(accj);
            }
            r0 += TILE;
        }
        for j in j0..j0 + jn {
            let o = &mut out[j * rows + r0..(j + 1) * rows];
            o.fill(0.0);
            for kk in 0..m {
                let s = b[j * m + kk];
                let xs = &x[kk * rows + r0..(kk + 1) * rows];
                for (o, &xv) in o.iter_mut().zip(xs) {
                    *o += xv * s;
                }
            }
        }
        j0 += jn;
    }
}

/// Copies selected columns of a tile.
pub(crate) fn select_cols(idx: &[usize], a: &Tile, out: &mut [u8]) {
    let cb = a.rows * a.ty.size();
    for (o, &c) in idx.iter().enumerate() {
        out[o * cb..(o + 1) * cb].copy_from_slice(&a.bytes[c * cb..(c + 1) * cb]);
    }
}

/// Writes tiles side by side; inputs already have the output type.
pub(crate) fn cbind(inputs: &[Tile], out: &mut [u8]) {
    let mut off = 0;
    for t in inputs {
        let n = t.len() * t.ty.size();
        out[off..off + n].copy_from_slice(&t.bytes[..n]);
        off += n;
    }
}

/// Partial state of a reduction.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Acc {
    F(Vec<f64>),
    I(Vec<i64>),
    WhichF(Vec<f64>, Vec<i64>),
    WhichI(Vec<i64>, Vec<i64>),
}

impl Acc {
    /// An accumulator of `len` identity values folding `input`-typed elements
    /// in `lane`.
    pub fn new(g: AggFn, lane: Lane, input: ElemType, len: usize) -> Acc {
        match (lane, g.index_aware()) {
            (Lane::F64, false) => Acc::F(vec![g.identity_f64(); len]),
            (Lane::I64, false) => Acc::I(vec![g.identity_i64(input); len]),
            (Lane::F64, true) => Acc::WhichF(vec![f64::NAN; len], vec![-1; len]),
            (Lane::I64, true) => Acc::WhichI(vec![0; len], vec![-1; len]),
        }
    }

    /// Folds `other` (a later partial) into `self` elementwise as `f(other, self)`.
    pub fn merge(&mut self, g: AggFn, other: &Acc) {
        match (self, other) {
            (Acc::F(a), Acc::F(b)) => a.iter_mut().zip(b).for_each(|(a, &b)| *a = g.combine_f64(b, *a)),
            (Acc::I(a), Acc::I(b)) => a.iter_mut().zip(b).for_each(|(a, &b)| *a = g.combine_i64(b, *a)),
            (Acc::WhichF(av, ai), Acc::WhichF(bv, bi)) => merge_which(g, av, ai, bv, bi),
            (Acc::WhichI(av, ai), Acc::WhichI(bv, bi)) => merge_which(g, av, ai, bv, bi),
            _ => unreachable!("accumulator kinds differ"),
        }
    }

    /// Converts to the output buffer.
    pub fn finish(self, g: AggFn, out_ty: ElemType) -> Result<Buffer> {
        let idx = match self {
            Acc::F(v) => return Ok(cast_buffer(Buffer::F64(v), out_ty)),
            Acc::I(v) => return Ok(cast_buffer(Buffer::I64(v), out_ty)),
            Acc::WhichF(_, i) | Acc::WhichI(_, i) => i,
        };
        if idx.iter().any(|&i| i < 0) {
            return Err(Error::EmptyFold(g.name()));
        }
        Ok(Buffer::I64(idx))
    }
}

fn merge_which<T: PartialOrd + Copy>(g: AggFn, av: &mut [T], ai: &mut [i64], bv: &[T], bi: &[i64]) {
    for r in 0..av.len() {
        if bi[r] >= 0 && g.which_takes(bv[r], bi[r], av[r], ai[r]) {
            av[r] = bv[r];
            ai[r] = bi[r];
        }
    }
}

pub(crate) fn cast_buffer(b: Buffer, ty: ElemType) -> Buffer {
    if b.elem_type() == ty {
        return b;
    }
    match b {
        Buffer::F64(v) => {
            let mut out = Buffer::zeros(ty, v.len());
            f64::write(&v, ty, out.as_bytes_mut());
            out
        }
        other => {
            let v = other.to_i64_vec();
            let mut out = Buffer::zeros(ty, v.len());
            i64::write(&v, ty, out.as_bytes_mut());
            out
        }
    }
}

macro_rules! with_acc {
    ($acc:expr, $v:ident, $L:ident => $body:expr, $vi:ident, $ii:ident => $wbody:expr) => {
        match $acc {
            Acc::F($v) => {
                #[allow(dead_code)]
                type $L = f64;
                $body
            }
            Acc::I($v) => {
                #[allow(dead_code)]
                type $L = i64;
                $body
            }
            Acc::WhichF($vi, $ii) => {
                #[allow(dead_code)]
                type $L = f64;
                $wbody
            }
            Acc::WhichI($vi, $ii) => {
                #[allow(dead_code)]
                type $L = i64;
                $wbody
            }
        }
    };
}

/// Whole-matrix fold, row-major over the tile. `index(r, c)` gives the
/// reported index of tile element `(r, c)`.
pub(crate) fn fold_agg(g: AggFn, acc: &mut Acc, a: &Tile, index: impl Fn(usize, usize) -> i64) {
    let rows = a.rows;
    with_acc!(acc, v, L => {
        let x = a.lane::<L>();
        let mut s = v[0];
        with_agg!(g, G => for r in 0..rows {
            for c in 0..a.cols {
                s = L::agg(G, x[c * rows + r], s);
            }
        });
        v[0] = s;
    }, bv, bi => {
        let x = a.lane::<L>();
        for r in 0..rows {
            for c in 0..a.cols {
                let xv = x[c * rows + r];
                let xi = index(r, c);
                if g.which_takes(xv, xi, bv[0], bi[0]) {
                    bv[0] = xv;
                    bi[0] = xi;
                }
            }
        }
    })
}

/// Per-column fold over rows; `row0` is the global index of the tile's first row.
pub(crate) fn fold_agg_col(g: AggFn, acc: &mut Acc, a: &Tile, row0: usize) {
    let rows = a.rows;
    with_acc!(acc, v, L => {
        let x = a.lane::<L>();
        with_agg!(g, G => for c in 0..a.cols {
            let mut s = v[c];
            for &xv in &x[c * rows..(c + 1) * rows] {
                s = L::agg(G, xv, s);
            }
            v[c] = s;
        })
    }, bv, bi => {
        let x = a.lane::<L>();
        for c in 0..a.cols {
            for r in 0..rows {
                let xv = x[c * rows + r];
                let xi = (row0 + r) as i64;
                if g.which_takes(xv, xi, bv[c], bi[c]) {
                    bv[c] = xv;
                    bi[c] = xi;
                }
            }
        }
    })
}

/// Fold of `A[i,j]` into group `L[i,j]`, row-major over the tile.
pub(crate) fn fold_groupby(g: AggFn, acc: &mut Acc, a: &Tile, lab: &[usize]) {
    let rows = a.rows;
    with_acc!(acc, v, L => {
        let x = a.lane::<L>();
        with_agg!(g, G => for r in 0..rows {
            for c in 0..a.cols {
                let i = c * rows + r;
                let grp = lab[i];
                v[grp] = L::agg(G, x[i], v[grp]);
            }
        })
    }, _bv, _bi => unreachable!("index-aware groupby is rejected at lift"))
}

/// Fold of row `i` into group row `r[i]`; accumulator is `k×p` column-major.
pub(crate) fn fold_groupby_row(g: AggFn, k: usize, acc: &mut Acc, a: &Tile, lab: &[usize]) {
    let rows = a.rows;
    with_acc!(acc, v, L => {
        let x = a.lane::<L>();
        with_agg!(g, G => for c in 0..a.cols {
            let vc = &mut v[c * k..(c + 1) * k];
            for (&xv, &grp) in x[c * rows..(c + 1) * rows].iter().zip(lab) {
                vc[grp] = L::agg(G, xv, vc[grp]);
            }
        })
    }, _bv, _bi => unreachable!("index-aware groupby is rejected at lift"))
}

/// `C[i,j] = f2(f1(A[r,i], B[r,j]), C[i,j])` over tile rows `r`; `C` is
/// `m×p` column-major. With `upper_only` only `i <= j` is computed.
pub(crate) fn fold_crossprod(
    f1: BinaryFn,
    f2: AggFn,
    acc: &mut Acc,
    a: &Tile,
    b: &Tile,
    upper_only: bool,
) {
    let rows = a.rows;
    let m = a.cols;
    let t_ty = f1.output_type(a.ty, b.ty);
    with_acc!(acc, v, L => {
        let x = a.lane::<L>();
        let y = b.lane::<L>();
        with_bin!(f1, F => with_agg!(f2, G => for j in 0..b.cols {
            let yj = &y[j * rows..(j + 1) * rows];
            let top = if upper_only { j + 1 } else { m };
            for i in 0..top {
                let xi = &x[i * rows..(i + 1) * rows];
                let mut s = v[j * m + i];
                for (&xv, &yv) in xi.iter().zip(yj) {
                    s = L::agg(G, L::bin(F, xv, yv).narrow(t_ty), s);
                }
                v[j * m + i] = s;
            }
        }))
    }, _bv, _bi => unreachable!("index-aware inner product is rejected at lift"))
}

/// Copies the upper triangle of an `m×m` column-major accumulator down.
pub(crate) fn mirror_upper(acc: &mut Acc, m: usize) {
    fn go<T: Copy>(v: &mut [T], m: usize) {
        for j in 0..m {
            for i in j + 1..m {
                v[j * m + i] = v[i * m + j];
            }
        }
    }
    match acc {
        Acc::F(v) => go(v, m),
        Acc::I(v) => go(v, m),
        _ => {}
    }
}
