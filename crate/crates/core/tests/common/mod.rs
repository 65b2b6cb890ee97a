//! Shared test support: a naive single-threaded reference evaluator for the
//! generalized operations, random instance generators, and small helpers.
#![allow(dead_code)]

use std::path::Path;

use oocmat::genops::{AggFn, BinaryFn, GenOpKind, MapFn, UnaryFn};
use oocmat::storage::{Buffer, DenseMatrix, ElemType, Scalar};
use oocmat::{BackingKind, Engine, EngineConfig, Error, Matrix};
use proptest::prelude::*;

pub mod oracles;
pub mod programs;

pub const F64_REL_TOL: f64 = 1e-12;

pub fn engine_with(workers: usize, part_rows: usize, cache_budget: usize) -> Engine {
    Engine::new(EngineConfig {
        workers,
        part_rows,
        cache_budget,
        chunk_bytes: 1 << 20,
        memory_budget: 256 << 20,
        ..EngineConfig::default()
    })
    .unwrap()
}

pub fn file_engine(dir: &Path, workers: usize, part_rows: usize) -> Engine {
    Engine::new(EngineConfig {
        workers,
        part_rows,
        chunk_bytes: 1 << 20,
        memory_budget: 256 << 20,
        backing: BackingKind::File,
        tmpdir: dir.to_path_buf(),
        ..EngineConfig::default()
    })
    .unwrap()
}

// ---- reference values ----

/// One element in its evaluation lane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum V {
    F(f64),
    I(i64),
}

impl V {
    pub fn f(self) -> f64 {
        match self {
            V::F(x) => x,
            V::I(x) => x as f64,
        }
    }

    pub fn i(self) -> i64 {
        match self {
            V::F(x) => x as i64,
            V::I(x) => x,
        }
    }
}

/// Row-major matrix of typed values.
#[derive(Clone, Debug)]
pub struct Mat {
    pub n: usize,
    pub p: usize,
    pub ty: ElemType,
    pub v: Vec<V>,
}

impl Mat {
    pub fn get(&self, i: usize, j: usize) -> V {
        self.v[i * self.p + j]
    }

    pub fn column(ty: ElemType, v: Vec<V>) -> Mat {
        Mat { n: v.len(), p: 1, ty, v }
    }

    pub fn transpose(&self) -> Mat {
        let mut v = Vec::with_capacity(self.v.len());
        for j in 0..self.p {
            for i in 0..self.n {
                v.push(self.get(i, j));
            }
        }
        Mat { n: self.p, p: self.n, ty: self.ty, v }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let buf = match self.ty {
            ElemType::F64 => Buffer::F64(self.v.iter().map(|x| x.f()).collect()),
            ElemType::I64 => Buffer::I64(self.v.iter().map(|x| x.i()).collect()),
            ElemType::I32 => Buffer::I32(self.v.iter().map(|x| x.i() as i32).collect()),
            ElemType::U8 => Buffer::U8(self.v.iter().map(|x| x.i() as u8).collect()),
        };
        DenseMatrix::new(self.n, self.p, buf).unwrap()
    }

    pub fn from_dense(d: &DenseMatrix) -> Mat {
        let v = match d.elem_type() {
            ElemType::F64 => d.to_f64_vec().into_iter().map(V::F).collect(),
            _ => d.to_i64_vec().into_iter().map(V::I).collect(),
        };
        Mat {
            n: d.nrow(),
            p: d.ncol(),
            ty: d.elem_type(),
            v,
        }
    }

    /// Loads into an engine, optionally as the transpose of a stored wide matrix.
    pub fn lift(&self, e: &Engine, transposed: bool) -> Matrix {
        if transposed {
            e.from_local(&self.transpose().to_dense()).unwrap().t()
        } else {
            e.from_local(&self.to_dense()).unwrap()
        }
    }
}

fn rank(t: ElemType) -> u8 {
    match t {
        ElemType::U8 => 0,
        ElemType::I32 => 1,
        ElemType::I64 => 2,
        ElemType::F64 => 3,
    }
}

pub fn promote(a: ElemType, b: ElemType) -> ElemType {
    if rank(a) >= rank(b) {
        a
    } else {
        b
    }
}

/// Converts a lane value to storage type `ty` (integers wrap, floats saturate).
pub fn store(ty: ElemType, x: V) -> V {
    match (ty, x) {
        (ElemType::F64, x) => V::F(x.f()),
        (ElemType::I64, V::F(x)) => V::I(x as i64),
        (ElemType::I32, V::F(x)) => V::I(x as i32 as i64),
        (ElemType::U8, V::F(x)) => V::I(x as u8 as i64),
        (ElemType::I64, V::I(x)) => V::I(x),
        (ElemType::I32, V::I(x)) => V::I(x as i32 as i64),
        (ElemType::U8, V::I(x)) => V::I(x as u8 as i64),
    }
}

fn b2v(b: bool) -> i64 {
    b as i64
}

pub fn unary_type(f: UnaryFn, ty: ElemType) -> ElemType {
    match f {
        UnaryFn::Sqrt | UnaryFn::Exp | UnaryFn::Log | UnaryFn::Log1p => ElemType::F64,
        UnaryFn::Not => ElemType::U8,
        UnaryFn::Cast(t) => t,
        _ => ty,
    }
}

pub fn unary(f: UnaryFn, ty: ElemType, x: V) -> V {
    let out = unary_type(f, ty);
    let float = ty == ElemType::F64 || out == ElemType::F64 && !matches!(f, UnaryFn::Cast(_));
    if float {
        let x = x.f();
        let r = match f {
            UnaryFn::Identity | UnaryFn::Cast(_) => x,
            UnaryFn::Neg => -x,
            UnaryFn::Abs => x.abs(),
            UnaryFn::Sqrt => x.sqrt(),
            UnaryFn::Exp => x.exp(),
            UnaryFn::Log => x.ln(),
            UnaryFn::Log1p => x.ln_1p(),
            UnaryFn::Square => x * x,
            UnaryFn::Not => b2v(x == 0.0) as f64,
        };
        store(out, V::F(r))
    } else {
        let x = x.i();
        let r = match f {
            UnaryFn::Identity | UnaryFn::Cast(_) => x,
            UnaryFn::Neg => 0i64.wrapping_sub(x),
            UnaryFn::Abs => {
                if x < 0 {
                    0i64.wrapping_sub(x)
                } else {
                    x
                }
            }
            UnaryFn::Square => x.wrapping_mul(x),
            UnaryFn::Not => b2v(x == 0),
            _ => unreachable!(),
        };
        store(out, V::I(r))
    }
}

pub fn binary_type(f: BinaryFn, a: ElemType, b: ElemType) -> ElemType {
    use BinaryFn::*;
    match f {
        Div => ElemType::F64,
        Eq | Ne | Lt | Le | Gt | Ge | And | Or => ElemType::U8,
        _ => promote(a, b),
    }
}

pub fn binary(f: BinaryFn, ta: ElemType, a: V, tb: ElemType, b: V) -> V {
    use BinaryFn::*;
    let out = binary_type(f, ta, tb);
    if f == Div || ta == ElemType::F64 || tb == ElemType::F64 {
        let (x, y) = (a.f(), b.f());
        let r = match f {
            Add => x + y,
            Sub => x - y,
            Mul => x * y,
            Div => x / y,
            Pmin => {
                if x.is_nan() || y.is_nan() {
                    f64::NAN
                } else if y < x {
                    y
                } else {
                    x
                }
            }
            Pmax => {
                if x.is_nan() || y.is_nan() {
                    f64::NAN
                } else if y > x {
                    y
                } else {
                    x
                }
            }
            Eq => b2v(x == y) as f64,
            Ne => b2v(x != y) as f64,
            Lt => b2v(x < y) as f64,
            Le => b2v(x <= y) as f64,
            Gt => b2v(x > y) as f64,
            Ge => b2v(x >= y) as f64,
            And => b2v(x != 0.0 && y != 0.0) as f64,
            Or => b2v(x != 0.0 || y != 0.0) as f64,
            SqDiff => (x - y) * (x - y),
        };
        store(out, V::F(r))
    } else {
        let (x, y) = (a.i(), b.i());
        let r = match f {
            Add => x.wrapping_add(y),
            Sub => x.wrapping_sub(y),
            Mul => x.wrapping_mul(y),
            Div => unreachable!(),
            Pmin => x.min(y),
            Pmax => x.max(y),
            Eq => b2v(x == y),
            Ne => b2v(x != y),
            Lt => b2v(x < y),
            Le => b2v(x <= y),
            Gt => b2v(x > y),
            Ge => b2v(x >= y),
            And => b2v(x != 0 && y != 0),
            Or => b2v(x != 0 || y != 0),
            SqDiff => x.wrapping_sub(y).wrapping_mul(x.wrapping_sub(y)),
        };
        store(out, V::I(r))
    }
}

pub fn map(f: MapFn, ty: ElemType, x: V) -> V {
    match f {
        MapFn::Unary(u) => unary(u, ty, x),
        MapFn::BindRight(b, s) => binary(b, ty, x, s.elem_type(), scalar_v(s)),
        MapFn::BindLeft(b, s) => binary(b, s.elem_type(), scalar_v(s), ty, x),
    }
}

pub fn map_type(f: MapFn, ty: ElemType) -> ElemType {
    match f {
        MapFn::Unary(u) => unary_type(u, ty),
        MapFn::BindRight(b, s) => binary_type(b, ty, s.elem_type()),
        MapFn::BindLeft(b, s) => binary_type(b, s.elem_type(), ty),
    }
}

fn scalar_v(s: Scalar) -> V {
    match s {
        Scalar::F64(x) => V::F(x),
        other => V::I(other.as_i64()),
    }
}

pub fn agg_type(g: AggFn, ty: ElemType) -> ElemType {
    match g {
        AggFn::Sum | AggFn::Prod => {
            if ty == ElemType::F64 {
                ElemType::F64
            } else {
                ElemType::I64
            }
        }
        AggFn::Min | AggFn::Max => ty,
        AggFn::All | AggFn::Any => ElemType::U8,
        AggFn::WhichMin | AggFn::WhichMax => ElemType::I64,
    }
}

fn int_range(ty: ElemType) -> (i64, i64) {
    match ty {
        ElemType::U8 => (0, 255),
        ElemType::I32 => (i32::MIN as i64, i32::MAX as i64),
        _ => (i64::MIN, i64::MAX),
    }
}

/// A folded value plus the magnitude its rounding error is measured against.
#[derive(Clone, Copy, Debug)]
pub struct Folded {
    pub v: V,
    pub scale: f64,
}

/// Folds `(value, index)` pairs from the identity. `None` for an empty
/// index-aware fold.
pub fn fold(g: AggFn, ty: ElemType, items: impl IntoIterator<Item = (V, i64)>) -> Option<Folded> {
    let out = agg_type(g, ty);
    if matches!(g, AggFn::WhichMin | AggFn::WhichMax) {
        let mut best: Option<(f64, i64, i64)> = None;
        for (x, idx) in items {
            let (xf, xi) = (x.f(), x.i());
            if ty == ElemType::F64 && xf.is_nan() {
                continue;
            }
            let take = match best {
                None => true,
                Some((bf, bi, bidx)) => {
                    let (better, same) = if ty == ElemType::F64 {
                        (if g == AggFn::WhichMin { xf < bf } else { xf > bf }, xf == bf)
                    } else {
                        (if g == AggFn::WhichMin { xi < bi } else { xi > bi }, xi == bi)
                    };
                    better || (same && idx < bidx)
                }
            };
            if take {
                best = Some((xf, xi, idx));
            }
        }
        return best.map(|(_, _, idx)| Folded {
            v: V::I(idx),
            scale: 0.0,
        });
    }
    if ty == ElemType::F64 {
        let mut acc = match g {
            AggFn::Sum | AggFn::Any => 0.0,
            AggFn::Prod | AggFn::All => 1.0,
            AggFn::Min => f64::INFINITY,
            AggFn::Max => f64::NEG_INFINITY,
            _ => unreachable!(),
        };
        let mut abs = 0.0;
        for (x, _) in items {
            let x = x.f();
            abs += x.abs();
            acc = match g {
                AggFn::Sum => acc + x,
                AggFn::Prod => acc * x,
                AggFn::Min | AggFn::Max if x.is_nan() || acc.is_nan() => f64::NAN,
                AggFn::Min => acc.min(x),
                AggFn::Max => acc.max(x),
                AggFn::All => b2v(acc != 0.0 && x != 0.0) as f64,
                AggFn::Any => b2v(acc != 0.0 || x != 0.0) as f64,
                _ => unreachable!(),
            };
        }
        let scale = if g == AggFn::Sum { abs } else { acc.abs() };
        Some(Folded {
            v: store(out, V::F(acc)),
            scale,
        })
    } else {
        let (lo, hi) = int_range(ty);
        let mut acc = match g {
            AggFn::Sum | AggFn::Any => 0,
            AggFn::Prod | AggFn::All => 1,
            AggFn::Min => hi,
            AggFn::Max => lo,
            _ => unreachable!(),
        };
        for (x, _) in items {
            let x = x.i();
            acc = match g {
                AggFn::Sum => acc.wrapping_add(x),
                AggFn::Prod => acc.wrapping_mul(x),
                AggFn::Min => acc.min(x),
                AggFn::Max => acc.max(x),
                AggFn::All => b2v(acc != 0 && x != 0),
                AggFn::Any => b2v(acc != 0 || x != 0),
                _ => unreachable!(),
            };
        }
        Some(Folded {
            v: store(out, V::I(acc)),
            scale: 0.0,
        })
    }
}

/// Reference result: values plus per-element error scale.
#[derive(Clone, Debug)]
pub struct Out {
    pub m: Mat,
    pub scale: Vec<f64>,
}

impl Out {
    fn exact(m: Mat) -> Out {
        let scale = m.v.iter().map(|x| x.f().abs()).collect();
        Out { m, scale }
    }

    fn folded(n: usize, p: usize, ty: ElemType, cells: Vec<Folded>) -> Out {
        let scale = cells.iter().map(|c| c.scale.max(c.v.f().abs())).collect();
        Out {
            m: Mat {
                n,
                p,
                ty,
                v: cells.into_iter().map(|c| c.v).collect(),
            },
            scale,
        }
    }
}

// ---- cases ----

#[derive(Clone, Debug)]
pub enum OpCase {
    Sapply { a: Mat, f: MapFn },
    Mapply { a: Mat, b: Mat, f: BinaryFn },
    MapplyRow { a: Mat, v: Mat, f: BinaryFn },
    MapplyCol { a: Mat, w: Mat, f: BinaryFn },
    Agg { a: Mat, g: AggFn },
    AggRow { a: Mat, g: AggFn },
    AggCol { a: Mat, g: AggFn },
    Groupby { a: Mat, labels: Mat, g: AggFn, k: usize },
    GroupbyRow { a: Mat, labels: Mat, g: AggFn, k: usize },
    GroupbyCol { a: Mat, labels: Mat, g: AggFn, k: usize },
    InnerProd { a: Mat, b: Mat, f1: BinaryFn, f2: AggFn },
}

impl OpCase {
    pub fn kind(&self) -> GenOpKind {
        match self {
            OpCase::Sapply { .. } => GenOpKind::Sapply,
            OpCase::Mapply { .. } => GenOpKind::Mapply,
            OpCase::MapplyRow { .. } => GenOpKind::MapplyRow,
            OpCase::MapplyCol { .. } => GenOpKind::MapplyCol,
            OpCase::Agg { .. } => GenOpKind::Agg,
            OpCase::AggRow { .. } => GenOpKind::AggRow,
            OpCase::AggCol { .. } => GenOpKind::AggCol,
            OpCase::Groupby { .. } => GenOpKind::Groupby,
            OpCase::GroupbyRow { .. } => GenOpKind::GroupbyRow,
            OpCase::GroupbyCol { .. } => GenOpKind::GroupbyCol,
            OpCase::InnerProd { .. } => GenOpKind::InnerProd,
        }
    }
}

/// An operation plus the engine geometry it runs under.
#[derive(Clone, Debug)]
pub struct Case {
    pub op: OpCase,
    pub transposed: bool,
    pub part_rows: usize,
    pub workers: usize,
    pub cache_budget: usize,
}

/// Naive evaluation. `None` when the operation must fail (empty index fold).
pub fn reference(op: &OpCase) -> Option<Out> {
    Some(match op {
        OpCase::Sapply { a, f } => {
            let ty = map_type(*f, a.ty);
            Out::exact(Mat {
                n: a.n,
                p: a.p,
                ty,
                v: a.v.iter().map(|&x| map(*f, a.ty, x)).collect(),
            })
        }
        OpCase::Mapply { a, b, f } => Out::exact(Mat {
            n: a.n,
            p: a.p,
            ty: binary_type(*f, a.ty, b.ty),
            v: a.v.iter().zip(&b.v).map(|(&x, &y)| binary(*f, a.ty, x, b.ty, y)).collect(),
        }),
        OpCase::MapplyRow { a, v, f } => {
            let mut out = Vec::new();
            for i in 0..a.n {
                for j in 0..a.p {
                    out.push(binary(*f, a.ty, a.get(i, j), v.ty, v.v[j]));
                }
            }
            Out::exact(Mat {
                n: a.n,
                p: a.p,
                ty: binary_type(*f, a.ty, v.ty),
                v: out,
            })
        }
        OpCase::MapplyCol { a, w, f } => {
            let mut out = Vec::new();
            for i in 0..a.n {
                for j in 0..a.p {
                    out.push(binary(*f, a.ty, a.get(i, j), w.ty, w.v[i]));
                }
            }
            Out::exact(Mat {
                n: a.n,
                p: a.p,
                ty: binary_type(*f, a.ty, w.ty),
                v: out,
            })
        }
        OpCase::Agg { a, g } => {
            let mut items = Vec::new();
            for j in 0..a.p {
                for i in 0..a.n {
                    items.push((a.get(i, j), (j * a.n + i) as i64));
                }
            }
            Out::folded(1, 1, agg_type(*g, a.ty), vec![fold(*g, a.ty, items)?])
        }
        OpCase::AggRow { a, g } => {
            let mut cells = Vec::new();
            for i in 0..a.n {
                cells.push(fold(*g, a.ty, (0..a.p).map(|j| (a.get(i, j), j as i64)))?);
            }
            Out::folded(a.n, 1, agg_type(*g, a.ty), cells)
        }
        OpCase::AggCol { a, g } => {
            let mut cells = Vec::new();
            for j in 0..a.p {
                cells.push(fold(*g, a.ty, (0..a.n).map(|i| (a.get(i, j), i as i64)))?);
            }
            Out::folded(a.p, 1, agg_type(*g, a.ty), cells)
        }
        OpCase::Groupby { a, labels, g, k } => {
            let cells = (0..*k)
                .map(|l| {
                    let items = (0..a.v.len())
                        .filter(|&e| labels.v[e].i() == l as i64)
                        .map(|e| (a.v[e], e as i64));
                    fold(*g, a.ty, items).unwrap()
                })
                .collect();
            Out::folded(*k, 1, agg_type(*g, a.ty), cells)
        }
        OpCase::GroupbyRow { a, labels, g, k } => {
            let mut cells = Vec::new();
            for l in 0..*k {
                for j in 0..a.p {
                    let items = (0..a.n)
                        .filter(|&i| labels.v[i].i() == l as i64)
                        .map(|i| (a.get(i, j), i as i64));
                    cells.push(fold(*g, a.ty, items).unwrap());
                }
            }
            Out::folded(*k, a.p, agg_type(*g, a.ty), cells)
        }
        OpCase::GroupbyCol { a, labels, g, k } => {
            let mut cells = Vec::new();
            for i in 0..a.n {
                for l in 0..*k {
                    let items = (0..a.p)
                        .filter(|&j| labels.v[j].i() == l as i64)
                        .map(|j| (a.get(i, j), j as i64));
                    cells.push(fold(*g, a.ty, items).unwrap());
                }
            }
            Out::folded(a.n, *k, agg_type(*g, a.ty), cells)
        }
        OpCase::InnerProd { a, b, f1, f2 } => {
            let t_ty = binary_type(*f1, a.ty, b.ty);
            let mut cells = Vec::new();
            for i in 0..a.n {
                for j in 0..b.p {
                    let items =
                        (0..a.p).map(|kk| (binary(*f1, a.ty, a.get(i, kk), b.ty, b.get(kk, j)), kk as i64));
                    cells.push(fold(*f2, t_ty, items).unwrap());
                }
            }
            Out::folded(a.n, b.p, agg_type(*f2, t_ty), cells)
        }
    })
}

/// Builds and materializes the operation on a fresh engine.
pub fn run_engine(case: &Case) -> oocmat::Result<DenseMatrix> {
    let e = engine_with(case.workers, case.part_rows, case.cache_budget);
    let t = case.transposed;
    let col = |m: &Mat| e.from_local(&m.to_dense()).unwrap();
    let out = match &case.op {
        OpCase::Sapply { a, f } => a.lift(&e, t).sapply(*f)?,
        OpCase::Mapply { a, b, f } => a.lift(&e, t).mapply(&b.lift(&e, !t), *f)?,
        OpCase::MapplyRow { a, v, f } => a.lift(&e, t).mapply_row(&col(v), *f)?,
        OpCase::MapplyCol { a, w, f } => a.lift(&e, t).mapply_col(&col(w), *f)?,
        OpCase::Agg { a, g } => a.lift(&e, t).agg(*g)?,
        OpCase::AggRow { a, g } => a.lift(&e, t).agg_row(*g)?,
        OpCase::AggCol { a, g } => a.lift(&e, t).agg_col(*g)?,
        OpCase::Groupby { a, labels, g, k } => a.lift(&e, t).groupby(&labels.lift(&e, t), *g, *k)?,
        OpCase::GroupbyRow { a, labels, g, k } => a.lift(&e, t).groupby_row(&col(labels), *g, *k)?,
        OpCase::GroupbyCol { a, labels, g, k } => a.lift(&e, t).groupby_col(&col(labels), *g, *k)?,
        OpCase::InnerProd { a, b, f1, f2 } => a.lift(&e, t).inner_prod(&col(b), *f1, *f2)?,
    };
    out.to_local()
}

pub fn f64_close(a: f64, b: f64, scale: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()) || (a - b).abs() <= F64_REL_TOL * scale
}

/// Compares the engine against the reference; exact for integers.
pub fn check(case: &Case) -> Result<(), String> {
    let got = run_engine(case);
    let want = match reference(&case.op) {
        Some(w) => w,
        None => {
            return match got {
                Err(e) if matches!(e.root_cause(), Error::EmptyFold(_)) => Ok(()),
                other => Err(format!("expected an empty-fold error, got {other:?}")),
            };
        }
    };
    let got = got.map_err(|e| format!("engine failed: {e}"))?;
    let w = &want.m;
    if got.shape() != (w.n, w.p) {
        return Err(format!("shape {:?}, expected {:?}", got.shape(), (w.n, w.p)));
    }
    if got.elem_type() != w.ty {
        return Err(format!("type {}, expected {}", got.elem_type(), w.ty));
    }
    let g = Mat::from_dense(&got);
    for (e, (x, y)) in g.v.iter().zip(&w.v).enumerate() {
        let ok = match w.ty {
            ElemType::F64 => f64_close(x.f(), y.f(), want.scale[e]),
            _ => x.i() == y.i(),
        };
        if !ok {
            return Err(format!(
                "element {} ({}, {}): got {:?}, expected {:?}",
                e,
                e / w.p,
                e % w.p,
                x,
                y
            ));
        }
    }
    Ok(())
}

// ---- strategies ----

pub fn elem_type() -> impl Strategy<Value = ElemType> {
    prop_oneof![
        4 => Just(ElemType::F64),
        2 => Just(ElemType::I64),
        1 => Just(ElemType::I32),
        1 => Just(ElemType::U8),
    ]
}

pub fn value(ty: ElemType) -> BoxedStrategy<V> {
    match ty {
        ElemType::F64 => prop_oneof![
            8 => (-16i32..16).prop_map(|x| V::F(x as f64 * 0.5)),
            8 => (-8.0f64..8.0).prop_map(V::F),
            1 => Just(V::F(f64::NAN)),
            1 => Just(V::F(f64::INFINITY)),
            1 => Just(V::F(f64::NEG_INFINITY)),
            1 => Just(V::F(-0.0)),
        ]
        .boxed(),
        ElemType::I64 => prop_oneof![
            10 => (-50i64..50).prop_map(V::I),
            1 => any::<i64>().prop_map(V::I),
        ]
        .boxed(),
        ElemType::I32 => prop_oneof![
            10 => (-50i64..50).prop_map(V::I),
            1 => any::<i32>().prop_map(|x| V::I(x as i64)),
        ]
        .boxed(),
        ElemType::U8 => any::<u8>().prop_map(|x| V::I(x as i64)).boxed(),
    }
}

pub fn mat(n: usize, p: usize, ty: ElemType) -> impl Strategy<Value = Mat> {
    prop::collection::vec(value(ty), n * p).prop_map(move |v| Mat { n, p, ty, v })
}

pub fn any_mat(max_n: usize, max_p: usize) -> impl Strategy<Value = Mat> {
    (1..=max_n, 1..=max_p, elem_type()).prop_flat_map(|(n, p, ty)| mat(n, p, ty))
}

/// Labels in `[0, k)`.
pub fn labels(len: usize, k: usize, p: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec((0..k as i64).prop_map(V::I), len * p).prop_map(move |v| Mat {
        n: len,
        p,
        ty: ElemType::I64,
        v,
    })
}

pub fn binary_fn() -> impl Strategy<Value = BinaryFn> {
    use BinaryFn::*;
    prop::sample::select(vec![
        Add, Sub, Mul, Div, Pmin, Pmax, Eq, Ne, Lt, Le, Gt, Ge, And, Or, SqDiff,
    ])
}

pub fn unary_fn() -> impl Strategy<Value = UnaryFn> {
    prop::sample::select(UnaryFn::ALL.to_vec())
}

pub fn agg_fn() -> impl Strategy<Value = AggFn> {
    prop::sample::select(AggFn::ALL.to_vec())
}

pub fn value_agg_fn() -> impl Strategy<Value = AggFn> {
    prop::sample::select(AggFn::ALL.into_iter().filter(|g| !g.index_aware()).collect::<Vec<_>>())
}

pub fn scalar() -> impl Strategy<Value = Scalar> {
    prop_oneof![
        (-8.0f64..8.0).prop_map(Scalar::F64),
        Just(Scalar::F64(0.0)),
        (-20i64..20).prop_map(Scalar::I64),
    ]
}

pub fn map_fn() -> impl Strategy<Value = MapFn> {
    prop_oneof![
        unary_fn().prop_map(MapFn::Unary),
        (binary_fn(), scalar()).prop_map(|(f, s)| MapFn::BindRight(f, s)),
        (binary_fn(), scalar()).prop_map(|(f, s)| MapFn::BindLeft(f, s)),
    ]
}

/// Products over many `f64` terms stay finite when the terms are near one;
/// otherwise overflow makes the result depend on the fold order.
fn tame_for_prod(mut a: Mat, g: AggFn) -> Mat {
    if g == AggFn::Prod && a.ty == ElemType::F64 {
        for x in &mut a.v {
            if let V::F(f) = x {
                if f.is_finite() {
                    *f = 1.0 + *f / 64.0;
                }
            }
        }
    }
    a
}

pub const MAX_N: usize = 64;
pub const MAX_P: usize = 16;

pub fn op_case(kind: GenOpKind) -> BoxedStrategy<OpCase> {
    let shape = (1..=MAX_N, 1..=MAX_P, elem_type());
    match kind {
        GenOpKind::Sapply => (any_mat(MAX_N, MAX_P), map_fn())
            .prop_map(|(a, f)| OpCase::Sapply { a, f })
            .boxed(),
        GenOpKind::Mapply => (shape, elem_type(), binary_fn())
            .prop_flat_map(|((n, p, ta), tb, f)| (mat(n, p, ta), mat(n, p, tb), Just(f)))
            .prop_map(|(a, b, f)| OpCase::Mapply { a, b, f })
            .boxed(),
        GenOpKind::MapplyRow => (shape, elem_type(), binary_fn())
            .prop_flat_map(|((n, p, ta), tb, f)| (mat(n, p, ta), mat(p, 1, tb), Just(f)))
            .prop_map(|(a, v, f)| OpCase::MapplyRow { a, v, f })
            .boxed(),
        GenOpKind::MapplyCol => (shape, elem_type(), binary_fn())
            .prop_flat_map(|((n, p, ta), tb, f)| (mat(n, p, ta), mat(n, 1, tb), Just(f)))
            .prop_map(|(a, w, f)| OpCase::MapplyCol { a, w, f })
            .boxed(),
        GenOpKind::Agg => (any_mat(MAX_N, MAX_P), agg_fn())
            .prop_map(|(a, g)| OpCase::Agg { a: tame_for_prod(a, g), g })
            .boxed(),
        GenOpKind::AggRow => (any_mat(MAX_N, MAX_P), agg_fn())
            .prop_map(|(a, g)| OpCase::AggRow { a: tame_for_prod(a, g), g })
            .boxed(),
        GenOpKind::AggCol => (any_mat(MAX_N, MAX_P), agg_fn())
            .prop_map(|(a, g)| OpCase::AggCol { a: tame_for_prod(a, g), g })
            .boxed(),
        GenOpKind::Groupby => (shape, 1..=5usize, value_agg_fn())
            .prop_flat_map(|((n, p, ty), k, g)| (mat(n, p, ty), labels(n, k, p), Just(g), Just(k)))
            .prop_map(|(a, labels, g, k)| OpCase::Groupby {
                a: tame_for_prod(a, g),
                labels,
                g,
                k,
            })
            .boxed(),
        GenOpKind::GroupbyRow => (shape, 1..=5usize, value_agg_fn())
            .prop_flat_map(|((n, p, ty), k, g)| (mat(n, p, ty), labels(n, k, 1), Just(g), Just(k)))
            .prop_map(|(a, labels, g, k)| OpCase::GroupbyRow {
                a: tame_for_prod(a, g),
                labels,
                g,
                k,
            })
            .boxed(),
        GenOpKind::GroupbyCol => (shape, 1..=5usize, value_agg_fn())
            .prop_flat_map(|((n, p, ty), k, g)| (mat(n, p, ty), labels(p, k, 1), Just(g), Just(k)))
            .prop_map(|(a, labels, g, k)| OpCase::GroupbyCol {
                a: tame_for_prod(a, g),
                labels,
                g,
                k,
            })
            .boxed(),
        GenOpKind::InnerProd => (shape, elem_type(), 1..=8usize, binary_fn(), value_agg_fn())
            .prop_flat_map(|((n, m, ta), tb, q, f1, f2)| (mat(n, m, ta), mat(m, q, tb), Just(f1), Just(f2)))
            .prop_map(|(a, b, f1, f2)| {
                let (a, b) = if f2 == AggFn::Prod {
                    (tame_for_prod(a, f2), tame_for_prod(b, f2))
                } else {
                    (a, b)
                };
                OpCase::InnerProd { a, b, f1, f2 }
            })
            .boxed(),
    }
}

pub fn case(kind: GenOpKind) -> impl Strategy<Value = Case> {
    (
        op_case(kind),
        any::<bool>(),
        prop::sample::select(vec![8usize, 16, 64]),
        1..=3usize,
        prop::sample::select(vec![64usize, 1024, 256 * 1024]),
    )
        .prop_map(|(op, transposed, part_rows, workers, cache_budget)| Case {
            op,
            transposed,
            part_rows,
            workers,
            cache_budget,
        })
}

/// Raw bits of a local matrix, for bitwise comparisons. Every NaN maps to
/// one canonical pattern: the sign of a NaN produced by `inf - inf` depends
/// on operand order, which is not part of the determinism contract.
pub fn bits(m: &DenseMatrix) -> (usize, usize, ElemType, Vec<u8>) {
    let bytes = match m.data() {
        Buffer::F64(v) => v
            .iter()
            .flat_map(|x| if x.is_nan() { f64::NAN } else { *x }.to_bits().to_le_bytes())
            .collect(),
        other => other.as_bytes().to_vec(),
    };
    (m.nrow(), m.ncol(), m.elem_type(), bytes)
}
