//! Registered element and aggregation functions.
//!
//! Functions are addressed by name so a DAG can be printed and rebuilt.
//! Kernels evaluate in one of two lanes, `f64` or wrapping `i64`.

use std::fmt;

use crate::error::{Error, Result};
use crate::storage::{ElemType, Scalar};

/// Evaluation lane of a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lane {
    F64,
    I64,
}

impl Lane {
    pub fn of(t: ElemType) -> Lane {
        if t.is_float() {
            Lane::F64
        } else {
            Lane::I64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Identity,
    Neg,
    Abs,
    Sqrt,
    Exp,
    Log,
    Log1p,
    Square,
    Not,
    Cast(ElemType),
}

impl UnaryFn {
    pub const ALL: [UnaryFn; 13] = [
        UnaryFn::Identity,
        UnaryFn::Neg,
        UnaryFn::Abs,
        UnaryFn::Sqrt,
        UnaryFn::Exp,
        UnaryFn::Log,
        UnaryFn::Log1p,
        UnaryFn::Square,
        UnaryFn::Not,
        UnaryFn::Cast(ElemType::F64),
        UnaryFn::Cast(ElemType::I64),
        UnaryFn::Cast(ElemType::I32),
        UnaryFn::Cast(ElemType::U8),
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Identity => "identity",
            UnaryFn::Neg => "neg",
            UnaryFn::Abs => "abs",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Exp => "exp",
            UnaryFn::Log => "log",
            UnaryFn::Log1p => "log1p",
            UnaryFn::Square => "square",
            UnaryFn::Not => "!",
            UnaryFn::Cast(ElemType::F64) => "as.f64",
            UnaryFn::Cast(ElemType::I64) => "as.i64",
            UnaryFn::Cast(ElemType::I32) => "as.i32",
            UnaryFn::Cast(ElemType::U8) => "as.u8",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::UnknownFn(name.to_string()))
    }

    pub fn output_type(self, input: ElemType) -> ElemType {
        match self {
            UnaryFn::Identity | UnaryFn::Neg | UnaryFn::Abs | UnaryFn::Square => input,
            UnaryFn::Sqrt | UnaryFn::Exp | UnaryFn::Log | UnaryFn::Log1p => ElemType::F64,
            UnaryFn::Not => ElemType::U8,
            UnaryFn::Cast(t) => t,
        }
    }

    pub fn lane(self, input: ElemType) -> Lane {
        match self {
            UnaryFn::Sqrt | UnaryFn::Exp | UnaryFn::Log | UnaryFn::Log1p => Lane::F64,
            _ => Lane::of(input),
        }
    }

    pub fn eval_f64(self, x: f64) -> f64 {
        match self {
            UnaryFn::Identity | UnaryFn::Cast(_) => x,
            UnaryFn::Neg => -x,
            UnaryFn::Abs => x.abs(),
            UnaryFn::Sqrt => x.sqrt(),
            UnaryFn::Exp => x.exp(),
            UnaryFn::Log => x.ln(),
            UnaryFn::Log1p => x.ln_1p(),
            UnaryFn::Square => x * x,
            UnaryFn::Not => (x == 0.0) as u8 as f64,
        }
    }

    pub fn eval_i64(self, x: i64) -> i64 {
        match self {
            UnaryFn::Identity | UnaryFn::Cast(_) => x,
            UnaryFn::Neg => x.wrapping_neg(),
            UnaryFn::Abs => x.wrapping_abs(),
            UnaryFn::Square => x.wrapping_mul(x),
            UnaryFn::Not => (x == 0) as i64,
            UnaryFn::Sqrt | UnaryFn::Exp | UnaryFn::Log | UnaryFn::Log1p => {
                Self::eval_f64(self, x as f64) as i64
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryFn {
    Add,
    Sub,
    Mul,
    Div,
    Pmin,
    Pmax,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    /// Squared difference; registered as "euclidean".
    SqDiff,
}

impl BinaryFn {
    pub const ALL: [BinaryFn; 15] = [
        BinaryFn::Add,
        BinaryFn::Sub,
        BinaryFn::Mul,
        BinaryFn::Div,
        BinaryFn::Pmin,
        BinaryFn::Pmax,
        BinaryFn::Eq,
        BinaryFn::Ne,
        BinaryFn::Lt,
        BinaryFn::Le,
        BinaryFn::Gt,
        BinaryFn::Ge,
        BinaryFn::And,
        BinaryFn::Or,
        BinaryFn::SqDiff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinaryFn::Add => "+",
            BinaryFn::Sub => "-",
            BinaryFn::Mul => "*",
            BinaryFn::Div => "/",
            BinaryFn::Pmin => "pmin",
            BinaryFn::Pmax => "pmax",
            BinaryFn::Eq => "==",
            BinaryFn::Ne => "!=",
            BinaryFn::Lt => "<",
            BinaryFn::Le => "<=",
            BinaryFn::Gt => ">",
            BinaryFn::Ge => ">=",
            BinaryFn::And => "&",
            BinaryFn::Or => "|",
            BinaryFn::SqDiff => "euclidean",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::UnknownFn(name.to_string()))
    }

    pub fn is_predicate(self) -> bool {
        matches!(
            self,
            BinaryFn::Eq
                | BinaryFn::Ne
                | BinaryFn::Lt
                | BinaryFn::Le
                | BinaryFn::Gt
                | BinaryFn::Ge
                | BinaryFn::And
                | BinaryFn::Or
        )
    }

    pub fn is_commutative(self) -> bool {
        !matches!(
            self,
            BinaryFn::Sub | BinaryFn::Div | BinaryFn::Lt | BinaryFn::Le | BinaryFn::Gt | BinaryFn::Ge
        )
    }

    pub fn output_type(self, a: ElemType, b: ElemType) -> ElemType {
        if self == BinaryFn::Div {
            ElemType::F64
        } else if self.is_predicate() {
            ElemType::U8
        } else {
            a.promote(b)
        }
    }

    pub fn lane(self, a: ElemType, b: ElemType) -> Lane {
        if self == BinaryFn::Div || a.is_float() || b.is_float() {
            Lane::F64
        } else {
            Lane::I64
        }
    }

    pub fn eval_f64(self, x: f64, y: f64) -> f64 {
        match self {
            BinaryFn::Add => x + y,
            BinaryFn::Sub => x - y,
            BinaryFn::Mul => x * y,
            BinaryFn::Div => x / y,
            BinaryFn::Pmin => {
                if x.is_nan() || y.is_nan() {
                    f64::NAN
                } else if y < x {
                    y
                } else {
                    x
                }
            }
            BinaryFn::Pmax => {
                if x.is_nan() || y.is_nan() {
                    f64::NAN
                } else if y > x {
                    y
                } else {
                    x
                }
            }
            BinaryFn::Eq => (x == y) as u8 as f64,
            BinaryFn::Ne => (x != y) as u8 as f64,
            BinaryFn::Lt => (x < y) as u8 as f64,
            BinaryFn::Le => (x <= y) as u8 as f64,
            BinaryFn::Gt => (x > y) as u8 as f64,
            BinaryFn::Ge => (x >= y) as u8 as f64,
            BinaryFn::And => (x != 0.0 && y != 0.0) as u8 as f64,
            BinaryFn::Or => (x != 0.0 || y != 0.0) as u8 as f64,
            BinaryFn::SqDiff => {
                let d = x - y;
                d * d
            }
        }
    }

    pub fn eval_i64(self, x: i64, y: i64) -> i64 {
        match self {
            BinaryFn::Add => x.wrapping_add(y),
            BinaryFn::Sub => x.wrapping_sub(y),
            BinaryFn::Mul => x.wrapping_mul(y),
            BinaryFn::Div => (x as f64 / y as f64) as i64,
            BinaryFn::Pmin => x.min(y),
            BinaryFn::Pmax => x.max(y),
            BinaryFn::Eq => (x == y) as i64,
            BinaryFn::Ne => (x != y) as i64,
            BinaryFn::Lt => (x < y) as i64,
            BinaryFn::Le => (x <= y) as i64,
            BinaryFn::Gt => (x > y) as i64,
            BinaryFn::Ge => (x >= y) as i64,
            BinaryFn::And => (x != 0 && y != 0) as i64,
            BinaryFn::Or => (x != 0 || y != 0) as i64,
            BinaryFn::SqDiff => {
                let d = x.wrapping_sub(y);
                d.wrapping_mul(d)
            }
        }
    }
}

/// Aggregation function: a binary combine plus its identity element.
///
/// `which.min`/`which.max` are index-aware: they fold `(value, index)` pairs
/// and return the index. Ties resolve to the smallest index and NaN values
/// are skipped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AggFn {
    Sum,
    Prod,
    Min,
    Max,
    All,
    Any,
    WhichMin,
    WhichMax,
}

impl AggFn {
    pub const ALL: [AggFn; 8] = [
        AggFn::Sum,
        AggFn::Prod,
        AggFn::Min,
        AggFn::Max,
        AggFn::All,
        AggFn::Any,
        AggFn::WhichMin,
        AggFn::WhichMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggFn::Sum => "+",
            AggFn::Prod => "*",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::All => "&",
            AggFn::Any => "|",
            AggFn::WhichMin => "which.min",
            AggFn::WhichMax => "which.max",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sum" => return Ok(AggFn::Sum),
            "prod" => return Ok(AggFn::Prod),
            "all" => return Ok(AggFn::All),
            "any" => return Ok(AggFn::Any),
            _ => {}
        }
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::UnknownFn(name.to_string()))
    }

    pub fn index_aware(self) -> bool {
        matches!(self, AggFn::WhichMin | AggFn::WhichMax)
    }

    /// The element-wise function this aggregation folds with.
    pub fn combine_fn(self) -> Option<BinaryFn> {
        match self {
            AggFn::Sum => Some(BinaryFn::Add),
            AggFn::Prod => Some(BinaryFn::Mul),
            AggFn::Min => Some(BinaryFn::Pmin),
            AggFn::Max => Some(BinaryFn::Pmax),
            AggFn::All => Some(BinaryFn::And),
            AggFn::Any => Some(BinaryFn::Or),
            AggFn::WhichMin | AggFn::WhichMax => None,
        }
    }

    pub fn output_type(self, input: ElemType) -> ElemType {
        match self {
            AggFn::Sum | AggFn::Prod => {
                if input.is_float() {
                    ElemType::F64
                } else {
                    ElemType::I64
                }
            }
            AggFn::Min | AggFn::Max => input,
            AggFn::All | AggFn::Any => ElemType::U8,
            AggFn::WhichMin | AggFn::WhichMax => ElemType::I64,
        }
    }

    pub fn lane(self, input: ElemType) -> Lane {
        Lane::of(input)
    }

    pub fn identity_f64(self) -> f64 {
        match self {
            AggFn::Sum | AggFn::Any => 0.0,
            AggFn::Prod | AggFn::All => 1.0,
            AggFn::Min => f64::INFINITY,
            AggFn::Max => f64::NEG_INFINITY,
            AggFn::WhichMin | AggFn::WhichMax => f64::NAN,
        }
    }

    pub fn identity_i64(self, input: ElemType) -> i64 {
        let (lo, hi) = match input {
            ElemType::U8 => (0, u8::MAX as i64),
            ElemType::I32 => (i32::MIN as i64, i32::MAX as i64),
            _ => (i64::MIN, i64::MAX),
        };
        match self {
            AggFn::Sum | AggFn::Any => 0,
            AggFn::Prod | AggFn::All => 1,
            AggFn::Min => hi,
            AggFn::Max => lo,
            AggFn::WhichMin | AggFn::WhichMax => 0,
        }
    }

    /// `f(x, acc)` for the value-only aggregations.
    pub fn combine_f64(self, x: f64, acc: f64) -> f64 {
        match self.combine_fn() {
            Some(f) => f.eval_f64(x, acc),
            None => acc,
        }
    }

    pub fn combine_i64(self, x: i64, acc: i64) -> i64 {
        match self.combine_fn() {
            Some(f) => f.eval_i64(x, acc),
            None => acc,
        }
    }

    /// Whether `(x, xi)` replaces the current best `(v, vi)`; `vi < 0` means empty.
    #[inline]
    pub fn which_takes<T: PartialOrd + Copy>(self, x: T, xi: i64, v: T, vi: i64) -> bool {
        #[allow(clippy::eq_op)]
        if x != x {
            return false;
        }
        if vi < 0 {
            return true;
        }
        let better = match self {
            AggFn::WhichMax => x > v,
            _ => x < v,
        };
        better || (x == v && xi < vi)
    }
}

/// A function applied element-wise by `sapply`: a registered unary function
/// or a binary function with one operand bound to a scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MapFn {
    Unary(UnaryFn),
    /// `f(x, s)`
    BindRight(BinaryFn, Scalar),
    /// `f(s, x)`
    BindLeft(BinaryFn, Scalar),
}

impl MapFn {
    pub fn output_type(self, input: ElemType) -> ElemType {
        match self {
            MapFn::Unary(f) => f.output_type(input),
            MapFn::BindRight(f, s) | MapFn::BindLeft(f, s) => f.output_type(input, s.elem_type()),
        }
    }

    pub fn lane(self, input: ElemType) -> Lane {
        match self {
            MapFn::Unary(f) => f.lane(input),
            MapFn::BindRight(f, s) | MapFn::BindLeft(f, s) => f.lane(input, s.elem_type()),
        }
    }

    pub fn eval_f64(self, x: f64) -> f64 {
        match self {
            MapFn::Unary(f) => f.eval_f64(x),
            MapFn::BindRight(f, s) => f.eval_f64(x, s.as_f64()),
            MapFn::BindLeft(f, s) => f.eval_f64(s.as_f64(), x),
        }
    }

    pub fn eval_i64(self, x: i64) -> i64 {
        match self {
            MapFn::Unary(f) => f.eval_i64(x),
            MapFn::BindRight(f, s) => f.eval_i64(x, s.as_i64()),
            MapFn::BindLeft(f, s) => f.eval_i64(s.as_i64(), x),
        }
    }
}

impl fmt::Display for MapFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapFn::Unary(u) => f.write_str(u.name()),
            MapFn::BindRight(b, s) => write!(f, "{}[rhs={}]", b.name(), s),
            MapFn::BindLeft(b, s) => write!(f, "{}[lhs={}]", b.name(), s),
        }
    }
}

impl From<UnaryFn> for MapFn {
    fn from(f: UnaryFn) -> Self {
        MapFn::Unary(f)
    }
}

/// Any registered element function, by arity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElemFn {
    Unary(UnaryFn),
    Binary(BinaryFn),
}

impl ElemFn {
    pub fn arity(self) -> usize {
        match self {
            ElemFn::Unary(_) => 1,
            ElemFn::Binary(_) => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElemFn::Unary(f) => f.name(),
            ElemFn::Binary(f) => f.name(),
        }
    }

    /// Looks a function up by registry name; binary names win on clashes.
    pub fn lookup(name: &str) -> Result<Self> {
        BinaryFn::from_name(name)
            .map(ElemFn::Binary)
            .or_else(|_| UnaryFn::from_name(name).map(ElemFn::Unary))
    }

    pub fn output_type(self, inputs: &[ElemType]) -> Result<ElemType> {
        match (self, inputs) {
            (ElemFn::Unary(f), [a]) => Ok(f.output_type(*a)),
            (ElemFn::Binary(f), [a, b]) => Ok(f.output_type(*a, *b)),
            _ => Err(Error::Type {
                op: "elem_fn",
                detail: format!("{} takes {} argument(s)", self.name(), self.arity()),
            }),
        }
    }
}

/// Names of every registered function.
pub fn registry() -> Vec<(&'static str, &'static str)> {
    let mut out = Vec::new();
    out.extend(UnaryFn::ALL.iter().map(|f| ("unary", f.name())));
    out.extend(BinaryFn::ALL.iter().map(|f| ("binary", f.name())));
    out.extend(AggFn::ALL.iter().map(|f| ("agg", f.name())));
    out
}
