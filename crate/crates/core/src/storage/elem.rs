//! Element types and typed buffers.

use std::fmt;

use crate::error::{Error, Result};

/// Storage type of matrix elements. Booleans are stored as `u8` 0/1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElemType {
    F64,
    I64,
    I32,
    U8,
}

impl ElemType {
    pub fn size(self) -> usize {
        match self {
            ElemType::F64 | ElemType::I64 => 8,
            ElemType::I32 => 4,
            ElemType::U8 => 1,
        }
    }

    /// Code used in the native file header.
    pub fn code(self) -> u8 {
        match self {
            ElemType::F64 => 0,
            ElemType::I64 => 1,
            ElemType::I32 => 2,
            ElemType::U8 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => ElemType::F64,
            1 => ElemType::I64,
            2 => ElemType::I32,
            3 => ElemType::U8,
            _ => return None,
        })
    }

    pub fn is_float(self) -> bool {
        self == ElemType::F64
    }

    /// Smallest type both operands promote to (u8 < i32 < i64 < f64).
    pub fn promote(self, other: ElemType) -> ElemType {
        fn rank(t: ElemType) -> u8 {
            match t {
                ElemType::U8 => 0,
                ElemType::I32 => 1,
                ElemType::I64 => 2,
                ElemType::F64 => 3,
            }
        }
        if rank(self) >= rank(other) {
            self
        } else {
            other
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElemType::F64 => "f64",
            ElemType::I64 => "i64",
            ElemType::I32 => "i32",
            ElemType::U8 => "u8",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "f64" => Ok(ElemType::F64),
            "i64" => Ok(ElemType::I64),
            "i32" => Ok(ElemType::I32),
            "u8" | "bool" => Ok(ElemType::U8),
            other => Err(Error::invalid(format!("unknown element type {other:?}"))),
        }
    }
}

impl fmt::Display for ElemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A primitive that can be stored in a matrix.
///
/// Kernels compute in one of two lanes, `f64` or `i64`; narrower integer
/// types convert through `i64` with two's complement wrapping.
pub trait Element: bytemuck::Pod + PartialOrd + fmt::Debug + Send + Sync + 'static {
    const TYPE: ElemType;
    fn to_f64(self) -> f64;
    fn to_i64(self) -> i64;
    fn from_f64(v: f64) -> Self;
    fn from_i64(v: i64) -> Self;
}

macro_rules! impl_element {
    ($t:ty, $tag:ident) => {
        impl Element for $t {
            const TYPE: ElemType = ElemType::$tag;
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn to_i64(self) -> i64 {
                self as i64
            }
            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn from_i64(v: i64) -> Self {
                v as $t
            }
        }
    };
}

impl_element!(f64, F64);
impl_element!(i64, I64);
impl_element!(i32, I32);
impl_element!(u8, U8);

/// A single typed value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scalar {
    F64(f64),
    I64(i64),
    I32(i32),
    U8(u8),
}

impl Scalar {
    pub fn elem_type(self) -> ElemType {
        match self {
            Scalar::F64(_) => ElemType::F64,
            Scalar::I64(_) => ElemType::I64,
            Scalar::I32(_) => ElemType::I32,
            Scalar::U8(_) => ElemType::U8,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Scalar::F64(v) => v,
            Scalar::I64(v) => v as f64,
            Scalar::I32(v) => v as f64,
            Scalar::U8(v) => v as f64,
        }
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Scalar::F64(v) => v as i64,
            Scalar::I64(v) => v,
            Scalar::I32(v) => v as i64,
            Scalar::U8(v) => v as i64,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::F64(v) => write!(f, "{v}"),
            Scalar::I64(v) => write!(f, "{v}"),
            Scalar::I32(v) => write!(f, "{v}"),
            Scalar::U8(v) => write!(f, "{v}"),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::F64(v)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::I64(v)
    }
}

/// An owned vector of elements of one type.
#[derive(Clone, Debug, PartialEq)]
pub enum Buffer {
    F64(Vec<f64>),
    I64(Vec<i64>),
    I32(Vec<i32>),
    U8(Vec<u8>),
}

/// Dispatches on a [`Buffer`] variant, binding the inner vector.
#[macro_export]
#[doc(hidden)]
macro_rules! with_buffer {
    ($buf:expr, $v:ident => $body:expr) => {
        match $buf {
            $crate::storage::Buffer::F64($v) => $body,
            $crate::storage::Buffer::I64($v) => $body,
            $crate::storage::Buffer::I32($v) => $body,
            $crate::storage::Buffer::U8($v) => $body,
        }
    };
}

impl Buffer {
    pub fn zeros(ty: ElemType, len: usize) -> Self {
        match ty {
            ElemType::F64 => Buffer::F64(vec![0.0; len]),
            ElemType::I64 => Buffer::I64(vec![0; len]),
            ElemType::I32 => Buffer::I32(vec![0; len]),
            ElemType::U8 => Buffer::U8(vec![0; len]),
        }
    }

    pub fn elem_type(&self) -> ElemType {
        match self {
            Buffer::F64(_) => ElemType::F64,
            Buffer::I64(_) => ElemType::I64,
            Buffer::I32(_) => ElemType::I32,
            Buffer::U8(_) => ElemType::U8,
        }
    }

    pub fn len(&self) -> usize {
        with_buffer!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        with_buffer!(self, v => bytemuck::cast_slice(v.as_slice()))
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        with_buffer!(self, v => bytemuck::cast_slice_mut(v.as_mut_slice()))
    }

    /// Copies typed elements out of a little-endian byte slice.
    pub fn from_bytes(ty: ElemType, bytes: &[u8]) -> Self {
        let n = bytes.len() / ty.size();
        let mut out = Buffer::zeros(ty, n);
        out.as_bytes_mut().copy_from_slice(&bytes[..n * ty.size()]);
        out
    }

    pub fn get(&self, i: usize) -> Scalar {
        match self {
            Buffer::F64(v) => Scalar::F64(v[i]),
            Buffer::I64(v) => Scalar::I64(v[i]),
            Buffer::I32(v) => Scalar::I32(v[i]),
            Buffer::U8(v) => Scalar::U8(v[i]),
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        with_buffer!(self, v => v.iter().map(|x| x.to_f64()).collect())
    }

    pub fn to_i64_vec(&self) -> Vec<i64> {
        with_buffer!(self, v => v.iter().map(|x| x.to_i64()).collect())
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match self {
            Buffer::F64(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<&[i64]> {
        match self {
            Buffer::I64(v) => Some(v),
            _ => None,
        }
    }
}
