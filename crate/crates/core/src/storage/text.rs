//! Delimited dense text.

use std::fmt::Write as _;

use super::{Buffer, DenseMatrix, ElemType};
use crate::error::{Error, Result};

/// Parses rectangular delimited text. Blank lines are skipped; row indices in
/// errors are 0-based over non-blank lines.
pub fn parse_dense_text(text: &str, delimiter: char, elem_type: ElemType) -> Result<DenseMatrix> {
    let mut ncol = None;
    let mut nrow = 0;
    let mut data = Buffer::zeros(elem_type, 0);
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = if delimiter.is_whitespace() {
            line.split_whitespace().collect()
        } else {
            line.split(delimiter).map(str::trim).collect()
        };
        let expected = *ncol.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(Error::Ragged {
                row: nrow,
                expected,
                found: fields.len(),
            });
        }
        for (j, tok) in fields.iter().enumerate() {
            let bad = || Error::Parse {
                row: nrow,
                field: j,
                token: tok.to_string(),
            };
            match &mut data {
                Buffer::F64(v) => v.push(tok.parse().map_err(|_| bad())?),
                Buffer::I64(v) => v.push(tok.parse().map_err(|_| bad())?),
                Buffer::I32(v) => v.push(tok.parse().map_err(|_| bad())?),
                Buffer::U8(v) => v.push(tok.parse().map_err(|_| bad())?),
            }
        }
        nrow += 1;
    }
    let ncol = ncol.ok_or_else(|| Error::invalid("empty text matrix"))?;
    DenseMatrix::new(nrow, ncol, data)
}

/// Formats a matrix as delimited text, one row per line.
pub fn write_dense_text(m: &DenseMatrix, delimiter: char) -> String {
    let mut out = String::new();
    for i in 0..m.nrow() {
        for j in 0..m.ncol() {
            if j > 0 {
                out.push(delimiter);
            }
            let _ = write!(out, "{}", m.get(i, j));
        }
        out.push('\n');
    }
    out
}
