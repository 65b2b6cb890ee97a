//! Native dense file header.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "FLMX"
//!      4     4  version (u32, = 1)
//!      8     1  element type {0:f64, 1:i64, 2:i32, 3:u8}
//!      9     1  layout {0:col, 1:row}
//!     10     1  orientation {0:tall, 1:wide}
//!     11     1  reserved (0)
//!     12     8  nrow (u64)
//!     20     8  ncol (u64)
//!     28     8  part_rows (u64)
//!     36        partitions in index order
//! ```
//!
//! All integers are little-endian. `nrow`/`ncol` describe the stored tall
//! matrix; a wide orientation means the logical matrix is its transpose.

use super::{ElemType, Layout, Orientation};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"FLMX";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 36;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NativeHeader {
    pub elem_type: ElemType,
    pub layout: Layout,
    pub orientation: Orientation,
    pub nrow: u64,
    pub ncol: u64,
    pub part_rows: u64,
}

impl NativeHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4..8].copy_from_slice(&VERSION.to_le_bytes());
        out[8] = self.elem_type.code();
        out[9] = match self.layout {
            Layout::ColMajor => 0,
            Layout::RowMajor => 1,
        };
        out[10] = match self.orientation {
            Orientation::Tall => 0,
            Orientation::Wide => 1,
        };
        out[12..20].copy_from_slice(&self.nrow.to_le_bytes());
        out[20..28].copy_from_slice(&self.ncol.to_le_bytes());
        out[28..36].copy_from_slice(&self.part_rows.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Header(format!(
                "file is {} bytes, shorter than the magic",
                bytes.len()
            )));
        }
        let found: [u8; 4] = bytes[0..4].try_into().unwrap();
        if found != MAGIC {
            return Err(Error::BadMagic {
                expected: MAGIC,
                found,
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Header(format!(
                "header is {} bytes, expected {HEADER_LEN}",
                bytes.len()
            )));
        }
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Version(version));
        }
        let elem_type = ElemType::from_code(bytes[8])
            .ok_or_else(|| Error::Header(format!("unknown element type code {}", bytes[8])))?;
        let layout = match bytes[9] {
            0 => Layout::ColMajor,
            1 => Layout::RowMajor,
            c => return Err(Error::Header(format!("unknown layout code {c}"))),
        };
        let orientation = match bytes[10] {
            0 => Orientation::Tall,
            1 => Orientation::Wide,
            c => return Err(Error::Header(format!("unknown orientation code {c}"))),
        };
        let h = NativeHeader {
            elem_type,
            layout,
            orientation,
            nrow: u64_at(12),
            ncol: u64_at(20),
            part_rows: u64_at(28),
        };
        if h.nrow == 0 || h.ncol == 0 {
            return Err(Error::Header(format!("empty shape {}x{}", h.nrow, h.ncol)));
        }
        if h.part_rows == 0 || !h.part_rows.is_power_of_two() {
            return Err(Error::PartRows(h.part_rows as usize));
        }
        Ok(h)
    }
}
