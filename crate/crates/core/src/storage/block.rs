use crate::dag::Matrix;
use crate::error::{Error, Result};

/// Columns per block.
pub const BLOCK_COLS: usize = 32;

/// A wide tall matrix held as a sequence of 32-column blocks sharing rows.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    blocks: Vec<Matrix>,
}

impl BlockMatrix {
    /// Every block but the last must have exactly [`BLOCK_COLS`] columns.
    pub fn new(blocks: Vec<Matrix>) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| Error::invalid("block matrix needs a block"))?;
        let last = blocks.len() - 1;
        for (i, b) in blocks.iter().enumerate() {
            if b.nrow() != first.nrow() {
                return Err(Error::Shape {
                    op: "block_matrix",
                    left: first.shape(),
                    right: b.shape(),
                });
            }
            let ok = if i == last {
                b.ncol() <= BLOCK_COLS
            } else {
                b.ncol() == BLOCK_COLS
            };
            if !ok {
                return Err(Error::invalid(format!("block {i} has {} columns", b.ncol())));
            }
        }
        Ok(BlockMatrix { blocks })
    }

    /// Splits a tall matrix into lazy column selections.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.is_transposed() {
            return Err(Error::invalid("block matrices are built from tall matrices"));
        }
        if m.ncol() <= BLOCK_COLS {
            return Ok(BlockMatrix { blocks: vec![m.clone()] });
        }
        let mut blocks = Vec::new();
        let mut c = 0;
        while c < m.ncol() {
            let end = (c + BLOCK_COLS).min(m.ncol());
            let idx: Vec<usize> = (c..end).collect();
            blocks.push(m.select_cols(&idx)?);
            c = end;
        }
        Ok(BlockMatrix { blocks })
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_widths(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.ncol()).collect()
    }

    pub fn nrow(&self) -> usize {
        self.blocks[0].nrow()
    }

    pub fn ncol(&self) -> usize {
        self.blocks.iter().map(|b| b.ncol()).sum()
    }

    /// Block index and column within it for global column `j`.
    pub fn locate(&self, j: usize) -> (usize, usize) {
        (j / BLOCK_COLS, j % BLOCK_COLS)
    }

    /// The blocks side by side as one lazy matrix.
    pub fn to_matrix(&self) -> Result<Matrix> {
        Matrix::cbind(&self.blocks)
    }
}
