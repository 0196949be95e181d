//! Dense row-major storage for per-edge message matrices.
//!
//! Message-passing state lives on the edges of a fully connected bipartite
//! graph, so every quantity is naturally a small dense matrix indexed by
//! (observation node, variable node). [`Grid`] keeps that storage flat and
//! contiguous; rows correspond to observation nodes and columns to variable
//! nodes throughout the crate.

use crate::real::Real;

/// Row-major matrix of scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Grid<R> {
    /// Creates a zero-filled grid.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![R::zero(); rows * cols],
        }
    }

    /// Creates a grid filled with one value.
    pub fn filled(rows: usize, cols: usize, value: R) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Wraps an existing row-major buffer.
    ///
    /// # Panics
    ///
    /// Panics if the buffer length is not `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<R>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer does not match dimensions");
        Self { rows, cols, data }
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Element at `(row, col)`.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> R {
        self.data[row * self.cols + col]
    }

    /// Mutable element at `(row, col)`.
    #[inline]
    pub fn at_mut(&mut self, row: usize, col: usize) -> &mut R {
        &mut self.data[row * self.cols + col]
    }

    /// One row as a slice.
    #[inline]
    pub fn row(&self, row: usize) -> &[R] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// One row as a mutable slice.
    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [R] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Sum over each column.
    pub fn col_sums(&self) -> Vec<R> {
        let mut sums = vec![R::zero(); self.cols];
        for row in 0..self.rows {
            for (sum, &value) in sums.iter_mut().zip(self.row(row)) {
                *sum += value;
            }
        }
        sums
    }

    /// Sum over each row.
    pub fn row_sums(&self) -> Vec<R> {
        (0..self.rows).map(|r| self.row(r).iter().copied().sum()).collect()
    }

    /// Flat row-major view of the storage.
    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    /// Overwrites every element with `value`.
    pub fn fill(&mut self, value: R) {
        self.data.fill(value);
    }
}
