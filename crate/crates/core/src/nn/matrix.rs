//! Dense row-major f64 matrix. All model arithmetic is 64-bit.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// `out += alpha * self * x` for square weight application.
    pub fn matvec_acc(&self, x: &[f64], alpha: f64, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, slot) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x) {
                acc += w * xv;
            }
            *slot += alpha * acc;
        }
    }

    /// `out += alpha * selfᵀ * x`.
    pub fn matvec_transpose_acc(&self, x: &[f64], alpha: f64, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &xv) in x.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let scaled = alpha * xv;
            for (slot, w) in out.iter_mut().zip(row) {
                *slot += scaled * w;
            }
        }
    }

    /// `self += alpha * p ⊗ a` (outer product accumulation).
    pub fn add_outer(&mut self, p: &[f64], a: &[f64], alpha: f64) {
        debug_assert_eq!(p.len(), self.rows);
        debug_assert_eq!(a.len(), self.cols);
        for (r, &pv) in p.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            let scaled = alpha * pv;
            for (slot, av) in row.iter_mut().zip(a) {
                *slot += scaled * av;
            }
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }
}
