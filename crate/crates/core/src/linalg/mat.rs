//! Dense row-major matrix with the small kernel set the pipeline needs.
//!
//! Everything dense in this crate goes through `Mat` so the allocation audit
//! can see it. Hot products over the O(n) dimension are parallelized by row
//! chunks, which keeps results bit-identical for any worker count.

use super::audit;
use rayon::prelude::*;

/// Minimum number of rows before a product is worth parallelizing.
const PAR_ROWS: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        audit::record_alloc(rows, cols);
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Build from a row-major slice.
    pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        audit::record_alloc(rows, cols);
        Mat {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self.set(i, j, v[i]);
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self * other`
    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "mul: inner dims");
        let mut out = Mat::zeros(self.rows, other.cols);
        let oc = other.cols;
        let f = |(i, out_row): (usize, &mut [f64])| {
            let a_row = self.row(i);
            for (k, &a) in a_row.iter().enumerate() {
                if a != 0.0 {
                    let b_row = other.row(k);
                    for j in 0..oc {
                        out_row[j] += a * b_row[j];
                    }
                }
            }
        };
        if self.rows >= PAR_ROWS {
            out.data.par_chunks_mut(oc).enumerate().for_each(f);
        } else {
            out.data.chunks_mut(oc).enumerate().for_each(f);
        }
        out
    }

    /// `selfᵀ * other`, without materializing the transpose.
    pub fn tr_mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "tr_mul: inner dims");
        let (m, n) = (self.cols, other.cols);
        // Chunked partial sums reduced in a fixed order: deterministic for
        // any worker count.
        let chunk = 4096;
        let partials: Vec<Vec<f64>> = (0..self.rows.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let lo = c * chunk;
                let hi = (lo + chunk).min(self.rows);
                let mut acc = vec![0.0; m * n];
                for r in lo..hi {
                    let a_row = self.row(r);
                    let b_row = other.row(r);
                    for (i, &a) in a_row.iter().enumerate() {
                        if a != 0.0 {
                            let dst = &mut acc[i * n..(i + 1) * n];
                            for j in 0..n {
                                dst[j] += a * b_row[j];
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = Mat::zeros(m, n);
        for acc in partials {
            for (o, a) in out.data.iter_mut().zip(acc) {
                *o += a;
            }
        }
        out
    }

    /// `self * v` for a vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ * v` for a vector.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let a = v[i];
            if a != 0.0 {
                for (o, &x) in out.iter_mut().zip(self.row(i)) {
                    *o += a * x;
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Mat {
        let mut m = self.clone();
        m.scale(s);
        m
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: f64, other: &Mat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Scale column j by s.
    pub fn scale_col(&mut self, j: usize, s: f64) {
        for i in 0..self.rows {
            self.data[i * self.cols + j] *= s;
        }
    }

    /// Scale row i by s.
    pub fn scale_row(&mut self, i: usize, s: f64) {
        for x in self.row_mut(i) {
            *x *= s;
        }
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn col_norm(&self, j: usize) -> f64 {
        (0..self.rows)
            .map(|i| {
                let v = self.get(i, j);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Keep only the first k columns.
    pub fn truncate_cols(&self, k: usize) -> Mat {
        assert!(k <= self.cols);
        let mut m = Mat::zeros(self.rows, k);
        for i in 0..self.rows {
            m.row_mut(i).copy_from_slice(&self.row(i)[..k]);
        }
        m
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_and_tr_mul_agree_with_naive() {
        let a = Mat::from_fn(5, 3, |i, j| (i * 3 + j) as f64 * 0.7 - 1.0);
        let b = Mat::from_fn(3, 4, |i, j| (i + 2 * j) as f64 * 0.3);
        let c = a.mul(&b);
        for i in 0..5 {
            for j in 0..4 {
                let want: f64 = (0..3).map(|k| a.get(i, k) * b.get(k, j)).sum();
                assert!((c.get(i, j) - want).abs() < 1e-12);
            }
        }
        let at_b = a.tr_mul(&a);
        let naive = a.transpose().mul(&a);
        assert!(at_b.max_abs_diff(&naive) < 1e-12);
    }

    #[test]
    fn audit_records_square_allocs() {
        // Other tests run concurrently and may also trip the audit; only
        // assert about this test's own allocations.
        audit::arm(4);
        let _small = Mat::zeros(100, 4);
        let _bad = Mat::zeros(6, 6);
        audit::disarm();
        let v = audit::violations();
        assert!(v.contains(&(6, 6)));
        assert!(!v.contains(&(100, 4)), "tall-thin must not be recorded");
    }
}
