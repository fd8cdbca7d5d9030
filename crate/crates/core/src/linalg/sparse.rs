//! Compressed sparse row matrices over f64.

use super::mat::Mat;
use rayon::prelude::*;

/// How duplicate (i, j) entries are merged when building from triplets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dedup {
    /// Sum duplicate weights (Poisson / weighted semantics).
    Sum,
    /// Collapse duplicates to weight 1 (Bernoulli / unweighted semantics).
    Collapse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CsrMatrix {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Build from (row, col, value) triplets; duplicates merged per `dedup`.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        dedup: Dedup,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        let mut it = triplets.into_iter().peekable();
        while let Some((i, j, v)) = it.next() {
            debug_assert!(i < rows && j < cols);
            let mut acc = v;
            while let Some(&(i2, j2, v2)) = it.peek() {
                if i2 == i && j2 == j {
                    acc += v2;
                    it.next();
                } else {
                    break;
                }
            }
            let value = match dedup {
                Dedup::Sum => acc,
                Dedup::Collapse => 1.0,
            };
            indptr[i + 1] += 1;
            indices.push(j);
            data.push(value);
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.data[lo..hi])
    }

    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut indptr = vec![0usize; self.cols + 1];
        for &j in &self.indices {
            indptr[j + 1] += 1;
        }
        for j in 0..self.cols {
            indptr[j + 1] += indptr[j];
        }
        let mut cursor = indptr.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                let p = cursor[j];
                indices[p] = i;
                data[p] = v;
                cursor[j] += 1;
            }
        }
        CsrMatrix {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            data,
        }
    }

    /// Submatrix on the given row and column index sets, with columns
    /// compacted to 0..col_set.len() in the given order.
    pub fn select(&self, row_set: &[usize], col_set: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.cols];
        for (new, &old) in col_set.iter().enumerate() {
            col_map[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_i, &old_i) in row_set.iter().enumerate() {
            let (idx, val) = self.row(old_i);
            for (&j, &v) in idx.iter().zip(val) {
                if col_map[j] != usize::MAX {
                    triplets.push((new_i, col_map[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(row_set.len(), col_set.len(), triplets, Dedup::Sum)
    }

    /// self · X for dense X (rows × m output), row-parallel.
    pub fn mul_dense(&self, x: &Mat) -> Mat {
        assert_eq!(self.cols, x.rows(), "sparse mul_dense: inner dims");
        let m = x.cols();
        let mut out = Mat::zeros(self.rows, m);
        let body = |(i, out_row): (usize, &mut [f64])| {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                let x_row = x.row(j);
                for c in 0..m {
                    out_row[c] += v * x_row[c];
                }
            }
        };
        if self.rows >= 2048 {
            out.data_mut().par_chunks_mut(m).enumerate().for_each(body);
        } else {
            out.data_mut().chunks_mut(m).enumerate().for_each(body);
        }
        out
    }

    /// selfᵀ · X for dense X (cols × m output). Chunked partial sums reduced
    /// in a fixed order keep the result bit-identical for any worker count.
    pub fn tr_mul_dense(&self, x: &Mat) -> Mat {
        assert_eq!(self.rows, x.rows(), "sparse tr_mul_dense: inner dims");
        let m = x.cols();
        let chunk = 4096;
        let partials: Vec<Mat> = (0..self.rows.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let lo = c * chunk;
                let hi = (lo + chunk).min(self.rows);
                let mut acc = Mat::zeros(self.cols, m);
                for i in lo..hi {
                    let (idx, val) = self.row(i);
                    let x_row = x.row(i);
                    for (&j, &v) in idx.iter().zip(val) {
                        let dst = acc.row_mut(j);
                        for c in 0..m {
                            dst[c] += v * x_row[c];
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = Mat::zeros(self.cols, m);
        for acc in partials {
            out.add_scaled(1.0, &acc);
        }
        out
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            let mut s = 0.0;
            for (&j, &v) in idx.iter().zip(val) {
                s += v * x[j];
            }
            y[i] = s;
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                out[j] += v;
            }
        }
        out
    }

    /// Dense expansion; test/debug aid for small matrices only.
    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.rows, self.cols);
        for (i, j, v) in self.iter_entries() {
            m.set(i, j, v);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_dedup_modes() {
        let t = vec![(0, 1, 1.0), (0, 1, 1.0), (1, 0, 2.5)];
        let summed = CsrMatrix::from_triplets(2, 2, t.clone(), Dedup::Sum);
        assert_eq!(summed.nnz(), 2);
        assert_eq!(summed.row(0).1, &[2.0]);
        let collapsed = CsrMatrix::from_triplets(2, 2, t, Dedup::Collapse);
        assert_eq!(collapsed.row(0).1, &[1.0]);
    }

    #[test]
    fn transpose_and_products() {
        let a = CsrMatrix::from_triplets(
            3,
            4,
            vec![(0, 1, 2.0), (1, 3, -1.0), (2, 0, 0.5), (2, 3, 4.0)],
            Dedup::Sum,
        );
        let at = a.transpose();
        assert_eq!(at.rows(), 4);
        let d = a.to_dense();
        assert!(at.to_dense().max_abs_diff(&d.transpose()) == 0.0);
        let x = Mat::from_fn(4, 2, |i, j| (i + j) as f64);
        let y = a.mul_dense(&x);
        let y_ref = d.mul(&x);
        assert!(y.max_abs_diff(&y_ref) < 1e-14);
    }

    #[test]
    fn select_compacts() {
        let a = CsrMatrix::from_triplets(
            4,
            4,
            vec![(0, 0, 1.0), (1, 2, 3.0), (3, 2, 5.0), (3, 3, 7.0)],
            Dedup::Sum,
        );
        let s = a.select(&[1, 3], &[2, 3]);
        assert_eq!(s.rows(), 2);
        assert_eq!(s.cols(), 2);
        assert_eq!(s.to_dense().data(), &[3.0, 0.0, 5.0, 7.0]);
    }
}
