//! Cyclic Jacobi eigendecomposition for small symmetric matrices, and block
//! subspace iteration for truncated eigendecomposition of symmetric
//! operators (robust to repeated eigenvalues, unlike single-vector Krylov).

use super::lanczos::LinOp;
use super::mat::Mat;
use super::qr::thin_qr;
use super::rsvd::gaussian_test_matrix;
use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix: returns (eigenvalues, eigenvectors)
/// with eigenvalues sorted descending and eigenvectors as matching columns.
///
/// Jacobi rotations converge quadratically and are backward stable; intended
/// for the k̃ × k̃ cores and test-scale matrices, not O(n) × O(n) inputs.
pub fn sym_eig(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "sym_eig expects a square matrix");
    let mut m = a.clone();
    // Work on the symmetrized copy; tiny asymmetries from accumulation order
    // would otherwise stall convergence.
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    let mut v = Mat::identity(n);
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off.sqrt() <= 1e-14 * (m.frob_norm() + f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Update rows/cols p and q of m.
                for i in 0..n {
                    let mip = m.get(i, p);
                    let miq = m.get(i, q);
                    m.set(i, p, c * mip - s * miq);
                    m.set(i, q, s * mip + c * miq);
                }
                for i in 0..n {
                    let mpi = m.get(p, i);
                    let mqi = m.get(q, i);
                    m.set(p, i, c * mpi - s * mqi);
                    m.set(q, i, s * mpi + c * mqi);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m.get(i, i), i)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vecs = Mat::zeros(n, n);
    for (newj, &(_, oldj)) in pairs.iter().enumerate() {
        for i in 0..n {
            vecs.set(i, newj, v.get(i, oldj));
        }
    }
    (vals, vecs)
}

/// Top-k eigenpairs of a symmetric operator by block subspace iteration with
/// Rayleigh–Ritz extraction. Eigenvalues are sorted by descending magnitude;
/// each returned pair satisfies ‖A y − λ y‖ ≤ `tol`·|λ₁|.
pub fn subspace_eig(op: &dyn LinOp, k: usize, tol: f64, seed: u64) -> Result<(Vec<f64>, Mat)> {
    let n = op.nrows();
    assert_eq!(n, op.ncols(), "subspace_eig expects a symmetric operator");
    assert!(k >= 1 && k <= n);
    let width = (2 * k).max(k + 8).min(n);
    let apply = |x: &Mat| -> Mat {
        let mut y = Mat::zeros(n, x.cols());
        for j in 0..x.cols() {
            y.set_col(j, &op.matvec(&x.col(j)));
        }
        y
    };
    let mut q = thin_qr(&gaussian_test_matrix(n, width, seed)).0;
    let max_iters = 500;
    let mut worst = f64::INFINITY;
    for _ in 0..max_iters {
        let aq = apply(&q);
        let core = q.tr_mul(&aq);
        let (vals, vecs) = sym_eig(&core);
        // Order Ritz pairs by |λ| so the dominant invariant subspace is kept
        // even for indefinite input.
        let mut order: Vec<usize> = (0..width).collect();
        order.sort_by(|&a, &b| vals[b].abs().partial_cmp(&vals[a].abs()).unwrap());
        let y = q.mul(&vecs);
        let ay = aq.mul(&vecs);
        let lam1 = vals[order[0]].abs().max(f64::MIN_POSITIVE);
        worst = 0.0;
        for &j in order.iter().take(k) {
            let mut res = 0.0;
            for i in 0..n {
                let d = ay.get(i, j) - vals[j] * y.get(i, j);
                res += d * d;
            }
            worst = worst.max(res.sqrt() / lam1);
        }
        if worst <= tol {
            let mut out_vals = Vec::with_capacity(k);
            let mut out_vecs = Mat::zeros(n, k);
            for (t, &j) in order.iter().take(k).enumerate() {
                out_vals.push(vals[j]);
                for i in 0..n {
                    out_vecs.set(i, t, y.get(i, j));
                }
            }
            return Ok((out_vals, out_vecs));
        }
        q = thin_qr(&ay).0;
    }
    Err(Error::Convergence {
        what: "subspace iteration".into(),
        residual: worst,
        iters: max_iters,
    })
}

/// Symmetric positive-semidefinite square root via eigendecomposition,
/// clamping small negative eigenvalues (≥ −clamp_tol · λ_max) to zero.
pub fn psd_sqrt(a: &Mat, clamp_tol: f64) -> Mat {
    let (vals, vecs) = sym_eig(a);
    let lmax = vals.first().copied().unwrap_or(0.0).max(0.0);
    let n = a.rows();
    let mut out = Mat::zeros(n, n);
    for k in 0..n {
        let lam = if vals[k] < 0.0 {
            debug_assert!(vals[k] >= -clamp_tol * lmax.max(f64::MIN_POSITIVE) - 1e-300);
            0.0
        } else {
            vals[k]
        };
        let s = lam.sqrt();
        if s == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                let add = s * vecs.get(i, k) * vecs.get(j, k);
                out.set(i, j, out.get(i, j) + add);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_of_diagonal() {
        let a = Mat::from_rows(3, 3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let (vals, vecs) = sym_eig(&a);
        assert!((vals[0] - 3.0).abs() < 1e-13);
        assert!((vals[1] - 2.0).abs() < 1e-13);
        assert!((vals[2] - 1.0).abs() < 1e-13);
        let vtv = vecs.tr_mul(&vecs);
        assert!(vtv.max_abs_diff(&Mat::identity(3)) < 1e-12);
    }

    #[test]
    fn eig_reconstructs() {
        let n = 8;
        let b = Mat::from_fn(n, n, |i, j| ((i * 13 + j * 7) % 17) as f64 / 17.0 - 0.5);
        let a = b.tr_mul(&b); // symmetric psd
        let (vals, vecs) = sym_eig(&a);
        let mut recon = Mat::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let add = vals[k] * vecs.get(i, k) * vecs.get(j, k);
                    recon.set(i, j, recon.get(i, j) + add);
                }
            }
        }
        assert!(recon.max_abs_diff(&a) < 1e-11);
    }
}
