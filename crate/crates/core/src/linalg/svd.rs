//! One-sided Jacobi SVD for small dense matrices.
//!
//! Orthogonalizes column pairs of A in place while accumulating V; singular
//! values come out as column norms. Robust on rank-deficient input. Used for
//! the small projected cores and as the dense oracle in tests.

use super::mat::{dot, Mat};

pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub vt: Mat,
}

/// Full SVD of a small dense matrix (any shape).
pub fn dense_svd(a: &Mat) -> Svd {
    if a.rows() < a.cols() {
        let t = dense_svd(&a.transpose());
        return Svd {
            u: t.vt.transpose(),
            s: t.s,
            vt: t.u.transpose(),
        };
    }
    let (n, m) = (a.rows(), a.cols());
    let mut u = a.clone();
    let mut v = Mat::identity(m);
    let tol = 1e-15;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let up: Vec<f64> = u.col(p);
                let uq: Vec<f64> = u.col(q);
                let alpha = dot(&up, &up);
                let beta = dot(&uq, &uq);
                let gamma = dot(&up, &uq);
                if gamma.abs() <= tol * (alpha * beta).sqrt() + f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let a_ip = u.get(i, p);
                    let a_iq = u.get(i, q);
                    u.set(i, p, c * a_ip - s * a_iq);
                    u.set(i, q, s * a_ip + c * a_iq);
                }
                for i in 0..m {
                    let v_ip = v.get(i, p);
                    let v_iq = v.get(i, q);
                    v.set(i, p, c * v_ip - s * v_iq);
                    v.set(i, q, s * v_ip + c * v_iq);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<(f64, usize)> = (0..m).map(|j| (u.col_norm(j), j)).collect();
    sv.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut uu = Mat::zeros(n, m);
    let mut vv = Mat::zeros(m, m);
    let mut s = Vec::with_capacity(m);
    for (newj, &(sig, oldj)) in sv.iter().enumerate() {
        s.push(sig);
        if sig > 0.0 {
            for i in 0..n {
                uu.set(i, newj, u.get(i, oldj) / sig);
            }
        }
        for i in 0..m {
            vv.set(i, newj, v.get(i, oldj));
        }
    }
    Svd {
        u: uu,
        s,
        vt: vv.transpose(),
    }
}
