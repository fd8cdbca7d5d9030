//! Randomized range finding and rank-k factorizations of implicit operators.
//!
//! The sketch-and-project scheme: draw a unit-norm Gaussian test matrix S of
//! width k̃, form Y = A·S (optionally sharpened by power iterations
//! A·(Aᵀ·Y)), orthonormalize, and work in the small projected space. Every
//! dense intermediate is tall-thin.

use super::lanczos::{LinOp, TruncatedSvd};
use super::mat::Mat;
use super::qr::thin_qr;
use super::svd::dense_svd;
use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Gaussian test matrix with unit-norm columns.
pub fn gaussian_test_matrix(rows: usize, width: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Mat::from_fn(rows, width, |_, _| StandardNormal.sample(&mut rng));
    for j in 0..width {
        let n = s.col_norm(j);
        if n > 0.0 {
            s.scale_col(j, 1.0 / n);
        }
    }
    s
}

fn op_mul_dense(op: &dyn LinOp, x: &Mat) -> Mat {
    let mut y = Mat::zeros(op.nrows(), x.cols());
    for j in 0..x.cols() {
        let col = op.matvec(&x.col(j));
        y.set_col(j, &col);
    }
    y
}

fn op_tr_mul_dense(op: &dyn LinOp, x: &Mat) -> Mat {
    let mut y = Mat::zeros(op.ncols(), x.cols());
    for j in 0..x.cols() {
        let col = op.rmatvec(&x.col(j));
        y.set_col(j, &col);
    }
    y
}

/// Orthonormal basis (ncols = width) approximating the range of `op`.
pub fn randomized_range(op: &dyn LinOp, width: usize, power_iters: usize, seed: u64) -> Mat {
    let s = gaussian_test_matrix(op.ncols(), width, seed);
    let mut y = op_mul_dense(op, &s);
    for _ in 0..power_iters {
        let (q, _) = thin_qr(&y);
        let z = op_tr_mul_dense(op, &q);
        let (qz, _) = thin_qr(&z);
        y = op_mul_dense(op, &qz);
    }
    let (q, _) = thin_qr(&y);
    q
}

/// Rank-k truncated SVD via random projection: sketch the range with width
/// k̃ = 2k, project, and take the SVD of the small core.
pub fn randomized_svd(
    op: &dyn LinOp,
    k: usize,
    width: usize,
    power_iters: usize,
    seed: u64,
) -> TruncatedSvd {
    let width = width.min(op.nrows().min(op.ncols()));
    let q = randomized_range(op, width, power_iters, seed);
    // B = Qᵀ A  (width × ncols), handled through its transpose to stay tall.
    let bt = op_tr_mul_dense(op, &q); // ncols × width
    let (qb, rb) = thin_qr(&bt);
    // A ≈ Q · Rbᵀ · Qbᵀ; SVD of the small width×width core.
    let core = dense_svd(&rb.transpose());
    let keep = k.min(width);
    let u = q.mul(&core.u.truncate_cols(keep));
    let v = qb.mul(&core.vt.transpose().truncate_cols(keep));
    TruncatedSvd {
        u,
        s: core.s[..keep].to_vec(),
        v,
    }
}

/// Factored Moore–Penrose pseudoinverse of a rank-k operator:
/// A† = V diag(1/σ) Uᵀ, with singular values below rank_tol·σ₁ dropped.
/// Errors if the numerical rank is below `k`.
#[derive(Clone, Debug)]
pub struct PinvFactors {
    /// ncols × r
    pub v: Mat,
    /// length r, already inverted
    pub inv_s: Vec<f64>,
    /// nrows × r
    pub u: Mat,
    pub svals: Vec<f64>,
}

pub fn rank_k_pinv(
    op: &dyn LinOp,
    k: usize,
    width: usize,
    power_iters: usize,
    seed: u64,
    rank_tol: f64,
    name: &str,
) -> Result<PinvFactors> {
    let svd = randomized_svd(op, k, width, power_iters, seed);
    let sigma1 = svd.s.first().copied().unwrap_or(0.0);
    let rank = svd
        .s
        .iter()
        .take_while(|&&s| s > rank_tol * sigma1.max(f64::MIN_POSITIVE))
        .count();
    if rank < k {
        return Err(Error::DegenerateMoment {
            matrix: name.to_string(),
            rank,
            k,
        });
    }
    let inv_s: Vec<f64> = svd.s[..k].iter().map(|s| 1.0 / s).collect();
    Ok(PinvFactors {
        v: svd.v.truncate_cols(k),
        inv_s,
        u: svd.u.truncate_cols(k),
        svals: svd.s[..k].to_vec(),
    })
}
