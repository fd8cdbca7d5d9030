//! Rank-k whitening of M2 and projection of the per-sample views down to k
//! dimensions.
//!
//! The randomized paths sketch the range of M2 with a unit-norm Gaussian
//! test matrix of width k̃ = 2k (optionally sharpened by power iterations),
//! reduce the sketch to an orthonormal basis by tall-thin SVD or tall-thin
//! QR, and then solve the small projected eigenproblem. Building W from the
//! projected core makes WᵀM₂W = I hold to machine precision by construction;
//! how well the sketch captures the true top-k spectrum only affects the
//! reported singular values. The `exact-small` path runs the Lanczos solver
//! on the full operator and serves as the oracle.

use crate::error::{Error, Result};
use crate::linalg::{
    gaussian_test_matrix, lanczos_svd, subspace_eig, sym_eig, thin_qr, LinOp, Mat, TruncatedSvd,
};
use crate::moments::{MomentSummary, SampleStream, SymmetrizationPair, RANK_TOL};
use crate::textio;
use std::path::Path;

/// Largest dimension the exact (Lanczos, full-operator) oracle path accepts.
pub const EXACT_SMALL_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WhitenMethod {
    TallThinSvd,
    TallThinQr,
    ExactSmall,
}

impl WhitenMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tall-thin-svd" => Ok(WhitenMethod::TallThinSvd),
            "tall-thin-qr" => Ok(WhitenMethod::TallThinQr),
            "exact-small" => Ok(WhitenMethod::ExactSmall),
            other => Err(Error::Config(format!("unknown whitening method {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WhitenMethod::TallThinSvd => "tall-thin-svd",
            WhitenMethod::TallThinQr => "tall-thin-qr",
            WhitenMethod::ExactSmall => "exact-small",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WhitenOptions {
    pub method: WhitenMethod,
    pub seed: u64,
    /// Power iterations sharpening the sketched range; 0 is the plain
    /// projection.
    pub power_iters: usize,
    pub rank_tol: f64,
}

impl WhitenOptions {
    pub fn new(method: WhitenMethod, seed: u64) -> Self {
        WhitenOptions {
            method,
            seed,
            power_iters: 1,
            rank_tol: RANK_TOL,
        }
    }
}

/// The whitening matrix W (n_A×k or d×k) with WᵀM₂W ≈ I_k, plus the top-k
/// singular values of M₂ seen through the chosen method.
#[derive(Clone, Debug)]
pub struct WhiteningContext {
    pub w: Mat,
    pub singular_values: Vec<f64>,
    pub method: WhitenMethod,
    pub projection_seed: u64,
    pub k_tilde: usize,
}

impl WhiteningContext {
    pub fn k(&self) -> usize {
        self.w.cols()
    }

    pub fn dump_w(&self, path: &Path) -> Result<()> {
        textio::write_matrix(path, &self.w)
    }

    pub fn load_w(path: &Path) -> Result<Mat> {
        textio::read_matrix(path)
    }
}

/// Whitening matrix for the factored M2.
pub fn randomized_whiten(
    m2: &MomentSummary,
    k: usize,
    opts: WhitenOptions,
) -> Result<WhiteningContext> {
    whiten_operator(m2, k, opts)
}

/// Same, over any symmetric positive-semidefinite operator.
pub fn whiten_operator(op: &dyn LinOp, k: usize, opts: WhitenOptions) -> Result<WhiteningContext> {
    let n = op.nrows();
    assert_eq!(n, op.ncols(), "whitening expects a symmetric operator");
    if k < 1 || k > n {
        return Err(Error::Config(format!("k = {k} out of range for dim {n}")));
    }
    let k_tilde = (2 * k).min(n);
    // Full-space eigenvector candidates (columns) with their eigenvalues,
    // sorted descending, at least k of them.
    let (evals, vecs) = match opts.method {
        WhitenMethod::ExactSmall => {
            if n > EXACT_SMALL_LIMIT {
                return Err(Error::Config(format!(
                    "exact-small whitening is limited to dim ≤ {EXACT_SMALL_LIMIT}, got {n}"
                )));
            }
            subspace_eig(op, k, 1e-11, opts.seed)?
        }
        WhitenMethod::TallThinSvd | WhitenMethod::TallThinQr => {
            let s = gaussian_test_matrix(n, k_tilde, opts.seed);
            let mut o = op_apply(op, &s);
            for _ in 0..opts.power_iters {
                let (q, _) = thin_qr(&o);
                o = op_apply(op, &op_apply(op, &q));
            }
            let basis = match opts.method {
                WhitenMethod::TallThinSvd => {
                    // Thin SVD of the sketch: QR first, SVD of the small R;
                    // the left factor spans the same range.
                    let (q, r) = thin_qr(&o);
                    let small = crate::linalg::dense_svd(&r);
                    q.mul(&small.u)
                }
                _ => thin_qr(&o).0,
            };
            // Rayleigh–Ritz: eigendecomposition of the k̃×k̃ projected core.
            let core = basis.tr_mul(&op_apply(op, &basis));
            let (evals, evecs) = sym_eig(&core);
            (evals, basis.mul(&evecs))
        }
    };
    let rank = numerical_rank(&evals, opts.rank_tol);
    if rank < k {
        return Err(Error::DegenerateMoment {
            matrix: "M2".into(),
            rank,
            k,
        });
    }
    let mut w = vecs.truncate_cols(k);
    for j in 0..k {
        w.scale_col(j, 1.0 / evals[j].sqrt());
    }
    fix_column_signs(&mut w);
    Ok(WhiteningContext {
        w,
        singular_values: evals[..k].to_vec(),
        method: opts.method,
        projection_seed: opts.seed,
        k_tilde,
    })
}

fn op_apply(op: &dyn LinOp, x: &Mat) -> Mat {
    let mut y = Mat::zeros(op.nrows(), x.cols());
    for j in 0..x.cols() {
        y.set_col(j, &op.matvec(&x.col(j)));
    }
    y
}

fn numerical_rank(evals: &[f64], rank_tol: f64) -> usize {
    let top = evals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    evals
        .iter()
        .take_while(|&&l| l > rank_tol * top)
        .count()
}

/// Make each column's largest-magnitude entry positive, for reproducible
/// output across runs that differ only by eigenvector sign.
fn fix_column_signs(w: &mut Mat) {
    for j in 0..w.cols() {
        let mut best = 0.0f64;
        let mut best_val = 0.0f64;
        for i in 0..w.rows() {
            let v = w.get(i, j);
            if v.abs() > best {
                best = v.abs();
                best_val = v;
            }
        }
        if best_val < 0.0 {
            w.scale_col(j, -1.0);
        }
    }
}

/// ‖WᵀM₂W − I_k‖_F, the whitening-identity residual.
pub fn whitening_residual(ctx: &WhiteningContext, m2: &dyn LinOp) -> f64 {
    let m2w = op_apply(m2, &ctx.w);
    let mut g = ctx.w.tr_mul(&m2w);
    g.add_scaled(-1.0, &Mat::identity(ctx.k()));
    g.frob_norm()
}

/// Per-sample whitened k-vectors y_A, y_B, y_C plus their running means.
#[derive(Clone, Debug)]
pub struct WhitenedViews {
    pub y_a: Mat,
    pub y_b: Mat,
    pub y_c: Mat,
    pub mu_a: Vec<f64>,
    pub mu_b: Vec<f64>,
    pub mu_c: Vec<f64>,
}

impl WhitenedViews {
    pub fn n_samples(&self) -> usize {
        self.y_a.rows()
    }

    pub fn k(&self) -> usize {
        self.y_a.cols()
    }

    pub fn sample(&self, i: usize) -> (&[f64], &[f64], &[f64]) {
        (self.y_a.row(i), self.y_b.row(i), self.y_c.row(i))
    }
}

/// Project every sample of the stream: y_A = ⟨W, G_{x,A}ᵀ⟩,
/// y_B = ⟨W, Z_B G_{x,B}ᵀ⟩, y_C = ⟨W, Z_C G_{x,C}ᵀ⟩ on the community path;
/// the topic path applies W to the shared frequency vector.
pub fn whiten_views(
    ctx: &WhiteningContext,
    symm: Option<&SymmetrizationPair>,
    stream: &SampleStream,
) -> Result<WhitenedViews> {
    let (dim_a, dim_b, dim_c) = stream.view_dims();
    if ctx.w.rows() != dim_a {
        return Err(Error::Dim(format!(
            "W has {} rows, A-view dimension is {}",
            ctx.w.rows(),
            dim_a
        )));
    }
    let (g_a, g_b, g_c) = stream.blocks();
    let (y_a, y_b, y_c) = match symm {
        Some(symm) => {
            if symm.z_b.right.rows() != dim_b || symm.z_c.right.rows() != dim_c {
                return Err(Error::Dim(format!(
                    "symmetrizer dims ({}, {}) do not match view dims ({}, {})",
                    symm.z_b.right.rows(),
                    symm.z_c.right.rows(),
                    dim_b,
                    dim_c
                )));
            }
            // R_B = Z_Bᵀ W stays tall-thin: right_b (left_bᵀ W).
            let r_b = symm.z_b.right.mul(&symm.z_b.left.tr_mul(&ctx.w));
            let r_c = symm.z_c.right.mul(&symm.z_c.left.tr_mul(&ctx.w));
            (
                g_a.mul_dense(&ctx.w),
                g_b.mul_dense(&r_b),
                g_c.mul_dense(&r_c),
            )
        }
        None => {
            let y = g_a.mul_dense(&ctx.w);
            (y.clone(), y.clone(), y)
        }
    };
    let mean = |m: &Mat| -> Vec<f64> {
        let n = m.rows().max(1) as f64;
        (0..m.cols())
            .map(|j| (0..m.rows()).map(|i| m.get(i, j)).sum::<f64>() / n)
            .collect()
    };
    Ok(WhitenedViews {
        mu_a: mean(&y_a),
        mu_b: mean(&y_b),
        mu_c: mean(&y_c),
        y_a,
        y_b,
        y_c,
    })
}

/// Truncated SVD of a sparse operator via the Lanczos solver; deterministic
/// for a fixed seed, residual-verified per retained triplet.
pub fn sparse_svd(op: &dyn LinOp, k: usize, seed: u64) -> Result<TruncatedSvd> {
    lanczos_svd(op, k, 1e-8, seed)
}
