//! Conversion of the whitened-tensor spectrum into model parameters: the
//! topic-word matrix μ̂ = (Wᵀ)†Φ, community memberships
//! Π̂ = diag(γ)^{1/3} diag(Λ)⁻¹ Φᵀ Wᵀ G restricted to the nodes outside the
//! whitening set (the remaining nodes come from a second pass with the roles
//! of X and A exchanged), the Dirichlet weights α̂ᵢ = γ²λᵢ⁻², and
//! thresholding.

use crate::error::{Error, Result};
use crate::graph_io::{NodePartition, SparseGraph};
use crate::linalg::{sym_eig, Mat};
use crate::stgd::EigenEstimate;
use crate::whitening::WhiteningContext;

/// λᵢ = ‖φᵢ‖₂³.
pub fn eigenvalues_from_norms(phi: &Mat) -> Vec<f64> {
    (0..phi.cols()).map(|j| phi.col_norm(j).powi(3)).collect()
}

/// γ from the normalization Σ γ²λᵢ⁻² = 1.
fn gamma_from_lambda(lambda: &[f64]) -> Result<f64> {
    let degenerate: Vec<usize> = lambda
        .iter()
        .enumerate()
        .filter(|(_, &l)| l <= 0.0)
        .map(|(i, _)| i)
        .collect();
    if !degenerate.is_empty() {
        return Err(Error::DegenerateComponent(degenerate));
    }
    let s: f64 = lambda.iter().map(|l| l.powi(-2)).sum();
    Ok(s.powf(-0.5))
}

/// α̂ᵢ = γ²λᵢ⁻², normalized to sum exactly 1.
pub fn alpha_from_lambda(lambda: &[f64]) -> Result<Vec<f64>> {
    let gamma = gamma_from_lambda(lambda)?;
    let mut alpha: Vec<f64> = lambda.iter().map(|l| gamma * gamma * l.powi(-2)).collect();
    let s: f64 = alpha.iter().sum();
    for a in alpha.iter_mut() {
        *a /= s;
    }
    Ok(alpha)
}

#[derive(Clone, Debug)]
pub struct TopicEstimate {
    /// d × k̂, columns clipped to the simplex.
    pub mu_hat: Mat,
    pub alpha_hat: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct CommunityEstimate {
    /// k̂ × n membership estimates.
    pub pi_hat: Mat,
    pub alpha_hat: Vec<f64>,
    pub threshold: f64,
    pub k_hat: usize,
    /// Columns zeroed out entirely by the threshold (kept as zeros).
    pub zeroed_columns: usize,
}

fn small_spd_inverse(m: &Mat) -> Mat {
    let (vals, vecs) = sym_eig(m);
    let n = m.rows();
    let mut out = Mat::zeros(n, n);
    for t in 0..n {
        let inv = 1.0 / vals[t];
        for i in 0..n {
            for j in 0..n {
                let add = inv * vecs.get(i, t) * vecs.get(j, t);
                out.set(i, j, out.get(i, j) + add);
            }
        }
    }
    out
}

/// μ̂ = (Wᵀ)†Φ = W (WᵀW)⁻¹ Φ, negatives clipped, columns renormalized.
pub fn recover_topics(ctx: &WhiteningContext, est: &EigenEstimate) -> Result<TopicEstimate> {
    let alpha_hat = alpha_from_lambda(&est.lambda)?;
    let wtw_inv = small_spd_inverse(&ctx.w.tr_mul(&ctx.w));
    let mut mu_hat = ctx.w.mul(&wtw_inv.mul(&est.phi));
    for v in mu_hat.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    for j in 0..mu_hat.cols() {
        let s: f64 = (0..mu_hat.rows()).map(|i| mu_hat.get(i, j)).sum();
        if s > 0.0 {
            mu_hat.scale_col(j, 1.0 / s);
        }
    }
    Ok(TopicEstimate { mu_hat, alpha_hat })
}

/// One Lemma-4 pass: memberships of the nodes in `target_cols` (all outside
/// the whitening set `a_set`), as a k̂ × |target| matrix. Row i is scaled by
/// γ^{1/3}/λᵢ.
pub fn membership_block(
    graph: &SparseGraph,
    a_set: &[usize],
    target_cols: &[usize],
    ctx: &WhiteningContext,
    est: &EigenEstimate,
) -> Result<Mat> {
    let gamma = gamma_from_lambda(&est.lambda)?;
    let q = ctx.w.mul(&est.phi); // n_A × k̂
    let g = graph.block(target_cols, a_set); // |target| × n_A
    let mut pi = g.mul_dense(&q).transpose(); // k̂ × |target|
    for (i, &lam) in est.lambda.iter().enumerate() {
        pi.scale_row(i, gamma.cbrt() / lam);
    }
    Ok(pi)
}

/// Align the rows of `other` to the rows of `reference` using Pearson
/// correlation over the shared columns; greedy highest-|ρ| matching.
/// Returns `perm` with `perm[row_of_reference] = row_of_other`.
fn align_rows(reference: &Mat, other: &Mat) -> Vec<usize> {
    let k = reference.rows();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            pairs.push((pearson(reference.row(i), other.row(j)).abs(), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut perm = vec![usize::MAX; k];
    let mut used_ref = vec![false; k];
    let mut used_other = vec![false; k];
    for (_, i, j) in pairs {
        if !used_ref[i] && !used_other[j] {
            perm[i] = j;
            used_ref[i] = true;
            used_other[j] = true;
        }
    }
    perm
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma: f64 = a.iter().sum::<f64>() / n;
    let mb: f64 = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

/// Combine the two pipeline passes into a full k̂ × n membership matrix and
/// apply clipping, renormalization, and thresholding.
///
/// Pass 1 estimates X ∪ B ∪ C from the A-side whitening; pass 2 runs with X
/// and A exchanged and fills in A. Pass-2 components arrive in their own
/// order and are aligned to pass 1 by row correlation over the shared B ∪ C
/// nodes before merging.
pub fn recover_memberships(
    graph: &SparseGraph,
    part: &NodePartition,
    pass1: (&WhiteningContext, &EigenEstimate),
    pass2: (&WhiteningContext, &EigenEstimate),
    threshold: f64,
) -> Result<CommunityEstimate> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Validation(format!(
            "threshold {threshold} must lie in [0, 1]"
        )));
    }
    let (ctx1, est1) = pass1;
    let (ctx2, est2) = pass2;
    let k_hat = est1.k();
    let n = graph.n_nodes();
    let alpha_hat = alpha_from_lambda(&est1.lambda)?;

    // Pass 1 from A: raw memberships for X ∪ B ∪ C.
    let ac = part.a_complement();
    let raw1 = membership_block(graph, &part.a, &ac, ctx1, est1)?;
    // Pass 2 from X (roles exchanged): memberships for A ∪ B ∪ C.
    let swapped = part.swap_x_a();
    let xc = swapped.a_complement();
    let raw2 = membership_block(graph, &swapped.a, &xc, ctx2, est2)?;

    // Align pass-2 rows to pass-1 rows on the shared B ∪ C columns.
    let bc_len = part.b.len() + part.c.len();
    let shared1 = Mat::from_fn(k_hat, bc_len, |i, j| raw1.get(i, part.x.len() + j));
    let shared2 = Mat::from_fn(k_hat, bc_len, |i, j| raw2.get(i, swapped.x.len() + j));
    let perm = align_rows(&shared1, &shared2);

    let mut pi = Mat::zeros(k_hat, n);
    for (col, &node) in ac.iter().enumerate() {
        for i in 0..k_hat {
            pi.set(i, node, raw1.get(i, col));
        }
    }
    for (col, &node) in part.a.iter().enumerate() {
        // A occupies the leading columns of pass 2's target (swapped X).
        for i in 0..k_hat {
            pi.set(i, node, raw2.get(perm[i], col));
        }
    }

    // Clip negatives, renormalize, threshold, renormalize.
    for v in pi.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    normalize_columns(&mut pi);
    let mut zeroed = 0usize;
    if threshold > 0.0 {
        for j in 0..n {
            let mut any = false;
            for i in 0..k_hat {
                if pi.get(i, j) <= threshold {
                    pi.set(i, j, 0.0);
                } else {
                    any = true;
                }
            }
            if !any {
                zeroed += 1;
            }
        }
        normalize_columns(&mut pi);
    }
    Ok(CommunityEstimate {
        pi_hat: pi,
        alpha_hat,
        threshold,
        k_hat,
        zeroed_columns: zeroed,
    })
}

fn normalize_columns(m: &mut Mat) {
    for j in 0..m.cols() {
        let s: f64 = (0..m.rows()).map(|i| m.get(i, j)).sum();
        if s > 0.0 {
            for i in 0..m.rows() {
                m.set(i, j, m.get(i, j) / s);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::thin_qr;
    use crate::whitening::WhitenMethod;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn eigenvalues_are_cubed_norms() {
        let phi = Mat::from_rows(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let lam = eigenvalues_from_norms(&phi);
        assert_eq!(lam, vec![1.0, 8.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = Mat::from_fn(4, 4, |_, _| StandardNormal.sample(&mut rng));
        let lam = eigenvalues_from_norms(&phi);
        for j in 0..4 {
            let norm: f64 = (0..4).map(|i| phi.get(i, j) * phi.get(i, j)).sum::<f64>();
            assert!((lam[j] - norm.sqrt().powi(3)).abs() < 1e-14);
        }
    }

    #[test]
    fn alpha_normalization_from_lambda() {
        // λ = (2, 1): α̂ ∝ (1/4, 1) → (1/5, 4/5).
        let alpha = alpha_from_lambda(&[2.0, 1.0]).unwrap();
        assert!((alpha[0] - 0.2).abs() < 1e-12);
        assert!((alpha[1] - 0.8).abs() < 1e-12);
        assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(matches!(
            alpha_from_lambda(&[1.0, 0.0]),
            Err(Error::DegenerateComponent(_))
        ));
    }

    #[test]
    fn orthogonal_whitening_recovers_topics_exactly() {
        let d = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (w, _) = thin_qr(&Mat::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng)));
        // column-stochastic μ
        let mut mu = Mat::from_fn(d, d, |i, j| ((i * 3 + j * 5) % 7 + 1) as f64);
        for j in 0..d {
            let s: f64 = (0..d).map(|i| mu.get(i, j)).sum();
            mu.scale_col(j, 1.0 / s);
        }
        let phi = w.tr_mul(&mu);
        let ctx = WhiteningContext {
            w: w.clone(),
            singular_values: vec![1.0; d],
            method: WhitenMethod::ExactSmall,
            projection_seed: 0,
            k_tilde: d,
        };
        let est = EigenEstimate {
            lambda: eigenvalues_from_norms(&phi),
            phi,
            iterations_run: 0,
            final_loss: 0.0,
            degenerate_columns: vec![],
        };
        let topics = recover_topics(&ctx, &est).unwrap();
        assert!(topics.mu_hat.max_abs_diff(&mu) < 1e-10);
    }

    #[test]
    fn scaling_phi_scales_lambda_cubically() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let phi = Mat::from_fn(3, 3, |_, _| StandardNormal.sample(&mut rng));
        let lam = eigenvalues_from_norms(&phi);
        let lam_scaled = eigenvalues_from_norms(&phi.scaled(2.0));
        for j in 0..3 {
            assert!((lam_scaled[j] - 8.0 * lam[j]).abs() < 1e-10 * lam[j].max(1.0));
        }
    }
}
