//! First- and second-order empirical moments in low-rank factored form, and
//! the per-sample stream backing the implicit third-order moment.
//!
//! Nothing here materializes an O(n)×O(n) object: Pairs matrices act as
//! operators over the sparse adjacency blocks, the symmetrizers Z_B and Z_C
//! are kept as (tall)·(tall)ᵀ factor pairs around a rank-k pseudoinverse, and
//! M2 is a chain of those factors plus a rank-one shift and a diagonal
//! correction. The third-order tensor is never assembled at all; its samples
//! are streamed into the stochastic decomposition, where the α₀-dependent
//! centering enters through the shifted update terms.

use crate::error::{Error, Result};
use crate::graph_io::{Corpus, NodePartition, SparseGraph};
use crate::linalg::{rank_k_pinv, CsrMatrix, LinOp, Mat};
use crate::textio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Singular values below `RANK_TOL`·σ₁ are treated as zero in pseudoinverses.
pub const RANK_TOL: f64 = 1e-8;

/// Node-set labels of the community partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetLabel {
    X,
    A,
    B,
    C,
}

impl NodePartition {
    pub fn set(&self, label: SetLabel) -> &[usize] {
        match label {
            SetLabel::X => &self.x,
            SetLabel::A => &self.a,
            SetLabel::B => &self.b,
            SetLabel::C => &self.c,
        }
    }
}

/// Pairs(Y₁, Y₂) = G_{X,Y₁}ᵀ G_{X,Y₂} / |X| as an implicit operator.
pub struct PairsMatrix {
    g_left: CsrMatrix,  // G_{X,Y1}, |X| × |Y1|
    g_right: CsrMatrix, // G_{X,Y2}, |X| × |Y2|
    inv_nx: f64,
}

impl PairsMatrix {
    pub fn nrows(&self) -> usize {
        self.g_left.cols()
    }

    pub fn ncols(&self) -> usize {
        self.g_right.cols()
    }

    /// Pairs · X without densifying: G_leftᵀ (G_right X) / n_X.
    pub fn mul_dense(&self, x: &Mat) -> Mat {
        let mut out = self.g_left.tr_mul_dense(&self.g_right.mul_dense(x));
        out.scale(self.inv_nx);
        out
    }

    /// Pairsᵀ · X.
    pub fn tr_mul_dense(&self, x: &Mat) -> Mat {
        let mut out = self.g_right.tr_mul_dense(&self.g_left.mul_dense(x));
        out.scale(self.inv_nx);
        out
    }

    /// Dense expansion; test aid for small instances.
    pub fn expand(&self) -> Mat {
        self.mul_dense(&Mat::identity(self.ncols()))
    }
}

impl LinOp for PairsMatrix {
    fn nrows(&self) -> usize {
        PairsMatrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        PairsMatrix::ncols(self)
    }
    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let xm = Mat::from_rows(x.len(), 1, x);
        self.mul_dense(&xm).col(0)
    }
    fn rmatvec(&self, x: &[f64]) -> Vec<f64> {
        let xm = Mat::from_rows(x.len(), 1, x);
        self.tr_mul_dense(&xm).col(0)
    }
}

/// Cross-moment Pairs(Y₁,Y₂) over the partition's X rows.
pub fn compute_pairs(
    graph: &SparseGraph,
    part: &NodePartition,
    y1: SetLabel,
    y2: SetLabel,
) -> Result<PairsMatrix> {
    if part.x.is_empty() {
        return Err(Error::Validation("partition set X is empty".into()));
    }
    if part.set(y1).is_empty() || part.set(y2).is_empty() {
        return Err(Error::Validation(format!(
            "partition set {:?} or {:?} is empty",
            y1, y2
        )));
    }
    Ok(PairsMatrix {
        g_left: graph.block(&part.x, part.set(y1)),
        g_right: graph.block(&part.x, part.set(y2)),
        inv_nx: 1.0 / part.x.len() as f64,
    })
}

/// Z = left · rightᵀ, both factors tall-thin.
#[derive(Clone, Debug)]
pub struct LowRankFactor {
    pub left: Mat,
    pub right: Mat,
}

impl LowRankFactor {
    /// Z · X = left (rightᵀ X).
    pub fn mul_dense(&self, x: &Mat) -> Mat {
        self.left.mul(&self.right.tr_mul(x))
    }

    /// Zᵀ · X = right (leftᵀ X).
    pub fn tr_mul_dense(&self, x: &Mat) -> Mat {
        self.right.mul(&self.left.tr_mul(x))
    }

    pub fn expand(&self) -> Mat {
        self.left.mul(&self.right.transpose())
    }
}

/// The symmetrizers Z_B = Pairs(A,C)·Pairs(B,C)† and
/// Z_C = Pairs(A,B)·Pairs(C,B)†, kept in factored form around one rank-k
/// SVD of Pairs(B,C).
#[derive(Clone, Debug)]
pub struct SymmetrizationPair {
    pub z_b: LowRankFactor,
    pub z_c: LowRankFactor,
    /// Top-k singular values of Pairs(B,C).
    pub svals_bc: Vec<f64>,
}

/// Options for the randomized pseudoinverse inside the symmetrizers.
#[derive(Clone, Copy, Debug)]
pub struct SymmetrizerOpts {
    pub k_tilde: usize,
    pub power_iters: usize,
    pub seed: u64,
    pub rank_tol: f64,
}

impl SymmetrizerOpts {
    pub fn for_k(k: usize, seed: u64) -> Self {
        SymmetrizerOpts {
            k_tilde: 2 * k,
            power_iters: 2,
            seed,
            rank_tol: RANK_TOL,
        }
    }
}

pub fn compute_symmetrizers(
    graph: &SparseGraph,
    part: &NodePartition,
    k: usize,
    opts: SymmetrizerOpts,
) -> Result<SymmetrizationPair> {
    if part.b.len() < k || part.c.len() < k {
        return Err(Error::Config(format!(
            "|B| = {} and |C| = {} must both be ≥ k = {}",
            part.b.len(),
            part.c.len(),
            k
        )));
    }
    let p_bc = compute_pairs(graph, part, SetLabel::B, SetLabel::C)?;
    let p_ac = compute_pairs(graph, part, SetLabel::A, SetLabel::C)?;
    let p_ab = compute_pairs(graph, part, SetLabel::A, SetLabel::B)?;
    // Rank-k SVD of Pairs(B,C) through the random sketch; both pseudoinverses
    // come from the same factors: Pairs(B,C)† = V Σ⁻¹ Uᵀ and
    // Pairs(C,B)† = U Σ⁻¹ Vᵀ.
    let pinv = rank_k_pinv(
        &p_bc,
        k,
        opts.k_tilde.max(k),
        opts.power_iters,
        opts.seed,
        opts.rank_tol,
        "Pairs(B,C)",
    )?;
    let mut v_scaled = pinv.v.clone(); // n_C × k
    let mut u_scaled = pinv.u.clone(); // n_B × k
    for (j, &inv_s) in pinv.inv_s.iter().enumerate() {
        v_scaled.scale_col(j, inv_s);
        u_scaled.scale_col(j, inv_s);
    }
    let z_b = LowRankFactor {
        left: p_ac.mul_dense(&v_scaled), // n_A × k
        right: pinv.u.clone(),           // n_B × k
    };
    let z_c = LowRankFactor {
        left: p_ab.mul_dense(&u_scaled), // n_A × k
        right: pinv.v.clone(),           // n_C × k
    };
    Ok(SymmetrizationPair {
        z_b,
        z_c,
        svals_bc: pinv.svals,
    })
}

/// First and second empirical moments. M2 is held factored; `apply_dense`
/// and the `LinOp` impl are the only ways downstream code touches it.
pub struct MomentSummary {
    pub m1: Vec<f64>,
    pub alpha0: f64,
    op: M2Op,
}

enum M2Op {
    /// 0.5·(L_c K L_bᵀ + L_b Kᵀ L_cᵀ) − c·m1 m1ᵀ + c·diag(m1∘m1),
    /// c = α₀/(α₀+1). The explicit symmetrization makes the factored form
    /// symmetric to machine precision, not just in expectation.
    Community {
        left_c: Mat,
        core: Mat,
        left_b: Mat,
        shift_coef: f64,
    },
    /// (α₀+1)/n·(Cᵀ C − diag(word totals)) − α₀·m1 m1ᵀ over raw counts.
    Topic {
        freq: CsrMatrix,
        word_totals: Vec<f64>,
        scale: f64,
    },
}

impl MomentSummary {
    pub fn dim(&self) -> usize {
        self.m1.len()
    }

    pub fn apply_dense(&self, x: &Mat) -> Mat {
        assert_eq!(x.rows(), self.dim(), "M2 apply: dimension mismatch");
        match &self.op {
            M2Op::Community {
                left_c,
                core,
                left_b,
                shift_coef,
            } => {
                let mut out = left_c.mul(&core.mul(&left_b.tr_mul(x)));
                out.add_scaled(1.0, &left_b.mul(&core.transpose().mul(&left_c.tr_mul(x))));
                out.scale(0.5);
                if *shift_coef != 0.0 {
                    rank_one_and_diag_shift(&mut out, &self.m1, *shift_coef, x);
                }
                out
            }
            M2Op::Topic {
                freq,
                word_totals,
                scale,
            } => {
                let mut out = freq.tr_mul_dense(&freq.mul_dense(x));
                for i in 0..out.rows() {
                    let w = word_totals[i];
                    let x_row = x.row(i);
                    let o = out.row_mut(i);
                    for c in 0..o.len() {
                        o[c] = (o[c] - w * x_row[c]) * scale;
                    }
                }
                if self.alpha0 != 0.0 {
                    let m1tx = {
                        let mut acc = vec![0.0; x.cols()];
                        for i in 0..x.rows() {
                            let m = self.m1[i];
                            if m != 0.0 {
                                for (a, &v) in acc.iter_mut().zip(x.row(i)) {
                                    *a += m * v;
                                }
                            }
                        }
                        acc
                    };
                    for i in 0..out.rows() {
                        let m = self.alpha0 * self.m1[i];
                        let o = out.row_mut(i);
                        for c in 0..o.len() {
                            o[c] -= m * m1tx[c];
                        }
                    }
                }
                out
            }
        }
    }

    /// Dense expansion, test/debug aid only.
    pub fn expand(&self) -> Mat {
        assert!(
            self.dim() <= 2048,
            "expand() is a small-scale debug aid (dim = {})",
            self.dim()
        );
        self.apply_dense(&Mat::identity(self.dim()))
    }

    /// Debug dump of the expanded M2, allowed only for dim ≤ 200.
    pub fn dump_expanded(&self, path: &Path) -> Result<()> {
        if self.dim() > 200 {
            return Err(Error::Validation(format!(
                "M2 debug dump limited to dim ≤ 200, got {}",
                self.dim()
            )));
        }
        textio::write_matrix(path, &self.expand())
    }
}

fn rank_one_and_diag_shift(out: &mut Mat, m1: &[f64], coef: f64, x: &Mat) {
    // out += −coef·m1 (m1ᵀ x) + coef·diag(m1∘m1) x
    let cols = x.cols();
    let mut m1tx = vec![0.0; cols];
    for i in 0..x.rows() {
        let m = m1[i];
        if m != 0.0 {
            for (a, &v) in m1tx.iter_mut().zip(x.row(i)) {
                *a += m * v;
            }
        }
    }
    for i in 0..out.rows() {
        let m = m1[i];
        let x_row = x.row(i);
        let o = out.row_mut(i);
        for c in 0..cols {
            o[c] += coef * (m * m * x_row[c] - m * m1tx[c]);
        }
    }
}

impl LinOp for MomentSummary {
    fn nrows(&self) -> usize {
        self.dim()
    }
    fn ncols(&self) -> usize {
        self.dim()
    }
    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.apply_dense(&Mat::from_rows(x.len(), 1, x)).col(0)
    }
    fn rmatvec(&self, x: &[f64]) -> Vec<f64> {
        // symmetric by construction
        self.matvec(x)
    }
}

/// Community-path moments: M1 is the mean of G_{x,A}ᵀ over x ∈ X; M2 is
/// Z_C Pairs(C,B) Z_Bᵀ with the α₀ shift
/// α₀/(α₀+1)·(M1M1ᵀ − diag(M1M1ᵀ)) subtracted, all in factored form.
pub fn compute_m2_community(
    graph: &SparseGraph,
    part: &NodePartition,
    symm: &SymmetrizationPair,
    alpha0: f64,
) -> Result<MomentSummary> {
    if alpha0 < 0.0 {
        return Err(Error::Validation("α₀ must be nonnegative".into()));
    }
    let g_xa = graph.block(&part.x, &part.a);
    let n_x = part.x.len() as f64;
    let m1: Vec<f64> = g_xa.col_sums().iter().map(|s| s / n_x).collect();
    let p_cb = compute_pairs(graph, part, SetLabel::C, SetLabel::B)?;
    // core = right_cᵀ · Pairs(C,B) · right_b, a k×k matrix.
    let core = symm.z_c.right.tr_mul(&p_cb.mul_dense(&symm.z_b.right));
    Ok(MomentSummary {
        m1,
        alpha0,
        op: M2Op::Community {
            left_c: symm.z_c.left.clone(),
            core,
            left_b: symm.z_b.left.clone(),
            shift_coef: alpha0 / (alpha0 + 1.0),
        },
    })
}

/// Topic-path moments over raw frequency vectors:
/// M2 = (α₀+1)/n Σ (cₜ⊗cₜ − diag cₜ) − α₀ M1⊗M1.
pub fn compute_m2_topic(corpus: &Corpus, alpha0: f64) -> Result<MomentSummary> {
    if alpha0 < 0.0 {
        return Err(Error::Validation("α₀ must be nonnegative".into()));
    }
    let n = corpus.n_docs();
    if n == 0 {
        return Err(Error::Validation(
            "corpus has no documents after the length filter".into(),
        ));
    }
    let freq = corpus.freq().clone();
    let word_totals = freq.col_sums();
    let m1: Vec<f64> = word_totals.iter().map(|s| s / n as f64).collect();
    Ok(MomentSummary {
        m1,
        alpha0,
        op: M2Op::Topic {
            freq,
            word_totals,
            scale: (alpha0 + 1.0) / n as f64,
        },
    })
}

/// The raw per-sample triples behind the third-order moment: community
/// samples are (G_{x,A}ᵀ, G_{x,B}ᵀ, G_{x,C}ᵀ) for x ∈ X, topic samples are
/// (cₜ, cₜ, cₜ) per document. Restartable and shuffle-able by seed.
pub struct SampleStream {
    kind: StreamKind,
}

enum StreamKind {
    Community {
        g_xa: CsrMatrix,
        g_xb: CsrMatrix,
        g_xc: CsrMatrix,
    },
    Topic {
        freq: CsrMatrix,
    },
}

/// One sparse view vector: parallel (indices, values) slices.
pub type SparseVecRef<'a> = (&'a [usize], &'a [f64]);

impl SampleStream {
    pub fn community(graph: &SparseGraph, part: &NodePartition) -> Self {
        SampleStream {
            kind: StreamKind::Community {
                g_xa: graph.block(&part.x, &part.a),
                g_xb: graph.block(&part.x, &part.b),
                g_xc: graph.block(&part.x, &part.c),
            },
        }
    }

    pub fn topic(corpus: &Corpus) -> Self {
        SampleStream {
            kind: StreamKind::Topic {
                freq: corpus.freq().clone(),
            },
        }
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            StreamKind::Community { g_xa, .. } => g_xa.rows(),
            StreamKind::Topic { freq } => freq.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// View dimensions (|A|, |B|, |C|) — all equal to d on the topic path.
    pub fn view_dims(&self) -> (usize, usize, usize) {
        match &self.kind {
            StreamKind::Community { g_xa, g_xb, g_xc } => {
                (g_xa.cols(), g_xb.cols(), g_xc.cols())
            }
            StreamKind::Topic { freq } => (freq.cols(), freq.cols(), freq.cols()),
        }
    }

    /// The raw triple for sample `i`. On the topic path all three views
    /// alias the same frequency vector.
    pub fn triple(&self, i: usize) -> (SparseVecRef<'_>, SparseVecRef<'_>, SparseVecRef<'_>) {
        match &self.kind {
            StreamKind::Community { g_xa, g_xb, g_xc } => (g_xa.row(i), g_xb.row(i), g_xc.row(i)),
            StreamKind::Topic { freq } => {
                let r = freq.row(i);
                (r, r, r)
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, (SparseVecRef<'_>, SparseVecRef<'_>, SparseVecRef<'_>))> {
        (0..self.len()).map(move |i| (i, self.triple(i)))
    }

    /// Deterministic shuffled visiting order for a given seed.
    pub fn shuffled_indices(&self, seed: u64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        idx
    }

    pub(crate) fn blocks(&self) -> (&CsrMatrix, &CsrMatrix, &CsrMatrix) {
        match &self.kind {
            StreamKind::Community { g_xa, g_xb, g_xc } => (g_xa, g_xb, g_xc),
            StreamKind::Topic { freq } => (freq, freq, freq),
        }
    }
}
