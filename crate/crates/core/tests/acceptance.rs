//! Acceptance suite. Each test prints one `criterion N: PASS`/`FAIL` line;
//! criterion 8 (memory/complexity guard) lives in `perf.rs` so its
//! allocation audit and timing run in a process of their own.

mod common;

use common::{mmsb_instance, topic_matrix};
use momentmix::linalg::{dot, norm2, thin_qr, Mat};
use momentmix::moments::{
    compute_m2_community, compute_m2_topic, compute_symmetrizers, SymmetrizerOpts,
};
use momentmix::graph_io::partition_nodes;
use momentmix::pipeline::{fit_community, fit_topic, FitConfig};
use momentmix::stgd::{loss_at_sample, run_stgd, stgd_step, StgdConfig};
use momentmix::synthgen::{generate_lda, sample_memberships, DirichletSpec, GroundTruth, TruthKind};
use momentmix::validation::{
    average_error, bridgeness, build_match_graph, pvalue_matrix, recovery_ratio,
    six_edge_fixture, special::t_upper_tail,
};
use momentmix::whitening::{
    randomized_whiten, whitening_residual, WhitenMethod, WhitenOptions, WhitenedViews,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Criterion {
    id: usize,
    name: &'static str,
}

impl Criterion {
    fn new(id: usize, name: &'static str) -> Self {
        Criterion { id, name }
    }

    fn finish(self, pass: bool, detail: String) {
        println!(
            "criterion {}: {} — {} ({})",
            self.id,
            if pass { "PASS" } else { "FAIL" },
            self.name,
            detail
        );
        assert!(pass, "criterion {} failed: {}", self.id, detail);
    }
}

/// Criterion 1: synthetic recovery at n = 5000, k = 10, ten seeds each for
/// the block model (α₀ = 0) and the mixed model (α₀ = 1): average error
/// ≤ 0.15 and recovery ≥ 0.9 in at least 8/10 seeds, every fit under 60 s.
#[test]
fn criterion_1_synthetic_recovery() {
    let c = Criterion::new(1, "synthetic recovery");
    let n = 5000;
    let k = 10;
    let mut detail = String::new();
    let mut pass = true;
    for alpha0 in [0.0, 1.0] {
        let mut err_ok = 0;
        let mut rec_ok = 0;
        let mut worst_secs = 0.0f64;
        for seed in 0..10u64 {
            let (graph, pi) = mmsb_instance(n, k, 0.3, 0.05, alpha0, 5000 + seed);
            let cfg = FitConfig::new(k, alpha0, 7000 + seed);
            let t0 = std::time::Instant::now();
            let fit = fit_community(&graph, &cfg).expect("fit");
            let secs = t0.elapsed().as_secs_f64();
            worst_secs = worst_secs.max(secs);
            let pv = pvalue_matrix(&pi, &fit.estimate.pi_hat).unwrap();
            let matches = build_match_graph(&pv, 0.01, None);
            let rec = recovery_ratio(&matches, k);
            let err = average_error(&matches, &pi, &fit.estimate.pi_hat);
            if err <= 0.15 {
                err_ok += 1;
            }
            if rec >= 0.9 {
                rec_ok += 1;
            }
        }
        pass &= err_ok >= 8 && rec_ok >= 8 && worst_secs < 60.0;
        detail.push_str(&format!(
            "α₀={alpha0}: {err_ok}/10 err≤0.15, {rec_ok}/10 rec≥0.9, slowest fit {worst_secs:.1}s; "
        ));
    }
    c.finish(pass, detail);
}

/// Criterion 2: whitening identity ‖WᵀM₂W − I‖_F ≤ 1e-6·√k on every
/// synthetic fit with n ≤ 2000 (both passes, several sizes and α₀).
#[test]
fn criterion_2_whitening_identity() {
    let c = Criterion::new(2, "whitening identity");
    let k = 4;
    let bound = 1e-6 * (k as f64).sqrt();
    let mut worst = 0.0f64;
    for (n, alpha0) in [(600, 0.0), (1200, 1.0), (2000, 0.0)] {
        let (graph, _) = mmsb_instance(n, k, 0.4, 0.06, alpha0, 900 + n as u64);
        let cfg = FitConfig::new(k, alpha0, 17);
        let fit = fit_community(&graph, &cfg).expect("fit");
        for pass in [&fit.pass1, &fit.pass2] {
            worst = worst.max(whitening_residual(&pass.ctx, &pass.m2));
        }
    }
    c.finish(
        worst <= bound,
        format!("worst residual {worst:.3e} vs bound {bound:.3e}"),
    );
}

/// Criterion 3: on 100 random instances with k ≤ 5 the analytic update
/// direction matches central finite differences of the sampled loss within
/// 1e-5 relative per coordinate. The update's 3θ penalty descends the loss
/// with the orthogonality term at weight θ/2, so the differenced loss uses
/// θ/2 (the full-θ loss would carry a 6θ penalty gradient).
#[test]
fn criterion_3_gradient_oracle() {
    let c = Criterion::new(3, "gradient finite-difference oracle");
    let mut rng = ChaCha8Rng::seed_from_u64(333);
    let mut worst_rel = 0.0f64;
    for trial in 0..100 {
        let k = 1 + (trial % 5);
        let phi = Mat::from_fn(k, k, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            0.7 * v
        });
        let y: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let sample = (&y[0][..], &y[1][..], &y[2][..]);
        let mu = vec![0.0; k];
        let theta = 1.0;
        let mut cfg = StgdConfig::for_problem(k, 1, 0.0, 1);
        cfg.theta = theta;
        cfg.learn_rate0 = 1.0;
        cfg.decay_tau = f64::INFINITY;
        let next = stgd_step(&phi, sample, (&mu, &mu, &mu), &cfg, 0).unwrap();
        let h = 1e-5;
        for r in 0..k {
            for col in 0..k {
                let mut plus = phi.clone();
                plus.set(r, col, phi.get(r, col) + h);
                let mut minus = phi.clone();
                minus.set(r, col, phi.get(r, col) - h);
                let fd = (loss_at_sample(&plus, sample, theta / 2.0)
                    - loss_at_sample(&minus, sample, theta / 2.0))
                    / (2.0 * h);
                let analytic = next.get(r, col) - phi.get(r, col);
                let rel = (analytic + fd).abs() / fd.abs().max(1.0);
                worst_rel = worst_rel.max(rel);
            }
        }
    }
    c.finish(
        worst_rel <= 1e-5,
        format!("worst per-coordinate relative error {worst_rel:.3e}"),
    );
}

/// Criterion 4: the averaged implicit per-sample update equals the gradient
/// computed from the explicitly materialized k×k×k tensor within 1e-8
/// (k ≤ 5, n_X ≤ 200).
#[test]
fn criterion_4_implicit_explicit_equivalence() {
    let c = Criterion::new(4, "implicit/explicit tensor equivalence");
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let k = 5;
    let n = 200;
    let samples: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| {
            (0..3)
                .map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect()
        })
        .collect();
    let phi = Mat::from_fn(k, k, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        0.5 * v
    });
    let mu = vec![0.0; k];
    let mut cfg = StgdConfig::for_problem(k, n, 0.0, 1);
    cfg.learn_rate0 = 1.0;
    cfg.decay_tau = f64::INFINITY;
    // average of the implicit per-sample update directions
    let mut avg = Mat::zeros(k, k);
    for s in &samples {
        let next = stgd_step(&phi, (&s[0], &s[1], &s[2]), (&mu, &mu, &mu), &cfg, 0).unwrap();
        let mut dir = next;
        dir.add_scaled(-1.0, &phi);
        avg.add_scaled(1.0 / n as f64, &dir);
    }
    // the same direction from the materialized average tensor
    let mut t_bar = vec![0.0; k * k * k];
    for s in &samples {
        for a in 0..k {
            for b in 0..k {
                for d in 0..k {
                    t_bar[(a * k + b) * k + d] += s[0][a] * s[1][b] * s[2][d] / n as f64;
                }
            }
        }
    }
    let gram = phi.tr_mul(&phi);
    let mut explicit = Mat::zeros(k, k);
    for i in 0..k {
        let col = phi.col(i);
        for a in 0..k {
            let mut g = 0.0;
            for b in 0..k {
                for d in 0..k {
                    g += t_bar[(a * k + b) * k + d] * col[b] * col[d];
                    g += t_bar[(b * k + a) * k + d] * col[b] * col[d];
                    g += t_bar[(b * k + d) * k + a] * col[b] * col[d];
                }
            }
            // subtract the stacked orthogonality term
            let mut pen = 0.0;
            for j in 0..k {
                pen += gram.get(j, i) * gram.get(j, i) * phi.get(a, j);
            }
            explicit.set(a, i, g - 3.0 * pen);
        }
    }
    let diff = avg.max_abs_diff(&explicit);
    c.finish(diff <= 1e-8, format!("max |implicit − explicit| = {diff:.3e}"));
}

/// Criterion 5: whitened views built from a known orthogonal rank-3 tensor
/// with weights (0.5, 0.3, 0.2): recovered components match a signed
/// permutation of the truth with per-column cosine ≥ 0.99 and eigenvalues
/// within 5%. Also checks (warn only) the smoothed loss trend.
#[test]
fn criterion_5_known_spectrum() {
    let c = Criterion::new(5, "known-spectrum decomposition");
    let weights = [0.5, 0.3, 0.2];
    let k = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let gauss = Mat::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng));
    let (q, _) = thin_qr(&gauss);
    let samples: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let s = (k as f64 * weights[i]).cbrt();
            q.col(i).iter().map(|&v| s * v).collect()
        })
        .collect();
    let y = Mat::from_fn(k, k, |i, j| samples[i][j]);
    let mean: Vec<f64> = (0..k)
        .map(|j| (0..k).map(|i| y.get(i, j)).sum::<f64>() / k as f64)
        .collect();
    let views = WhitenedViews {
        y_a: y.clone(),
        y_b: y.clone(),
        y_c: y,
        mu_a: mean.clone(),
        mu_b: mean.clone(),
        mu_c: mean,
    };
    let trace = tempfile::NamedTempFile::new().unwrap();
    let mut cfg = StgdConfig::for_problem(k, k, 0.0, 5);
    cfg.learn_rate0 = 0.05;
    cfg.decay_tau = 2000.0;
    cfg.max_epochs = 4000;
    cfg.tol = 1e-10;
    cfg.trace_path = Some(trace.path().to_path_buf());
    let est = run_stgd(&views, &cfg).unwrap();
    let mut used = vec![false; k];
    let mut worst_cos = 1.0f64;
    let mut worst_lam = 0.0f64;
    for i in 0..k {
        let col = est.phi.col(i);
        let norm = norm2(&col);
        let mut best = (0usize, 0.0f64);
        for j in 0..k {
            if used[j] {
                continue;
            }
            let cos = dot(&col, &q.col(j)).abs() / norm;
            if cos > best.1 {
                best = (j, cos);
            }
        }
        used[best.0] = true;
        worst_cos = worst_cos.min(best.1);
        worst_lam = worst_lam.max((est.lambda[i] - weights[best.0]).abs() / weights[best.0]);
    }
    // smoothed loss trend: warn, not fail (stochastic method)
    let text = std::fs::read_to_string(trace.path()).unwrap();
    let losses: Vec<f64> = text
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(1)?.parse().ok())
        .collect();
    let mut smooth = losses.first().copied().unwrap_or(0.0);
    let mut prev = smooth;
    let mut violations = 0;
    for &l in &losses {
        smooth = 0.9 * smooth + 0.1 * l;
        if smooth > prev + 1e-3 {
            violations += 1;
        }
        prev = smooth;
    }
    if violations > 0 {
        eprintln!("warning: smoothed loss trend violated {violations} times (noise-level drift)");
    }
    c.finish(
        worst_cos >= 0.99 && worst_lam <= 0.05,
        format!("worst cosine {worst_cos:.4}, worst λ rel error {worst_lam:.4}"),
    );
}

/// Criterion 6: tall-thin SVD, tall-thin QR, and the exact path all satisfy
/// the whitening identity at n ≤ 2000 and agree on the top-k singular
/// values within 1e-6 relative.
#[test]
fn criterion_6_randomized_vs_exact_whitening() {
    let c = Criterion::new(6, "randomized vs exact whitening");
    let k = 4;
    let (graph, _) = mmsb_instance(1200, k, 0.4, 0.06, 0.0, 61);
    let part = partition_nodes(&graph, [0.25; 4], 62, k).unwrap();
    let symm = compute_symmetrizers(&graph, &part, k, SymmetrizerOpts::for_k(k, 63)).unwrap();
    let m2 = compute_m2_community(&graph, &part, &symm, 0.0).unwrap();
    let exact = randomized_whiten(&m2, k, WhitenOptions::new(WhitenMethod::ExactSmall, 64)).unwrap();
    let bound = 1e-6 * (k as f64).sqrt();
    let mut pass = whitening_residual(&exact, &m2) <= bound;
    let mut worst_rel = 0.0f64;
    for method in [WhitenMethod::TallThinSvd, WhitenMethod::TallThinQr] {
        let ctx = randomized_whiten(&m2, k, WhitenOptions::new(method, 65)).unwrap();
        pass &= whitening_residual(&ctx, &m2) <= bound;
        for t in 0..k {
            let rel = (ctx.singular_values[t] - exact.singular_values[t]).abs()
                / exact.singular_values[t];
            worst_rel = worst_rel.max(rel);
        }
    }
    pass &= worst_rel <= 1e-6;
    c.finish(
        pass,
        format!("identity bound {bound:.2e}; worst σ disagreement {worst_rel:.3e}"),
    );
}

/// Independent numerical-integration oracle for the t upper tail: adaptive
/// Simpson over the density, with the normalization from exact
/// integer/half-integer Γ via log-factorial sums (no shared code with the
/// incomplete-beta path).
fn t_tail_oracle(t: f64, df: usize) -> f64 {
    fn ln_gamma_half_int(two_x: usize) -> f64 {
        // Γ(m) for two_x = 2m, Γ(m + 1/2) for two_x = 2m + 1
        if two_x % 2 == 0 {
            let m = two_x / 2;
            (1..m).map(|i| (i as f64).ln()).sum()
        } else {
            let m = two_x / 2;
            0.5 * std::f64::consts::PI.ln() + (1..=m).map(|i| ((2 * i - 1) as f64).ln()).sum::<f64>()
                - m as f64 * (2.0f64).ln()
        }
    }
    let nu = df as f64;
    let ln_c = ln_gamma_half_int(df + 1) - ln_gamma_half_int(df)
        - 0.5 * (nu * std::f64::consts::PI).ln();
    let pdf = move |x: f64| (ln_c - 0.5 * (nu + 1.0) * (1.0 + x * x / nu).ln()).exp();
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64, fm: f64, eps: f64, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            left + right + (left + right - whole) / 15.0
        } else {
            simpson(f, a, m, fa, fm, flm, eps / 2.0, depth - 1)
                + simpson(f, m, b, fm, fb, frm, eps / 2.0, depth - 1)
        }
    }
    let integrate = |a: f64, b: f64| -> f64 {
        let fa = pdf(a);
        let fb = pdf(b);
        let fm = pdf(0.5 * (a + b));
        simpson(&pdf, a, b, fa, fb, fm, 1e-13, 48)
    };
    if t >= 0.0 {
        0.5 - integrate(0.0, t)
    } else {
        0.5 + integrate(t, 0.0)
    }
}

/// Criterion 7: p-values match the integration oracle to 1e-9 at 50 (ρ, n)
/// points; the six-edge fixture yields recovery exactly 0.75; bridgeness
/// trivial cases are exact to 1e-12.
#[test]
fn criterion_7_statistical_oracles() {
    let c = Criterion::new(7, "statistical suite oracles");
    let mut worst = 0.0f64;
    let rhos = [-0.9, -0.6, -0.3, -0.1, 0.0, 0.1, 0.3, 0.5, 0.7, 0.9];
    let ns = [10usize, 27, 50, 200, 1000];
    let mut points = 0;
    for &n in &ns {
        for &rho in &rhos {
            let rho: f64 = rho;
            let t = rho * ((n - 2) as f64).sqrt() / (1.0 - rho * rho).sqrt();
            let got = t_upper_tail(t, (n - 2) as f64);
            let want = t_tail_oracle(t, n - 2);
            worst = worst.max((got - want).abs());
            points += 1;
        }
    }
    assert_eq!(points, 50);
    let (pi_true, pi_hat) = six_edge_fixture();
    let pv = pvalue_matrix(&pi_true, &pi_hat).unwrap();
    let matches = build_match_graph(&pv, 0.01, None);
    let fixture_ok = matches.edges.len() == 6 && recovery_ratio(&matches, 4) == 0.75;
    // bridgeness trivial cases
    let kh = 5;
    let mut pi = Mat::zeros(kh, 2);
    for i in 0..kh {
        pi.set(i, 0, 1.0 / kh as f64);
    }
    pi.set(2, 1, 1.0);
    let (b, _) = bridgeness(&pi, &[1.0, 1.0]).unwrap();
    let bridge_ok = (b[0] - 1.0).abs() <= 1e-12 && b[1].abs() <= 1e-12;
    c.finish(
        worst <= 1e-9 && fixture_ok && bridge_ok,
        format!(
            "worst |p − oracle| = {worst:.2e}; fixture edges {}, recovery {}; bridgeness extremes ({:.1e}, {:.1e})",
            matches.edges.len(),
            recovery_ratio(&matches, 4),
            (b[0] - 1.0).abs(),
            b[1].abs()
        ),
    );
}

/// Criterion 9: empirical M1/M2 match the factorized moment forms within 3
/// standard errors across 20 seeds. Community moments are compared against
/// F_A·α̂ and (at α₀ = 0, where the centered form is exactly
/// Σᵢ α̂ᵢ (F_A)ᵢ⊗(F_A)ᵢ) against probe projections of F_A diag(α̂) F_Aᵀ;
/// topic moments of raw length-ℓ counts carry the document-length factors
/// E[M1] = ℓ·μα̂ and E[M2] = ℓ(ℓ−1)·μ diag(α̂) μᵀ − α₀ℓ·(μα̂)(μα̂)ᵀ.
#[test]
fn criterion_9_moment_consistency() {
    let c = Criterion::new(9, "moment consistency");
    let seeds = 20;
    let k = 3;
    let mut pass = true;
    let mut detail = String::new();

    // Community path.
    for alpha0 in [0.0, 1.0] {
        let mut m1_stats = Vec::new();
        let mut m2_stats = Vec::new();
        for seed in 0..seeds {
            let n = 800;
            let spec = if alpha0 == 0.0 {
                DirichletSpec::block_model(k).unwrap()
            } else {
                DirichletSpec::symmetric(k, alpha0).unwrap()
            };
            let pi = sample_memberships(&spec, n, 90_000 + seed).unwrap();
            let p = Mat::from_fn(k, k, |i, j| if i == j { 0.5 } else { 0.1 });
            let truth = GroundTruth {
                pi: pi.clone(),
                kind: TruthKind::Community { p: p.clone() },
            };
            let graph =
                momentmix::synthgen::generate_mmsb(&truth, momentmix::synthgen::EdgeModel::Bernoulli, 91_000 + seed)
                    .unwrap();
            let part = partition_nodes(&graph, [0.25; 4], 92_000 + seed, k).unwrap();
            let symm = compute_symmetrizers(&graph, &part, k, SymmetrizerOpts::for_k(k, 93_000 + seed)).unwrap();
            let ms = compute_m2_community(&graph, &part, &symm, alpha0).unwrap();
            // F_A = Π_Aᵀ Pᵀ for the sampled A block
            let n_a = part.a.len();
            let pi_a = Mat::from_fn(k, n_a, |i, j| pi.get(i, part.a[j]));
            let f_a = pi_a.transpose().mul(&p.transpose()); // n_A × k
            let alpha_hat = vec![1.0 / k as f64; k];
            let m1_pred = f_a.mul_vec(&alpha_hat);
            // statistic: mean entrywise residual of M1
            let m1_res: f64 = ms
                .m1
                .iter()
                .zip(&m1_pred)
                .map(|(a, b)| a - b)
                .sum::<f64>()
                / n_a as f64;
            m1_stats.push(m1_res);
            if alpha0 == 0.0 {
                // probe projection of M2 − F_A diag(α̂) F_Aᵀ
                let mut rng = ChaCha8Rng::seed_from_u64(94_000);
                let u: Vec<f64> = (0..n_a).map(|_| rng.random::<f64>() - 0.5).collect();
                let v: Vec<f64> = (0..n_a).map(|_| rng.random::<f64>() - 0.5).collect();
                let um = Mat::from_rows(n_a, 1, &u);
                let m2u = ms.apply_dense(&um).col(0);
                let emp = dot(&m2u, &v);
                let fu = f_a.tr_mul_vec(&u);
                let fv = f_a.tr_mul_vec(&v);
                let pred: f64 = (0..k).map(|i| alpha_hat[i] * fu[i] * fv[i]).sum();
                m2_stats.push(emp - pred);
            }
        }
        let check = |stats: &[f64], what: &str, detail: &mut String, pass: &mut bool| {
            if stats.is_empty() {
                return;
            }
            let m = stats.iter().sum::<f64>() / stats.len() as f64;
            let var = stats.iter().map(|s| (s - m) * (s - m)).sum::<f64>()
                / (stats.len() as f64 - 1.0);
            let se = (var / stats.len() as f64).sqrt();
            let ok = m.abs() <= 3.0 * se.max(1e-12);
            *pass &= ok;
            detail.push_str(&format!("{what}: |mean| {:.2e} vs 3·SE {:.2e}; ", m.abs(), 3.0 * se));
        };
        check(&m1_stats, &format!("community M1 (α₀={alpha0})"), &mut detail, &mut pass);
        check(&m2_stats, "community M2 (α₀=0)", &mut detail, &mut pass);
    }

    // Topic path with the document-length factors.
    {
        let d = 8;
        let mu = topic_matrix(d, k);
        let alpha0 = 1.0;
        let spec = DirichletSpec::symmetric(k, alpha0).unwrap();
        let len = 10usize;
        let alpha_hat = vec![1.0 / k as f64; k];
        let m = mu.mul_vec(&alpha_hat); // μ α̂
        let mut m1_stats = Vec::new();
        let mut m2_stats = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(95_000);
        let u: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        for seed in 0..seeds {
            let truth = GroundTruth {
                pi: Mat::zeros(k, 0),
                kind: TruthKind::Topic { mu: mu.clone() },
            };
            let corpus = generate_lda(&truth, &spec, 4000, len, 96_000 + seed).unwrap();
            let ms = compute_m2_topic(&corpus, alpha0).unwrap();
            // Probe-weighted residual: the plain entry sum is identically
            // zero (documents have exactly ℓ words), so it can't detect
            // anything.
            let m1_pred: Vec<f64> = m.iter().map(|x| x * len as f64).collect();
            let m1_res: f64 = ms
                .m1
                .iter()
                .zip(&m1_pred)
                .zip(&u)
                .map(|((a, b), w)| w * (a - b))
                .sum::<f64>();
            m1_stats.push(m1_res);
            let um = Mat::from_rows(d, 1, &u);
            let emp = dot(&ms.apply_dense(&um).col(0), &v);
            let mu_u = mu.tr_mul_vec(&u);
            let mu_v = mu.tr_mul_vec(&v);
            let lf = (len * (len - 1)) as f64;
            let pred: f64 = (0..k).map(|i| lf * alpha_hat[i] * mu_u[i] * mu_v[i]).sum::<f64>()
                - alpha0 * len as f64 * dot(&m, &u) * dot(&m, &v);
            m2_stats.push(emp - pred);
        }
        let check = |stats: &[f64], what: &str, detail: &mut String, pass: &mut bool| {
            let mean = stats.iter().sum::<f64>() / stats.len() as f64;
            let var = stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
                / (stats.len() as f64 - 1.0);
            let se = (var / stats.len() as f64).sqrt();
            let ok = mean.abs() <= 3.0 * se.max(1e-12);
            *pass &= ok;
            detail.push_str(&format!("{what}: |mean| {:.2e} vs 3·SE {:.2e}; ", mean.abs(), 3.0 * se));
        };
        check(&m1_stats, "topic M1", &mut detail, &mut pass);
        check(&m2_stats, "topic M2", &mut detail, &mut pass);
    }
    c.finish(pass, detail);
}

/// Companion to criterion 1: the topic path recovers a known topic-word
/// matrix with per-column ℓ₁ error ≤ 0.1 after matching.
#[test]
fn topic_recovery_end_to_end() {
    let d = 20;
    let k = 3;
    let mu = topic_matrix(d, k);
    let spec = DirichletSpec::symmetric(k, 1.0).unwrap();
    let truth = GroundTruth {
        pi: Mat::zeros(k, 0),
        kind: TruthKind::Topic { mu: mu.clone() },
    };
    let corpus = generate_lda(&truth, &spec, 100_000, 200, 11).unwrap();
    let mut cfg = FitConfig::new(k, 1.0, 3);
    cfg.max_epochs = 60;
    let fit = fit_topic(&corpus, &cfg).unwrap();
    let mu_hat = &fit.estimate.mu_hat;
    let mut used = vec![false; k];
    let mut worst = 0.0f64;
    for j in 0..k {
        let mut best = (usize::MAX, -2.0f64);
        for t in 0..k {
            if used[t] {
                continue;
            }
            let mut dot_v = 0.0;
            for i in 0..d {
                dot_v += mu.get(i, j) * mu_hat.get(i, t);
            }
            if dot_v > best.1 {
                best = (t, dot_v);
            }
        }
        used[best.0] = true;
        let mut l1 = 0.0;
        for i in 0..d {
            l1 += (mu.get(i, j) - mu_hat.get(i, best.0)).abs();
        }
        worst = worst.max(l1);
    }
    println!("topic recovery: worst column ℓ₁ error {worst:.4}");
    assert!(worst <= 0.1, "worst column ℓ₁ error {worst}");
    // sanity on the whitening identity for the topic path too
    assert!(whitening_residual(&fit.ctx, &fit.m2) <= 1e-6 * (k as f64).sqrt());
    // the recovered Dirichlet weights should be near-uniform
    for a in &fit.estimate.alpha_hat {
        assert!((a - 1.0 / k as f64).abs() < 0.1, "alpha_hat {a}");
    }
}
