//! Householder QR for tall-thin matrices (n × m with m small).

use super::mat::Mat;

/// Thin QR: A (n×m, n ≥ m) = Q (n×m, orthonormal columns) · R (m×m, upper).
pub fn thin_qr(a: &Mat) -> (Mat, Mat) {
    let (n, m) = (a.rows(), a.cols());
    assert!(n >= m, "thin_qr expects a tall matrix");
    let mut work = a.clone();
    // Householder vector j lives in column j strictly below the diagonal,
    // with its head element kept in `v0s[j]` (the diagonal slot holds R).
    let mut betas = vec![0.0; m];
    let mut v0s = vec![0.0; m];
    for j in 0..m {
        let mut norm2 = 0.0;
        for i in j..n {
            norm2 += work.get(i, j) * work.get(i, j);
        }
        let norm = norm2.sqrt();
        if norm == 0.0 {
            continue;
        }
        let a0 = work.get(j, j);
        let alpha = if a0 >= 0.0 { -norm } else { norm };
        let v0 = a0 - alpha;
        let mut vnorm2 = v0 * v0;
        for i in j + 1..n {
            vnorm2 += work.get(i, j) * work.get(i, j);
        }
        if vnorm2 == 0.0 {
            continue;
        }
        betas[j] = 2.0 / vnorm2;
        v0s[j] = v0;
        work.set(j, j, alpha);
        for c in j + 1..m {
            let mut s = v0 * work.get(j, c);
            for i in j + 1..n {
                s += work.get(i, j) * work.get(i, c);
            }
            s *= betas[j];
            work.set(j, c, work.get(j, c) - s * v0);
            for i in j + 1..n {
                work.set(i, c, work.get(i, c) - s * work.get(i, j));
            }
        }
    }
    let mut r = Mat::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            r.set(i, j, work.get(i, j));
        }
    }
    // Accumulate Q = H_0 · H_1 ⋯ H_{m-1} · I[:, :m] by back-application.
    let mut q = Mat::zeros(n, m);
    for i in 0..m {
        q.set(i, i, 1.0);
    }
    for j in (0..m).rev() {
        let beta = betas[j];
        if beta == 0.0 {
            continue;
        }
        let v0 = v0s[j];
        for c in 0..m {
            let mut s = v0 * q.get(j, c);
            for i in j + 1..n {
                s += work.get(i, j) * q.get(i, c);
            }
            s *= beta;
            q.set(j, c, q.get(j, c) - s * v0);
            for i in j + 1..n {
                q.set(i, c, q.get(i, c) - s * work.get(i, j));
            }
        }
    }
    (q, r)
}
