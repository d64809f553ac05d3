//! Dense linear algebra used by the fitting and decomposition routines.
//!
//! Everything is implemented directly on `f64` buffers: Householder QR for
//! least squares, a one-sided Jacobi SVD for spectral decompositions, and a
//! small pivoted Gaussian solver. Desk-scale problems only; the point is
//! deterministic, platform-independent results rather than peak throughput.

use ndarray::{Array1, Array2};

/// Thin SVD `A = U diag(s) V^T` with `U: m x k`, `s: k`, `V: k x k` where
/// `k = A.ncols()`. Singular values are sorted non-increasing.
pub struct Svd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
}

/// One-sided Jacobi SVD. Deterministic: fixed cyclic sweep order, no
/// randomization. Converges quadratically; 60 sweeps is far beyond what the
/// desk-scale inputs here ever need.
pub fn jacobi_svd(a: &Array2<f64>) -> Svd {
    let m = a.nrows();
    let k = a.ncols();
    // column-major working copy
    let mut w: Vec<f64> = Vec::with_capacity(m * k);
    for j in 0..k {
        for i in 0..m {
            w.push(a[[i, j]]);
        }
    }
    let mut v = vec![0.0f64; k * k];
    for j in 0..k {
        v[j * k + j] = 1.0;
    }

    let eps = 1e-14;
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..k.saturating_sub(1) {
            for j in (i + 1)..k {
                let (ci, cj) = col_pair(&mut w, m, i, j);
                let mut aii = 0.0;
                let mut ajj = 0.0;
                let mut aij = 0.0;
                for t in 0..m {
                    aii += ci[t] * ci[t];
                    ajj += cj[t] * cj[t];
                    aij += ci[t] * cj[t];
                }
                if aii == 0.0 || ajj == 0.0 {
                    continue;
                }
                if aij.abs() <= eps * (aii * ajj).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (ajj - aii) / (2.0 * aij);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..m {
                    let x = ci[r];
                    let y = cj[r];
                    ci[r] = cs * x - sn * y;
                    cj[r] = sn * x + cs * y;
                }
                let (vi, vj) = col_pair(&mut v, k, i, j);
                for r in 0..k {
                    let x = vi[r];
                    let y = vj[r];
                    vi[r] = cs * x - sn * y;
                    vj[r] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..k).collect();
    let norms: Vec<f64> = (0..k)
        .map(|j| {
            let c = &w[j * m..(j + 1) * m];
            c.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));

    let mut u = Array2::zeros((m, k));
    let mut s = Array1::zeros(k);
    let mut vv = Array2::zeros((k, k));
    for (out_j, &j) in order.iter().enumerate() {
        let norm = norms[j];
        s[out_j] = norm;
        if norm > 0.0 {
            for i in 0..m {
                u[[i, out_j]] = w[j * m + i] / norm;
            }
        }
        for i in 0..k {
            vv[[i, out_j]] = v[j * k + i];
        }
    }
    Svd { u, s, v: vv }
}

/// Two distinct columns of a column-major buffer, mutably.
fn col_pair(data: &mut [f64], rows: usize, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(i < j);
    let (lo, hi) = data.split_at_mut(j * rows);
    (&mut lo[i * rows..i * rows + rows], &mut hi[..rows])
}

/// Singular values of `a`, non-increasing.
pub fn singular_values(a: &Array2<f64>) -> Vec<f64> {
    jacobi_svd(a).s.to_vec()
}

/// Householder QR factorization of an `n x p` matrix with `n >= p`,
/// reusable across many right-hand sides.
pub struct QrFactor {
    // Packed Householder vectors in the lower trapezoid, R in the upper one.
    qr: Array2<f64>,
    tau: Vec<f64>,
    n: usize,
    p: usize,
}

impl QrFactor {
    pub fn new(x: &Array2<f64>) -> QrFactor {
        let n = x.nrows();
        let p = x.ncols();
        assert!(n >= p, "QR requires n >= p");
        let mut qr = x.clone();
        let mut tau = vec![0.0f64; p];
        for j in 0..p {
            // Householder vector for column j below the diagonal.
            let mut norm2 = 0.0;
            for i in j..n {
                norm2 += qr[[i, j]] * qr[[i, j]];
            }
            let norm = norm2.sqrt();
            if norm == 0.0 {
                tau[j] = 0.0;
                continue;
            }
            let alpha = if qr[[j, j]] >= 0.0 { -norm } else { norm };
            let v0 = qr[[j, j]] - alpha;
            // v = (v0, qr[j+1.., j]); normalize so v[0] = 1
            for i in (j + 1)..n {
                qr[[i, j]] /= v0;
            }
            tau[j] = -v0 / alpha;
            qr[[j, j]] = alpha;
            // Apply reflector to the trailing columns.
            for c in (j + 1)..p {
                let mut dot = qr[[j, c]];
                for i in (j + 1)..n {
                    dot += qr[[i, j]] * qr[[i, c]];
                }
                dot *= tau[j];
                qr[[j, c]] -= dot;
                for i in (j + 1)..n {
                    let h = qr[[i, j]];
                    qr[[i, c]] -= dot * h;
                }
            }
        }
        QrFactor { qr, tau, n, p }
    }

    /// Absolute values of R's diagonal (cheap conditioning probe).
    pub fn r_diag_abs(&self) -> Vec<f64> {
        (0..self.p).map(|j| self.qr[[j, j]].abs()).collect()
    }

    /// Least-squares solve for every column of `y` at once: returns the
    /// `p x ncols(y)` coefficient matrix.
    pub fn solve(&self, y: &Array2<f64>) -> Array2<f64> {
        assert_eq!(y.nrows(), self.n, "row count mismatch in QR solve");
        let ncols = y.ncols();
        let mut work = y.clone();
        // Apply Q^T column by column of Y.
        for j in 0..self.p {
            if self.tau[j] == 0.0 {
                continue;
            }
            for c in 0..ncols {
                let mut dot = work[[j, c]];
                for i in (j + 1)..self.n {
                    dot += self.qr[[i, j]] * work[[i, c]];
                }
                dot *= self.tau[j];
                work[[j, c]] -= dot;
                for i in (j + 1)..self.n {
                    let h = self.qr[[i, j]];
                    work[[i, c]] -= dot * h;
                }
            }
        }
        // Back-substitute R beta = (Q^T y)[0..p].
        let mut beta = Array2::zeros((self.p, ncols));
        for c in 0..ncols {
            for jr in (0..self.p).rev() {
                let mut acc = work[[jr, c]];
                for k in (jr + 1)..self.p {
                    acc -= self.qr[[jr, k]] * beta[[k, c]];
                }
                beta[[jr, c]] = acc / self.qr[[jr, jr]];
            }
        }
        beta
    }
}

/// Solve a small square system `a z = b` by Gaussian elimination with
/// partial pivoting. Returns `None` when the pivot underflows.
pub fn solve_square(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[[r, col]].abs() > m[[piv, col]].abs() {
                piv = r;
            }
        }
        if m[[piv, col]].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap([col, c], [piv, c]);
            }
            rhs.swap(col, piv);
        }
        for r in (col + 1)..n {
            let f = m[[r, col]] / m[[col, col]];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[[r, c]] -= f * m[[col, c]];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut z = Array1::zeros(n);
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in (r + 1)..n {
            acc -= m[[r, c]] * z[c];
        }
        z[r] = acc / m[[r, r]];
    }
    Some(z)
}

/// Column means of a matrix.
pub fn column_means(a: &Array2<f64>) -> Array1<f64> {
    let n = a.nrows() as f64;
    a.sum_axis(ndarray::Axis(0)) / n
}

/// Largest absolute entry.
pub fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use ndarray::arr2;

    fn random_matrix(rng: &mut Rng, n: usize, p: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, p), |_| rng.gaussian())
    }

    #[test]
    fn qr_solves_exact_system() {
        let x = arr2(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let y = arr2(&[[1.0], [2.0], [3.0]]);
        let beta = QrFactor::new(&x).solve(&y);
        assert!((beta[[0, 0]] - 1.0).abs() < 1e-12);
        assert!((beta[[1, 0]] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn qr_residual_is_orthogonal_to_columns() {
        let mut rng = Rng::seed_from_u64(11);
        let x = random_matrix(&mut rng, 30, 5);
        let y = random_matrix(&mut rng, 30, 7);
        let beta = QrFactor::new(&x).solve(&y);
        let resid = &y - &x.dot(&beta);
        let xtr = x.t().dot(&resid);
        assert!(max_abs(&xtr) < 1e-10, "X^T r = {}", max_abs(&xtr));
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 12, 6);
        let Svd { u, s, v } = jacobi_svd(&a);
        let mut us = u.clone();
        for j in 0..s.len() {
            for i in 0..us.nrows() {
                us[[i, j]] *= s[j];
            }
        }
        let back = us.dot(&v.t());
        let diff = &a - &back;
        assert!(max_abs(&diff) < 1e-12);
        // U and V orthonormal
        let utu = u.t().dot(&u);
        let vtv = v.t().dot(&v);
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((utu[[i, j]] - expect).abs() < 1e-12);
                assert!((vtv[[i, j]] - expect).abs() < 1e-12);
            }
        }
        // Sorted non-increasing
        for j in 1..s.len() {
            assert!(s[j - 1] >= s[j]);
        }
    }

    #[test]
    fn svd_of_rank_one_matrix() {
        let u = [1.0, 2.0, -1.0, 0.5];
        let v = [3.0, -1.0, 2.0];
        let a = Array2::from_shape_fn((4, 3), |(i, j)| u[i] * v[j]);
        let s = singular_values(&a);
        assert!(s[0] > 1.0);
        assert!(s[1] < 1e-12 && s[2] < 1e-12);
    }

    #[test]
    fn solve_square_matches_hand_solution() {
        let a = arr2(&[[2.0, 1.0], [1.0, 3.0]]);
        let b = ndarray::arr1(&[3.0, 5.0]);
        let z = solve_square(&a, &b).unwrap();
        // 2x + y = 3, x + 3y = 5 -> x = 4/5, y = 7/5
        assert!((z[0] - 0.8).abs() < 1e-12);
        assert!((z[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn solve_square_rejects_singular() {
        let a = arr2(&[[1.0, 2.0], [2.0, 4.0]]);
        let b = ndarray::arr1(&[1.0, 2.0]);
        assert!(solve_square(&a, &b).is_none());
    }
}
