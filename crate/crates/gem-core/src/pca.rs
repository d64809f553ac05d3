//! PCA exploration of ER matrices: scores, loadings, explained variance and
//! correlation loadings.
//!
//! Computed from a singular value decomposition of the centered (optionally
//! standardized) matrix, which stays stable for the wide matrices omics data
//! produces. The sign of each component is fixed by making the largest
//! loading entry positive, so repeated fits are bitwise identical.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, Svd};
use ndarray::{Array1, Array2};

#[derive(Clone, Debug)]
pub struct PcaModel {
    pub center: Array1<f64>,
    pub scale: Option<Array1<f64>>,
    /// Scores, `n x A`.
    pub t: Array2<f64>,
    /// Loadings, `N x A`, orthonormal columns.
    pub p: Array2<f64>,
    /// Singular values of the first A components.
    pub eig: Array1<f64>,
    /// Fraction of X-variance per component.
    pub explvar_x: Array1<f64>,
}

pub fn fit_pca(x: &Array2<f64>, ncomp: usize, scale: bool) -> Result<PcaModel> {
    let (n, nvar) = x.dim();
    if n < 2 || nvar < 1 {
        return Err(Error::Dimension(format!("cannot run PCA on {n} x {nvar}")));
    }
    if let Some(((i, j), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: i,
            column: format!("column {j}"),
        });
    }
    let max_comp = (n - 1).min(nvar);
    if ncomp == 0 || ncomp > max_comp {
        return Err(Error::InvalidArgument(format!(
            "ncomp {ncomp} out of range 1..={max_comp}"
        )));
    }

    let center = crate::linalg::column_means(x);
    let mut xc = x.clone();
    for mut row in xc.rows_mut() {
        row -= &center;
    }
    let scale_vec = if scale {
        let mut sd = Array1::zeros(nvar);
        for j in 0..nvar {
            let col = xc.column(j);
            let var = col.iter().map(|v| v * v).sum::<f64>() / (n as f64 - 1.0);
            let s = var.sqrt();
            if s == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "column {j} is constant; cannot standardize"
                )));
            }
            sd[j] = s;
        }
        for mut row in xc.rows_mut() {
            row /= &sd;
        }
        Some(sd)
    } else {
        None
    };

    // SVD on the thinner orientation.
    let (u, s, v) = if nvar <= n {
        let Svd { u, s, v } = jacobi_svd(&xc);
        (u, s, v)
    } else {
        let Svd { u, s, v } = jacobi_svd(&xc.t().to_owned());
        (v, s, u)
    };

    let total: f64 = s.iter().map(|x| x * x).sum();
    let denom = if total > 0.0 { total } else { 1.0 };

    let mut t = Array2::zeros((n, ncomp));
    let mut p = Array2::zeros((nvar, ncomp));
    let mut eig = Array1::zeros(ncomp);
    let mut explvar = Array1::zeros(ncomp);
    for a in 0..ncomp {
        eig[a] = s[a];
        explvar[a] = s[a] * s[a] / denom;
        for i in 0..n {
            t[[i, a]] = u[[i, a]] * s[a];
        }
        for j in 0..nvar {
            p[[j, a]] = v[[j, a]];
        }
    }
    apply_sign_convention(&mut t, &mut p);

    Ok(PcaModel {
        center,
        scale: scale_vec,
        t,
        p,
        eig,
        explvar_x: explvar,
    })
}

/// Flip each component so the largest-absolute loading entry is positive;
/// ties resolve to the lowest index.
fn apply_sign_convention(t: &mut Array2<f64>, p: &mut Array2<f64>) {
    for a in 0..p.ncols() {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for j in 0..p.nrows() {
            let v = p[[j, a]].abs();
            if v > best_abs {
                best_abs = v;
                best = j;
            }
        }
        if p[[best, a]] < 0.0 {
            for j in 0..p.nrows() {
                p[[j, a]] = -p[[j, a]];
            }
            for i in 0..t.nrows() {
                t[[i, a]] = -t[[i, a]];
            }
        }
    }
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.p.ncols()
    }

    /// Project new rows into the score space: `(Xnew - center)(/scale) P`.
    pub fn project(&self, xnew: &Array2<f64>) -> Result<Array2<f64>> {
        if xnew.ncols() != self.center.len() {
            return Err(Error::Dimension(format!(
                "projection needs {} columns, got {}",
                self.center.len(),
                xnew.ncols()
            )));
        }
        let mut xc = xnew.clone();
        for mut row in xc.rows_mut() {
            row -= &self.center;
            if let Some(sd) = &self.scale {
                row /= sd;
            }
        }
        Ok(xc.dot(&self.p))
    }
}

/// Pearson correlation of every column of `x` with every score column.
/// Constant columns correlate 0 by convention. Entries clamp to [-1, 1].
pub fn correlation_loadings(x: &Array2<f64>, scores: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, nvar) = x.dim();
    if scores.nrows() != n {
        return Err(Error::Dimension(format!(
            "{} rows in X but {} score rows",
            n,
            scores.nrows()
        )));
    }
    let na = scores.ncols();
    let xm = crate::linalg::column_means(x);
    let tm = crate::linalg::column_means(scores);
    let mut out = Array2::zeros((nvar, na));
    for a in 0..na {
        let tc: Vec<f64> = scores.column(a).iter().map(|&v| v - tm[a]).collect();
        let tss: f64 = tc.iter().map(|v| v * v).sum();
        if tss == 0.0 {
            continue;
        }
        for j in 0..nvar {
            let mut dot = 0.0;
            let mut xss = 0.0;
            for i in 0..n {
                let xv = x[[i, j]] - xm[j];
                dot += xv * tc[i];
                xss += xv * xv;
            }
            if xss == 0.0 {
                continue;
            }
            out[[j, a]] = (dot / (xss * tss).sqrt()).clamp(-1.0, 1.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::rng::Rng;

    fn random(rng: &mut Rng, n: usize, p: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, p), |_| rng.gaussian())
    }

    #[test]
    fn rank_one_matrix_explains_everything_in_one_component() {
        let u = [1.0, -0.5, 2.0, 0.3, -1.2, 0.8];
        let v = [2.0, 1.0, -1.0, 0.5];
        let x = Array2::from_shape_fn((6, 4), |(i, j)| u[i] * v[j]);
        let model = fit_pca(&x, 1, false).unwrap();
        assert!((model.explvar_x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_of_training_data_returns_scores() {
        let mut rng = Rng::seed_from_u64(21);
        let x = random(&mut rng, 8, 5);
        let model = fit_pca(&x, 3, false).unwrap();
        let proj = model.project(&x).unwrap();
        let diff = &proj - &model.t;
        assert!(max_abs(&diff) < 1e-10);
        // projecting the center row gives zero scores
        let center = model
            .center
            .clone()
            .into_shape_with_order((1, 5))
            .unwrap();
        let z = model.project(&center).unwrap();
        assert!(max_abs(&z) < 1e-12);
    }

    #[test]
    fn loadings_are_orthonormal_and_variance_sums_to_one() {
        let mut rng = Rng::seed_from_u64(4);
        let x = random(&mut rng, 10, 6);
        let a = 6;
        let model = fit_pca(&x, a, false).unwrap();
        let ptp = model.p.t().dot(&model.p);
        for i in 0..a {
            for j in 0..a {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ptp[[i, j]] - expect).abs() < 1e-10);
            }
        }
        let sum: f64 = model.explvar_x.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
        // scores orthogonal with non-increasing variance
        let ttt = model.t.t().dot(&model.t);
        for i in 0..a {
            for j in 0..a {
                if i != j {
                    assert!(ttt[[i, j]].abs() < 1e-8 * ttt[[0, 0]]);
                }
            }
        }
        for k in 1..a {
            assert!(ttt[[k - 1, k - 1]] >= ttt[[k, k]] - 1e-12);
        }
    }

    #[test]
    fn wide_matrix_reconstruction_converges() {
        let mut rng = Rng::seed_from_u64(9);
        let x = random(&mut rng, 6, 20);
        let full = 5; // min(n-1, N)
        let mut prev = f64::INFINITY;
        for a in 1..=full {
            let model = fit_pca(&x, a, false).unwrap();
            let approx = model.t.dot(&model.p.t());
            let mut xc = x.clone();
            for mut row in xc.rows_mut() {
                row -= &model.center;
            }
            let diff = &xc - &approx;
            let err = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(err <= prev + 1e-12);
            prev = err;
            if a == full {
                let scale = xc.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(err <= 1e-8 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn refitting_is_bitwise_identical() {
        let mut rng = Rng::seed_from_u64(33);
        let x = random(&mut rng, 9, 7);
        let m1 = fit_pca(&x, 4, false).unwrap();
        let m2 = fit_pca(&x, 4, false).unwrap();
        assert_eq!(m1.t, m2.t);
        assert_eq!(m1.p, m2.p);
    }

    #[test]
    fn positive_rescaling_preserves_variance_fractions() {
        let mut rng = Rng::seed_from_u64(12);
        let x = random(&mut rng, 8, 4);
        let m1 = fit_pca(&x, 3, false).unwrap();
        let m2 = fit_pca(&(&x * 3.0), 3, false).unwrap();
        for a in 0..3 {
            assert!((m1.explvar_x[a] - m2.explvar_x[a]).abs() < 1e-12);
        }
        let scaled_t = &m1.t * 3.0;
        let diff = &scaled_t - &m2.t;
        assert!(max_abs(&diff) < 1e-9);
    }

    #[test]
    fn errors_on_bad_arguments() {
        let mut rng = Rng::seed_from_u64(2);
        let x = random(&mut rng, 5, 3);
        assert!(fit_pca(&x, 4, false).is_err()); // > min(n-1, N)
        let mut xconst = x.clone();
        for i in 0..5 {
            xconst[[i, 1]] = 7.0;
        }
        assert!(fit_pca(&xconst, 2, true).is_err()); // constant col, scale on
        assert!(fit_pca(&xconst, 2, false).is_ok());
    }

    #[test]
    fn correlation_loadings_match_hand_cases() {
        let mut rng = Rng::seed_from_u64(8);
        let x = random(&mut rng, 12, 3);
        let model = fit_pca(&x, 2, false).unwrap();
        // build a matrix whose col 0 IS score col 0, col 1 constant
        let mut probe = Array2::zeros((12, 2));
        for i in 0..12 {
            probe[[i, 0]] = model.t[[i, 0]];
            probe[[i, 1]] = 5.0;
        }
        let cl = correlation_loadings(&probe, &model.t).unwrap();
        assert!((cl[[0, 0]] - 1.0).abs() < 1e-12);
        assert_eq!(cl[[1, 0]], 0.0);
        assert_eq!(cl[[1, 1]], 0.0);
        // all entries within [-1, 1]
        let full = correlation_loadings(&x, &model.t).unwrap();
        assert!(full.iter().all(|&v| (-1.0..=1.0).contains(&v)));
    }
}
