//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::{Error, Result};

/// Multivariate least squares of `y` (n x m) on `x` (n x k).
#[derive(Debug)]
pub(crate) struct Ols {
    /// k x m coefficient matrix.
    pub coef: DMatrix<f64>,
    /// n x m residual matrix.
    pub residuals: DMatrix<f64>,
    /// (X'X)^{-1}, kept for Wald-type covariances.
    pub xtx_inv: DMatrix<f64>,
}

/// Least squares via the normal equations; errors name the collinear columns.
pub(crate) fn ols<F>(y: &DMatrix<f64>, x: &DMatrix<f64>, column_name: F) -> Result<Ols>
where
    F: Fn(usize) -> String,
{
    debug_assert_eq!(y.nrows(), x.nrows());
    let xtx = x.transpose() * x;
    let chol = match Cholesky::new(xtx) {
        Some(c) => c,
        None => {
            return Err(Error::Collinear {
                columns: dependent_columns(x, column_name),
            })
        }
    };
    let xty = x.transpose() * y;
    let coef = chol.solve(&xty);
    let residuals = y - x * &coef;
    let xtx_inv = chol.inverse();
    Ok(Ols {
        coef,
        residuals,
        xtx_inv,
    })
}

/// Names of columns (in order) that are numerically in the span of the
/// preceding ones. Diagnostic path only.
fn dependent_columns<F>(x: &DMatrix<f64>, column_name: F) -> Vec<String>
where
    F: Fn(usize) -> String,
{
    let n = x.nrows();
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..x.ncols() {
        let mut v = nalgebra::DVector::from_iterator(n, x.column(j).iter().copied());
        let original = v.norm();
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        if v.norm() <= 1e-10 * original.max(1.0) {
            dependent.push(column_name(j));
        } else {
            let norm = v.norm();
            basis.push(v / norm);
        }
    }
    if dependent.is_empty() {
        dependent.push("unidentified".to_string());
    }
    dependent
}

/// Cholesky factorization, erroring with a description of the matrix.
pub(crate) fn cholesky(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::Singular {
        what: what.to_string(),
    })
}

/// Inverse of a symmetric positive-definite matrix.
pub(crate) fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Ok(cholesky(m.clone(), what)?.inverse())
}

/// `a' * b / scale`, the moment-matrix building block.
pub(crate) fn cross_moment(a: &DMatrix<f64>, b: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    (a.transpose() * b) / scale
}

/// Force exact symmetry on a nearly-symmetric matrix.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Percentile of a sorted slice with linear interpolation between order
/// statistics; `p` in [0, 1].
pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = h - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Gaussian log-likelihood of residuals with ML covariance `sigma`:
/// -T/2 * (k ln 2pi + ln|Sigma| + k).
pub(crate) fn gaussian_loglik(t_eff: usize, sigma: &DMatrix<f64>) -> Result<f64> {
    let k = sigma.nrows() as f64;
    let chol = cholesky(sigma.clone(), "residual covariance")?;
    let ln_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(-0.5 * t_eff as f64 * (k * (2.0 * std::f64::consts::PI).ln() + ln_det + k))
}
