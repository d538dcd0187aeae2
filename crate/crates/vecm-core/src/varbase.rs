//! Unrestricted VAR estimation by least squares and lag-order selection.
//!
//! The VAR here is the prerequisite step of the cointegration workflow: lag
//! order is chosen on the levels VAR, then carried into the error-correction
//! form.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dataset::{Deterministic, TimeSeriesTable};
use crate::linalg;
use crate::{Error, Result};

/// Least-squares fit of a levels VAR(p).
#[derive(Debug, Clone)]
pub struct VarFit {
    pub lag_order: usize,
    /// Coefficient matrices A_1..A_p; `coef[i-1][(j, k)]` multiplies variable
    /// k at lag i in the equation of variable j.
    pub coef: Vec<DMatrix<f64>>,
    pub intercept: DVector<f64>,
    pub trend: Option<DVector<f64>>,
    /// (T - p) x K residual matrix.
    pub residuals: DMatrix<f64>,
    /// ML residual covariance (denominator T - p).
    pub sigma: DMatrix<f64>,
    /// Gaussian log-likelihood; +inf for an exact (noiseless) fit.
    pub loglik: f64,
    pub names: Vec<String>,
    pub t_eff: usize,
}

pub(crate) fn deterministic_count(det: Deterministic) -> usize {
    match det {
        Deterministic::Constant => 1,
        Deterministic::ConstantTrend => 2,
    }
}

/// Equation-by-equation least squares of the levels VAR(p).
pub fn fit_var(table: &TimeSeriesTable, p: usize, det: Deterministic) -> Result<VarFit> {
    fit_var_from(table, p, det, p)
}

/// Same as [`fit_var`] but reserving `presample >= p` leading rows, so fits
/// with different `p` share one estimation sample.
fn fit_var_from(
    table: &TimeSeriesTable,
    p: usize,
    det: Deterministic,
    presample: usize,
) -> Result<VarFit> {
    if p == 0 || presample < p {
        return Err(Error::InvalidParameter {
            what: format!("lag order {p} with presample {presample}"),
        });
    }
    let t = table.len();
    let k = table.width();
    let n_det = deterministic_count(det);
    if t.saturating_sub(p) <= k * p + 2 || t.saturating_sub(presample) <= k * p + n_det {
        return Err(Error::TooShort {
            needed: presample + k * p + n_det + 1,
            got: t,
        });
    }
    let t_eff = t - presample;
    let y = table.values();
    let n_reg = n_det + k * p;

    let mut x = DMatrix::zeros(t_eff, n_reg);
    let mut targets = DMatrix::zeros(t_eff, k);
    for (row, t_idx) in (presample..t).enumerate() {
        x[(row, 0)] = 1.0;
        if n_det == 2 {
            x[(row, 1)] = (t_idx + 1) as f64;
        }
        for lag in 1..=p {
            for j in 0..k {
                x[(row, n_det + (lag - 1) * k + j)] = y[(t_idx - lag, j)];
            }
        }
        for j in 0..k {
            targets[(row, j)] = y[(t_idx, j)];
        }
    }

    let names = table.names();
    let fit = linalg::ols(&targets, &x, |col| regressor_name(col, n_det, k, names))?;

    let mut coef = Vec::with_capacity(p);
    for lag in 1..=p {
        coef.push(DMatrix::from_fn(k, k, |j, m| {
            fit.coef[(n_det + (lag - 1) * k + m, j)]
        }));
    }
    let intercept = DVector::from_fn(k, |j, _| fit.coef[(0, j)]);
    let trend = (n_det == 2).then(|| DVector::from_fn(k, |j, _| fit.coef[(1, j)]));

    let sigma = linalg::cross_moment(&fit.residuals, &fit.residuals, t_eff as f64);
    // Exact fits (zero residual variance) are legal input; report +inf.
    let loglik = linalg::gaussian_loglik(t_eff, &sigma).unwrap_or(f64::INFINITY);

    Ok(VarFit {
        lag_order: p,
        coef,
        intercept,
        trend,
        residuals: fit.residuals,
        sigma,
        loglik,
        names: names.to_vec(),
        t_eff,
    })
}

fn regressor_name(col: usize, n_det: usize, k: usize, names: &[String]) -> String {
    if col == 0 {
        return "const".to_string();
    }
    if n_det == 2 && col == 1 {
        return "trend".to_string();
    }
    let offset = col - n_det;
    let lag = offset / k + 1;
    format!("{} (lag {})", names[offset % k], lag)
}

/// One row of the lag-order comparison.
#[derive(Debug, Clone, Serialize)]
pub struct LagOrderRow {
    pub p: usize,
    pub loglik: f64,
    pub n_params: usize,
    pub aic: f64,
    pub schwarz: f64,
    pub hannan_quinn: f64,
}

/// Information criteria over a lag grid, computed on the common sample that
/// reserves `p_max` presample rows.
#[derive(Debug, Clone, Serialize)]
pub struct LagOrderTable {
    pub rows: Vec<LagOrderRow>,
    pub t_eff: usize,
    pub best_aic: usize,
    pub best_schwarz: usize,
    pub best_hannan_quinn: usize,
}

/// AIC, Schwarz, and Hannan-Quinn for p = 1..=p_max.
///
/// Criteria are `-2 loglik + penalty * n_params` with penalties 2,
/// ln(T_eff), and 2 ln ln(T_eff); ties break toward the smaller p.
pub fn lag_order_table(
    table: &TimeSeriesTable,
    p_max: usize,
    det: Deterministic,
) -> Result<LagOrderTable> {
    if p_max == 0 {
        return Err(Error::InvalidParameter {
            what: "p_max must be at least 1".to_string(),
        });
    }
    let k = table.width();
    let n_det = deterministic_count(det);
    let t_eff = table.len().saturating_sub(p_max);
    let mut rows = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let fit = fit_var_from(table, p, det, p_max)?;
        let n_params = k * (k * p + n_det);
        let neg2ll = -2.0 * fit.loglik;
        rows.push(LagOrderRow {
            p,
            loglik: fit.loglik,
            n_params,
            aic: neg2ll + 2.0 * n_params as f64,
            schwarz: neg2ll + (t_eff as f64).ln() * n_params as f64,
            hannan_quinn: neg2ll + 2.0 * (t_eff as f64).ln().ln() * n_params as f64,
        });
    }
    let best = |value: fn(&LagOrderRow) -> f64| {
        rows.iter()
            .fold((usize::MAX, f64::INFINITY), |(bp, bv), row| {
                if value(row) < bv {
                    (row.p, value(row))
                } else {
                    (bp, bv)
                }
            })
            .0
    };
    Ok(LagOrderTable {
        best_aic: best(|r| r.aic),
        best_schwarz: best(|r| r.schwarz),
        best_hannan_quinn: best(|r| r.hannan_quinn),
        rows,
        t_eff,
    })
}

/// Companion matrix of a levels VAR: block row (A_1 .. A_p) over a shifted
/// identity.
pub fn companion_matrix(coef: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = coef.len();
    assert!(p > 0, "companion matrix needs at least one lag matrix");
    let k = coef[0].nrows();
    let n = k * p;
    let mut c = DMatrix::zeros(n, n);
    for (i, a) in coef.iter().enumerate() {
        c.view_mut((0, i * k), (k, k)).copy_from(a);
    }
    for i in 0..k * (p - 1) {
        c[(k + i, i)] = 1.0;
    }
    c
}

/// Eigenvalue moduli of the companion matrix, sorted descending.
///
/// The QR iteration can stall on exactly structured companions (repeated
/// roots, decoupled blocks), so failed attempts retry under a seeded random
/// orthogonal similarity, which leaves the spectrum unchanged.
pub fn companion_moduli(coef: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    let c = companion_matrix(coef);
    let n = c.nrows();
    let max_iter = 200 * n.max(4);
    for attempt in 0..4u64 {
        let trial = if attempt == 0 {
            c.clone()
        } else {
            let mut rng = crate::rng::GaussianSource::from_seed(0x5EED + attempt);
            let g = DMatrix::from_fn(n, n, |_, _| rng.next_normal());
            let q = g.qr().q();
            q.transpose() * &c * q
        };
        if let Some(schur) = trial.try_schur(1e-12, max_iter * (attempt as usize + 1)) {
            let mut moduli: Vec<f64> = schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .collect();
            moduli.sort_by(|a, b| b.total_cmp(a));
            return Ok(moduli);
        }
    }
    Err(Error::EigenFailure {
        what: format!("companion eigenvalues did not converge (dimension {n})"),
    })
}
