//! Augmented Dickey-Fuller unit-root testing.
//!
//! The test regression is
//!
//! ```text
//! dy_t = c (+ d*t) + rho * y_{t-1} + phi_1 dy_{t-1} + ... + phi_p dy_{t-p} + e_t
//! ```
//!
//! and the reported statistic is the t-ratio on `rho`. P-values come from a
//! response-surface approximation of the asymptotic Dickey-Fuller
//! distribution for the chosen deterministic case (MacKinnon-style
//! coefficients, embedded below); the surface is validated against a direct
//! Monte Carlo simulation of the null distribution in the test suite.

use serde::Serialize;

use crate::dataset::{first_difference, Deterministic};
use crate::dist::normal_cdf;
use crate::linalg;
use crate::{Error, Result};

/// Lag-order rule for the ADF regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagSelection {
    Fixed(usize),
    /// Minimize the Schwarz criterion over 0..=floor(12 * (T/100)^0.25),
    /// holding the estimation sample fixed across candidates.
    Auto,
}

/// Outcome of one ADF test.
#[derive(Debug, Clone, Serialize)]
pub struct AdfResult {
    /// t-ratio on the lagged level.
    pub statistic: f64,
    pub p_value: f64,
    pub lags_used: usize,
    pub deterministic: Deterministic,
    /// Regression sample size, T - lags_used - 1.
    pub n_obs: usize,
}

/// Integration order verdict from sequential level/difference testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntegrationOrder {
    #[serde(rename = "I(0)")]
    I0,
    #[serde(rename = "I(1)")]
    I1,
    #[serde(rename = "I(2+)")]
    I2Plus,
}

impl std::fmt::Display for IntegrationOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntegrationOrder::I0 => write!(f, "I(0)"),
            IntegrationOrder::I1 => write!(f, "I(1)"),
            IntegrationOrder::I2Plus => write!(f, "I(2+)"),
        }
    }
}

/// Minimum observations beyond the lag order for a usable regression.
const MIN_EXTRA_OBS: usize = 10;

/// Upper bound of the automatic lag grid: floor(12 * (T/100)^0.25).
pub fn max_auto_lag(t: usize) -> usize {
    (12.0 * (t as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Augmented Dickey-Fuller test.
pub fn adf_test(series: &[f64], det: Deterministic, lags: LagSelection) -> Result<AdfResult> {
    let t = series.len();
    let lags_used = match lags {
        LagSelection::Fixed(p) => {
            require_len(t, p)?;
            p
        }
        LagSelection::Auto => {
            require_len(t, 0)?;
            let mut max_lag = max_auto_lag(t);
            while max_lag > 0 && t < max_lag + MIN_EXTRA_OBS {
                max_lag -= 1;
            }
            select_lag_schwarz(series, det, max_lag)?
        }
    };
    let (statistic, n_obs) = adf_statistic(series, det, lags_used)?;
    let p_value = mackinnon_p(statistic, det);
    Ok(AdfResult {
        statistic,
        p_value,
        lags_used,
        deterministic: det,
        n_obs,
    })
}

/// Two-step classification: reject in levels -> I(0); otherwise reject in
/// first differences -> I(1); otherwise I(2+). The same deterministic case
/// is used for both steps.
pub fn integration_order(
    series: &[f64],
    det: Deterministic,
    lags: LagSelection,
    alpha: f64,
) -> Result<IntegrationOrder> {
    if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
        return Err(Error::InvalidParameter {
            what: format!("significance level {alpha}"),
        });
    }
    let level = adf_test(series, det, lags)?;
    if level.p_value < alpha {
        return Ok(IntegrationOrder::I0);
    }
    let diff = first_difference(series)?;
    let diffed = adf_test(&diff, det, lags)?;
    if diffed.p_value < alpha {
        Ok(IntegrationOrder::I1)
    } else {
        Ok(IntegrationOrder::I2Plus)
    }
}

fn require_len(t: usize, lags: usize) -> Result<()> {
    if t < lags + MIN_EXTRA_OBS {
        return Err(Error::TooShort {
            needed: lags + MIN_EXTRA_OBS,
            got: t,
        });
    }
    Ok(())
}

/// t-ratio on the lagged level and the regression sample size.
fn adf_statistic(series: &[f64], det: Deterministic, lags: usize) -> Result<(f64, usize)> {
    regression_t_ratio(series, det, lags, lags)
}

/// The ADF regression with `presample` observations reserved (so candidate
/// lag orders can share a sample); returns (t-ratio, n_obs). Also used by
/// the Schwarz selection below via its residual sum of squares.
fn regression_t_ratio(
    series: &[f64],
    det: Deterministic,
    lags: usize,
    presample: usize,
) -> Result<(f64, usize)> {
    let (stat, n_obs, _rss, _k) = adf_regression(series, det, lags, presample)?;
    Ok((stat, n_obs))
}

fn adf_regression(
    series: &[f64],
    det: Deterministic,
    lags: usize,
    presample: usize,
) -> Result<(f64, usize, f64, usize)> {
    debug_assert!(presample >= lags);
    let t = series.len();
    let diff = first_difference(series)?;
    // targets are dy_t for t = presample+1 .. T-1 (0-based level index)
    let n_obs = t
        .checked_sub(presample + 1)
        .filter(|n| *n > 0)
        .ok_or(Error::TooShort {
            needed: presample + 2,
            got: t,
        })?;
    let n_det = crate::varbase::deterministic_count(det);
    let n_reg = n_det + 1 + lags;
    if n_obs <= n_reg + 1 {
        return Err(Error::TooShort {
            needed: presample + n_reg + 3,
            got: t,
        });
    }
    let mut x = nalgebra::DMatrix::zeros(n_obs, n_reg);
    let mut y = nalgebra::DMatrix::zeros(n_obs, 1);
    for row in 0..n_obs {
        let t_idx = presample + 1 + row;
        y[(row, 0)] = diff[t_idx - 1];
        x[(row, 0)] = 1.0;
        if n_det == 2 {
            x[(row, 1)] = t_idx as f64;
        }
        x[(row, n_det)] = series[t_idx - 1];
        for j in 1..=lags {
            x[(row, n_det + j)] = diff[t_idx - 1 - j];
        }
    }
    let fit = linalg::ols(&y, &x, |col| match col {
        0 => "const".to_string(),
        c if n_det == 2 && c == 1 => "trend".to_string(),
        c if c == n_det => "level lag".to_string(),
        c => format!("difference lag {}", c - n_det),
    })?;
    let rss: f64 = fit.residuals.column(0).norm_squared();
    let s2 = rss / (n_obs - n_reg) as f64;
    let se = (s2 * fit.xtx_inv[(n_det, n_det)]).sqrt();
    if se <= 0.0 || !se.is_finite() {
        return Err(Error::Singular {
            what: "ADF coefficient variance".to_string(),
        });
    }
    let stat = fit.coef[(n_det, 0)] / se;
    Ok((stat, n_obs, rss, n_reg))
}

/// Schwarz-minimizing lag over 0..=max_lag on the common sample; ties break
/// toward fewer lags.
fn select_lag_schwarz(series: &[f64], det: Deterministic, max_lag: usize) -> Result<usize> {
    let mut best = (0, f64::INFINITY);
    for p in 0..=max_lag {
        let (_stat, n_obs, rss, n_reg) = match adf_regression(series, det, p, max_lag) {
            Ok(v) => v,
            Err(Error::TooShort { .. }) if p > 0 => break,
            Err(e) => return Err(e),
        };
        let n = n_obs as f64;
        let bic = n * (rss / n).ln() + (n_reg as f64) * n.ln();
        if bic < best.1 {
            best = (p, bic);
        }
    }
    Ok(best.0)
}

// Response-surface coefficients mapping the ADF t-ratio to an asymptotic
// p-value, one set per deterministic case. Within each case: below
// `tau_star` the quadratic `small_p` applies, above it the cubic `large_p`;
// outside [tau_min, tau_max] the p-value saturates at 0 or 1. The polynomial
// value is passed through the standard normal CDF.
struct PSurface {
    tau_min: f64,
    tau_max: f64,
    tau_star: f64,
    small_p: [f64; 3],
    large_p: [f64; 4],
}

const SURFACE_CONSTANT: PSurface = PSurface {
    tau_min: -18.83,
    tau_max: 2.74,
    tau_star: -1.61,
    small_p: [2.1659, 1.4412, 3.8269e-2],
    large_p: [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2],
};

const SURFACE_CONSTANT_TREND: PSurface = PSurface {
    tau_min: -16.18,
    tau_max: 0.7,
    tau_star: -2.89,
    small_p: [3.2512, 1.6047, 4.9588e-2],
    large_p: [2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2],
};

/// Asymptotic p-value of the ADF t-ratio.
pub fn mackinnon_p(statistic: f64, det: Deterministic) -> f64 {
    let surface = match det {
        Deterministic::Constant => &SURFACE_CONSTANT,
        Deterministic::ConstantTrend => &SURFACE_CONSTANT_TREND,
    };
    if statistic > surface.tau_max {
        return 1.0;
    }
    if statistic < surface.tau_min {
        return 0.0;
    }
    let z = if statistic <= surface.tau_star {
        polyval(&surface.small_p, statistic)
    } else {
        polyval(&surface.large_p, statistic)
    };
    normal_cdf(z).clamp(0.0, 1.0)
}

fn polyval(coefs: &[f64], x: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}
