//! Post-estimation checks for a fitted VECM: companion-root stability,
//! residual autocorrelation, weak exogeneity, and short-run Granger
//! causality.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dist::chi_square_sf;
use crate::johansen::{build_frame, VecmFit};
use crate::linalg;
use crate::structural::vecm_to_var;
use crate::varbase::companion_moduli;
use crate::{Error, Result};

/// Relative tolerance separating the exact unit roots implied by the rank
/// restriction from near-unit estimated roots.
const UNIT_TOL: f64 = 1e-6;

/// Companion-root summary of a fitted VECM.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    /// Eigenvalue moduli of the levels companion matrix, descending.
    pub moduli: Vec<f64>,
    /// Moduli within `1e-6` of one; a rank-r fit on K variables carries
    /// exactly K - r of them.
    pub unit_count: usize,
    /// Largest modulus outside the unit set (0 when none).
    pub max_non_unit: f64,
    /// False when any non-unit modulus exceeds 1 + 1e-8.
    pub is_stable: bool,
}

/// Companion eigenvalue moduli of the implied levels VAR.
pub fn stability(fit: &VecmFit) -> Result<StabilityReport> {
    let moduli = companion_moduli(&vecm_to_var(fit))?;
    let unit_count = moduli.iter().filter(|m| (**m - 1.0).abs() <= UNIT_TOL).count();
    let max_non_unit = moduli
        .iter()
        .filter(|m| (**m - 1.0).abs() > UNIT_TOL)
        .fold(0.0f64, |acc, m| acc.max(*m));
    Ok(StabilityReport {
        is_stable: max_non_unit <= 1.0 + 1e-8,
        moduli,
        unit_count,
        max_non_unit,
    })
}

/// A chi-square test outcome; the p-value is the chi-square survival
/// function at the statistic by construction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

impl TestResult {
    pub fn from_chi_square(statistic: f64, degrees_of_freedom: usize) -> Self {
        Self {
            statistic,
            degrees_of_freedom,
            p_value: chi_square_sf(statistic, degrees_of_freedom),
        }
    }
}

/// Multivariate LM test against residual autocorrelation at one lag.
///
/// The residuals are regressed on the original VECM regressors plus their
/// own lag-j values (pre-sample residuals set to zero); the statistic is
/// `(T - d - 0.5) ln(|Sigma_restricted| / |Sigma_auxiliary|)` with the
/// Bartlett-style multiplier for a K-regressor block, on K^2 degrees of
/// freedom.
pub fn lm_autocorrelation(fit: &VecmFit, lag: usize) -> Result<TestResult> {
    if lag == 0 {
        return Err(Error::InvalidParameter {
            what: "autocorrelation lag must be positive".to_string(),
        });
    }
    let k = fit.k();
    let t_eff = fit.t_eff;
    if t_eff <= k * lag {
        return Err(Error::TooShort {
            needed: k * lag + 1,
            got: t_eff,
        });
    }
    let frame = build_frame(&fit.data, fit.spec.lags, fit.spec.deterministic)?;
    let r = fit.rank();
    let n2 = frame.z2.ncols();
    let u = &fit.residuals;

    let d = r + n2 + k;
    if t_eff <= d + k + 1 {
        return Err(Error::TooShort {
            needed: d + k + 2,
            got: t_eff,
        });
    }

    let mut x = DMatrix::<f64>::zeros(t_eff, d);
    if r > 0 {
        let v = &frame.z1 * &fit.beta;
        x.view_mut((0, 0), (t_eff, r)).copy_from(&v);
    }
    x.view_mut((0, r), (t_eff, n2)).copy_from(&frame.z2);
    for row in 0..t_eff {
        if row >= lag {
            for j in 0..k {
                x[(row, r + n2 + j)] = u[(row - lag, j)];
            }
        }
    }

    let aux = linalg::ols(u, &x, |c| format!("aux regressor {c}"))?;
    let sigma_aux = linalg::cross_moment(&aux.residuals, &aux.residuals, t_eff as f64);
    let ln_det = |m: &DMatrix<f64>| -> Result<f64> {
        let chol = linalg::cholesky(m.clone(), "LM covariance")?;
        Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
    };
    // residuals are orthogonal to the original regressors, so the restricted
    // auxiliary covariance is the fit covariance itself
    let multiplier = t_eff as f64 - d as f64 - 0.5;
    let statistic = (multiplier * (ln_det(&fit.sigma)? - ln_det(&sigma_aux)?)).max(0.0);
    Ok(TestResult::from_chi_square(statistic, k * k))
}

/// Likelihood-ratio test that one variable's adjustment row is zero.
///
/// The restricted model is re-estimated by the switching algorithm:
/// alternate GLS steps for the restricted adjustment block (given beta) and
/// for beta (given alpha), until the log-likelihood moves less than 1e-10
/// (1,000-iteration cap). Degrees of freedom equal the cointegration rank.
pub fn weak_exogeneity(fit: &VecmFit, variable: &str) -> Result<TestResult> {
    let r = fit.rank();
    if r == 0 {
        return Err(Error::InvalidParameter {
            what: "weak exogeneity needs rank >= 1".to_string(),
        });
    }
    let k = fit.k();
    let excluded = fit
        .names
        .iter()
        .position(|n| n == variable)
        .ok_or_else(|| Error::UnknownVariable {
            name: variable.to_string(),
        })?;

    let frame = build_frame(&fit.data, fit.spec.lags, fit.spec.deterministic)?;
    let t = frame.t_eff as f64;
    let r0 = &frame.r0;
    let r1 = &frame.r1;

    // selection of the unrestricted adjustment rows
    let mut a_sel = DMatrix::<f64>::zeros(k, k - 1);
    let mut col = 0;
    for row in 0..k {
        if row != excluded {
            a_sel[(row, col)] = 1.0;
            col += 1;
        }
    }

    let mut beta = fit.beta.clone();
    let mut sigma = fit.sigma.clone();
    let mut last_ll = f64::NEG_INFINITY;
    let mut converged = false;
    let s11_inv = linalg::spd_inverse(&frame.s11, "S11 moment matrix")?;
    let s10 = frame.s01.transpose();

    let max_iter = 1_000;
    for _ in 0..max_iter {
        // adjustment step: ML of (psi, Sigma) given beta, alpha = A psi
        let v = r1 * &beta;
        let svv = linalg::cross_moment(&v, &v, t);
        let s0v = linalg::cross_moment(r0, &v, t);
        let svv_inv = linalg::spd_inverse(&svv, "EC-term moment matrix")?;
        let mut alpha = DMatrix::<f64>::zeros(k, r);
        for _ in 0..100 {
            let sigma_inv = linalg::spd_inverse(&sigma, "residual covariance")?;
            let mut asa = a_sel.transpose() * &sigma_inv * &a_sel;
            linalg::symmetrize(&mut asa);
            let asa_inv = linalg::spd_inverse(&asa, "restricted information")?;
            let psi = asa_inv * a_sel.transpose() * &sigma_inv * &s0v * &svv_inv;
            alpha = &a_sel * psi;
            let resid = r0 - &v * alpha.transpose();
            let next = linalg::cross_moment(&resid, &resid, t);
            let delta = (&next - &sigma).abs().max();
            sigma = next;
            if delta < 1e-12 {
                break;
            }
        }
        let ll = linalg::gaussian_loglik(frame.t_eff, &sigma)?;
        if (ll - last_ll).abs() < 1e-10 {
            last_ll = ll;
            converged = true;
            break;
        }
        last_ll = ll;

        // beta step: GLS given alpha and Sigma
        let sigma_inv = linalg::spd_inverse(&sigma, "residual covariance")?;
        let mut asa = alpha.transpose() * &sigma_inv * &alpha;
        linalg::symmetrize(&mut asa);
        let asa_inv = linalg::spd_inverse(&asa, "alpha' Sigma^-1 alpha")?;
        beta = &s11_inv * &s10 * &sigma_inv * &alpha * asa_inv;
    }
    if !converged {
        return Err(Error::NotConverged {
            iterations: max_iter,
        });
    }

    let statistic = (2.0 * (fit.loglik - last_ll)).max(0.0);
    Ok(TestResult::from_chi_square(statistic, r))
}

/// Wald test that all lagged differences of `cause` are jointly zero in the
/// equation of `effect`; degrees of freedom l - 1.
pub fn granger_short_run(fit: &VecmFit, cause: &str, effect: &str) -> Result<TestResult> {
    let l = fit.spec.lags;
    if l < 2 {
        return Err(Error::InvalidParameter {
            what: "short-run Granger test needs at least one differenced lag (l >= 2)".to_string(),
        });
    }
    let k = fit.k();
    let cause_idx = fit
        .names
        .iter()
        .position(|n| n == cause)
        .ok_or_else(|| Error::UnknownVariable {
            name: cause.to_string(),
        })?;
    let effect_idx = fit
        .names
        .iter()
        .position(|n| n == effect)
        .ok_or_else(|| Error::UnknownVariable {
            name: effect.to_string(),
        })?;

    let frame = build_frame(&fit.data, l, fit.spec.deterministic)?;
    let r = fit.rank();
    let n2 = frame.z2.ncols();
    let mut x = DMatrix::<f64>::zeros(frame.t_eff, r + n2);
    if r > 0 {
        let v = &frame.z1 * &fit.beta;
        x.view_mut((0, 0), (frame.t_eff, r)).copy_from(&v);
    }
    x.view_mut((0, r), (frame.t_eff, n2)).copy_from(&frame.z2);
    let ols = linalg::ols(&frame.z0, &x, |c| format!("regressor {c}"))?;

    let positions: Vec<usize> = (1..l).map(|lag| r + (lag - 1) * k + cause_idx).collect();
    let theta = nalgebra::DVector::from_fn(l - 1, |i, _| ols.coef[(positions[i], effect_idx)]);
    let mut cov = DMatrix::<f64>::zeros(l - 1, l - 1);
    let s_ee = fit.sigma[(effect_idx, effect_idx)];
    for i in 0..l - 1 {
        for j in 0..l - 1 {
            cov[(i, j)] = s_ee * ols.xtx_inv[(positions[i], positions[j])];
        }
    }
    let cov_inv = linalg::spd_inverse(&cov, "Granger coefficient covariance")?;
    let statistic = (theta.transpose() * cov_inv * &theta)[(0, 0)].max(0.0);
    Ok(TestResult::from_chi_square(statistic, l - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::johansen::{estimate_vecm, VecmDeterministic, VecmSpec};
    use crate::rng::GaussianSource;
    use crate::synthetic::{simulate, VecmDgp};
    use nalgebra::DVector;

    fn fitted(k: usize, r: usize, t: usize, seed: u64) -> VecmFit {
        let dgp = VecmDgp::demo(k, r).unwrap();
        let table = simulate(&dgp, t, seed).unwrap();
        estimate_vecm(
            &table,
            VecmSpec {
                lags: 2,
                rank: r,
                deterministic: VecmDeterministic::ConstantOnly,
            },
        )
        .unwrap()
    }

    #[test]
    fn scalar_ar1_stability() {
        // univariate AR(1) with coefficient 0.5 written as a rank-1 VECM
        let fit = VecmFit {
            spec: VecmSpec {
                lags: 1,
                rank: 1,
                deterministic: VecmDeterministic::ConstantOnly,
            },
            names: vec!["y".to_string()],
            alpha: DMatrix::from_element(1, 1, -0.5),
            beta: DMatrix::from_element(1, 1, 1.0),
            gammas: vec![],
            intercept: DVector::zeros(1),
            residuals: DMatrix::zeros(10, 1),
            sigma: DMatrix::identity(1, 1),
            loglik: 0.0,
            eigenvalues: vec![0.3],
            t_eff: 10,
            beta_se: None,
            normalization: None,
            data: DMatrix::zeros(11, 1),
        };
        let report = stability(&fit).unwrap();
        assert_eq!(report.moduli, vec![0.5]);
        assert_eq!(report.unit_count, 0);
        assert!(report.is_stable);
    }

    #[test]
    fn unit_root_count_matches_rank_deficit() {
        for (k, r) in [(3usize, 1usize), (4, 2), (7, 2)] {
            let fit = fitted(k, r, 600, 1000 + (10 * k + r) as u64);
            let report = stability(&fit).unwrap();
            assert_eq!(
                report.unit_count,
                k - r,
                "K={k} r={r}: moduli {:?}",
                report.moduli
            );
            assert!(report.max_non_unit < 1.0);
            assert!(report.is_stable);
        }
    }

    #[test]
    fn chi_square_mapping_matches_published_triples() {
        // df = 2: SF(x) = exp(-x/2)
        let t = TestResult::from_chi_square(1.450, 2);
        assert!((t.p_value - 0.484).abs() < 1e-3);
        let t = TestResult::from_chi_square(12.443, 2);
        assert!((t.p_value - 0.002).abs() < 1e-3);
        let t = TestResult::from_chi_square(37.74, 49);
        assert!((t.p_value - 0.879).abs() < 1e-3);
    }

    #[test]
    fn lm_test_detects_serially_correlated_residuals() {
        // innovations are strongly AR(1) and the model has no differenced
        // lags (l = 1), so the dependence lands in the residuals
        let mut src = GaussianSource::from_seed(77);
        let t = 300;
        let mut values = DMatrix::<f64>::zeros(t, 2);
        let mut e = 0.0f64;
        let mut walk = 0.0f64;
        for i in 0..t {
            e = 0.8 * e + src.next_normal();
            walk += e;
            values[(i, 0)] = walk;
            values[(i, 1)] = walk + 0.5 * src.next_normal();
        }
        let table = crate::test_util::table_from_matrix(values);
        let fit = estimate_vecm(
            &table,
            VecmSpec {
                lags: 1,
                rank: 1,
                deterministic: VecmDeterministic::ConstantOnly,
            },
        )
        .unwrap();
        let res = lm_autocorrelation(&fit, 1).unwrap();
        assert_eq!(res.degrees_of_freedom, 4);
        assert!(res.p_value < 0.01, "p = {}", res.p_value);
    }

    #[test]
    fn lm_test_size_under_the_null() {
        let reps = 300;
        let mut rejections = 0;
        for seed in 0..reps {
            let fit = fitted(2, 1, 200, 40_000 + seed);
            let res = lm_autocorrelation(&fit, 1).unwrap();
            if res.p_value < 0.05 {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / reps as f64;
        assert!(
            (0.02..=0.08).contains(&rate),
            "rejection rate {rate} over {reps} seeds"
        );
    }

    #[test]
    fn weak_exogeneity_detects_adjusting_and_non_adjusting_rows() {
        // v0 adjusts strongly, v1 does not (alpha row exactly zero)
        let dgp = VecmDgp::new(
            DMatrix::from_column_slice(2, 1, &[-0.5, 0.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
            vec![DMatrix::identity(2, 2) * 0.1],
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let table = simulate(&dgp, 500, 5).unwrap();
        let fit = estimate_vecm(
            &table,
            VecmSpec {
                lags: 2,
                rank: 1,
                deterministic: VecmDeterministic::ConstantOnly,
            },
        )
        .unwrap();
        let adjusting = weak_exogeneity(&fit, "v0").unwrap();
        assert!(adjusting.p_value < 0.01, "v0: {adjusting:?}");
        let exogenous = weak_exogeneity(&fit, "v1").unwrap();
        assert!(exogenous.p_value > 0.05, "v1: {exogenous:?}");
        assert_eq!(exogenous.degrees_of_freedom, 1);
        assert!(exogenous.statistic >= 0.0);
    }

    #[test]
    fn granger_directionality_recovered() {
        // x (v0) feeds y (v1) with one differenced lag, not conversely
        let mut src = GaussianSource::from_seed(123);
        let t = 2_000;
        let mut values = DMatrix::<f64>::zeros(t, 2);
        let (mut x_lvl, mut y_lvl) = (0.0f64, 0.0f64);
        let mut dx_prev = 0.0f64;
        for i in 0..t {
            let dx = src.next_normal();
            let dy = 0.6 * dx_prev + src.next_normal();
            x_lvl += dx;
            y_lvl += dy;
            values[(i, 0)] = x_lvl;
            values[(i, 1)] = y_lvl;
            dx_prev = dx;
        }
        let table = crate::test_util::table_from_matrix(values);
        let fit = estimate_vecm(
            &table,
            VecmSpec {
                lags: 2,
                rank: 0,
                deterministic: VecmDeterministic::ConstantOnly,
            },
        )
        .unwrap();
        let forward = granger_short_run(&fit, "v0", "v1").unwrap();
        assert!(forward.p_value < 0.01, "forward {forward:?}");
        let backward = granger_short_run(&fit, "v1", "v0").unwrap();
        assert!(backward.p_value > 0.10, "backward {backward:?}");
        assert_eq!(forward.degrees_of_freedom, 1);
        // the own-lag diagonal is computable
        let own = granger_short_run(&fit, "v0", "v0").unwrap();
        assert!(own.p_value <= 1.0);
    }

    #[test]
    fn granger_size_under_the_null() {
        let reps = 300;
        let mut rejections = 0;
        for seed in 0..reps {
            let fit = fitted(2, 1, 200, 60_000 + seed);
            // in the demo process no lagged difference of v1 enters v0 beyond
            // the diagonal short-run matrix, so v1 -> v0 short-run lags are 0
            let res = granger_short_run(&fit, "v1", "v0").unwrap();
            if res.p_value < 0.05 {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / reps as f64;
        assert!(
            (0.02..=0.08).contains(&rate),
            "rejection rate {rate} over {reps} seeds"
        );
    }

    #[test]
    fn granger_needs_a_differenced_lag() {
        let dgp = VecmDgp::new(
            DMatrix::from_column_slice(2, 1, &[-0.4, 0.15]),
            DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
            vec![],
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        let table = simulate(&dgp, 300, 8).unwrap();
        let fit = estimate_vecm(
            &table,
            VecmSpec {
                lags: 1,
                rank: 1,
                deterministic: VecmDeterministic::ConstantOnly,
            },
        )
        .unwrap();
        assert!(granger_short_run(&fit, "v0", "v1").is_err());
    }

    #[test]
    fn weak_exogeneity_requires_rank() {
        let fit = fitted(2, 1, 300, 3);
        let zero_rank = estimate_vecm(
            &crate::test_util::table_from_matrix(fit.data.clone()),
            VecmSpec {
                lags: 2,
                rank: 0,
                deterministic: VecmDeterministic::ConstantOnly,
            },
        )
        .unwrap();
        assert!(weak_exogeneity(&zero_rank, "v0").is_err());
        assert!(weak_exogeneity(&fit, "ghost").is_err());
    }
}
