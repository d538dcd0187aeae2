//! Orthogonalized impulse responses, variance decompositions, and
//! residual-bootstrap confidence bands for a fitted VECM.
//!
//! Shocks are identified recursively: a Cholesky factorization of the
//! residual covariance under a chosen variable ordering (most exogenous
//! first). Because the system is I(1), responses need not die out.

use nalgebra::{DMatrix, DVector};

use crate::johansen::{self, VecmFit};
use crate::linalg;
use crate::rng::GaussianSource;
use crate::{Error, Result};

/// A permutation of the variable names, most exogenous first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ordering {
    names: Vec<String>,
}

impl Ordering {
    /// Validate that `names` is a true permutation of `variables`.
    pub fn new(names: Vec<String>, variables: &[String]) -> Result<Self> {
        if names.len() != variables.len() {
            return Err(Error::BadOrdering {
                name: format!("{} of {} variables", names.len(), variables.len()),
            });
        }
        for name in &names {
            if !variables.contains(name) {
                return Err(Error::BadOrdering { name: name.clone() });
            }
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::BadOrdering { name: name.clone() });
            }
        }
        Ok(Self { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `positions[j]` = place of variable j (natural index) in the ordering.
    fn positions(&self, variables: &[String]) -> Vec<usize> {
        variables
            .iter()
            .map(|v| self.names.iter().position(|n| n == v).unwrap())
            .collect()
    }
}

/// Levels-VAR coefficient matrices A_1..A_l implied by VECM parameters:
/// A_1 = I + alpha beta_y' + Gamma_1, A_i = Gamma_i - Gamma_{i-1},
/// A_l = -Gamma_{l-1}.
pub fn levels_var_from_params(
    alpha: &DMatrix<f64>,
    beta_vars: &DMatrix<f64>,
    gammas: &[DMatrix<f64>],
) -> Vec<DMatrix<f64>> {
    let k = alpha.nrows();
    let l = gammas.len() + 1;
    let pi = alpha * beta_vars.transpose();
    let eye = DMatrix::<f64>::identity(k, k);
    let mut out = Vec::with_capacity(l);
    if l == 1 {
        out.push(&eye + pi);
        return out;
    }
    out.push(&eye + &pi + &gammas[0]);
    for i in 1..l - 1 {
        out.push(&gammas[i] - &gammas[i - 1]);
    }
    out.push(-&gammas[l - 2]);
    out
}

/// Levels-VAR matrices of a fitted VECM.
pub fn vecm_to_var(fit: &VecmFit) -> Vec<DMatrix<f64>> {
    levels_var_from_params(&fit.alpha, &fit.beta_vars(), &fit.gammas)
}

/// Moving-average matrices Psi_0..Psi_h of a levels VAR.
pub fn ma_matrices(a: &[DMatrix<f64>], horizon: usize) -> Vec<DMatrix<f64>> {
    let k = a[0].nrows();
    let mut psi = Vec::with_capacity(horizon + 1);
    psi.push(DMatrix::<f64>::identity(k, k));
    for h in 1..=horizon {
        let mut m = DMatrix::<f64>::zeros(k, k);
        for (i, a_i) in a.iter().enumerate().take(h.min(a.len())) {
            m += a_i * &psi[h - 1 - i];
        }
        psi.push(m);
    }
    psi
}

/// Impulse responses at horizons 0..=H.
#[derive(Debug, Clone)]
pub struct IrfResult {
    pub horizon: usize,
    pub ordering: Ordering,
    /// `responses[h][(i, j)]`: response of variable i, h quarters after a
    /// one-standard-deviation orthogonal shock to variable j (natural
    /// variable indexing; the ordering only enters the identification).
    pub responses: Vec<DMatrix<f64>>,
    /// Bootstrap band, same layout, present after [`bootstrap_bands`].
    pub lower: Option<Vec<DMatrix<f64>>>,
    pub upper: Option<Vec<DMatrix<f64>>>,
    /// Confidence level of the bands.
    pub level: Option<f64>,
    /// Replications dropped by the bootstrap for estimation failures.
    pub failed_replications: usize,
}

/// Forecast-error variance shares at forecast steps 1..=H.
#[derive(Debug, Clone)]
pub struct FevdResult {
    pub steps: usize,
    pub ordering: Ordering,
    /// `shares[s-1][(i, j)]`: share of variable i's s-step-ahead forecast
    /// error variance attributed to orthogonal shocks in variable j.
    pub shares: Vec<DMatrix<f64>>,
}

/// Cholesky impact matrix in natural variable indexing: column j is the
/// period-0 impact of a one-standard-deviation orthogonal shock to j.
fn impact_matrix(sigma: &DMatrix<f64>, positions: &[usize]) -> Result<DMatrix<f64>> {
    let k = sigma.nrows();
    let permuted = DMatrix::from_fn(k, k, |a, b| {
        let (ia, ib) = (natural_of(positions, a), natural_of(positions, b));
        sigma[(ia, ib)]
    });
    let chol = nalgebra::Cholesky::new(permuted).ok_or_else(|| {
        let min_eig = sigma
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(*v));
        Error::Singular {
            what: format!("residual covariance (smallest eigenvalue {min_eig:.3e})"),
        }
    })?;
    let l = chol.l();
    Ok(DMatrix::from_fn(k, k, |i, j| {
        l[(positions[i], positions[j])]
    }))
}

fn natural_of(positions: &[usize], place: usize) -> usize {
    positions.iter().position(|p| *p == place).unwrap()
}

fn orthogonal_responses(
    a: &[DMatrix<f64>],
    sigma: &DMatrix<f64>,
    positions: &[usize],
    horizon: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let p = impact_matrix(sigma, positions)?;
    Ok(ma_matrices(a, horizon)
        .into_iter()
        .map(|psi| psi * &p)
        .collect())
}

/// Orthogonalized impulse responses of a fitted VECM under `ordering`.
pub fn irf(fit: &VecmFit, ordering: &Ordering, horizon: usize) -> Result<IrfResult> {
    let ordering = Ordering::new(ordering.names().to_vec(), &fit.names)?;
    let positions = ordering.positions(&fit.names);
    let a = vecm_to_var(fit);
    let responses = orthogonal_responses(&a, &fit.sigma, &positions, horizon)?;
    Ok(IrfResult {
        horizon,
        ordering,
        responses,
        lower: None,
        upper: None,
        level: None,
        failed_replications: 0,
    })
}

/// Forecast-error variance decomposition under `ordering`, steps 1..=H.
pub fn fevd(fit: &VecmFit, ordering: &Ordering, steps: usize) -> Result<FevdResult> {
    if steps == 0 {
        return Err(Error::InvalidParameter {
            what: "FEVD needs at least one forecast step".to_string(),
        });
    }
    let ordering = Ordering::new(ordering.names().to_vec(), &fit.names)?;
    let positions = ordering.positions(&fit.names);
    let a = vecm_to_var(fit);
    let theta = orthogonal_responses(&a, &fit.sigma, &positions, steps - 1)?;
    let k = fit.k();
    let mut cumulative = DMatrix::<f64>::zeros(k, k);
    let mut shares = Vec::with_capacity(steps);
    for theta_h in theta.iter().take(steps) {
        for i in 0..k {
            for j in 0..k {
                cumulative[(i, j)] += theta_h[(i, j)] * theta_h[(i, j)];
            }
        }
        let mut share = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            let total: f64 = cumulative.row(i).sum();
            for j in 0..k {
                share[(i, j)] = cumulative[(i, j)] / total;
            }
        }
        shares.push(share);
    }
    Ok(FevdResult {
        steps,
        ordering,
        shares,
    })
}

/// Bootstrap configuration.
#[derive(Debug, Clone, Copy)]
pub struct BootstrapSettings {
    pub replications: usize,
    /// Band coverage, e.g. 0.95.
    pub level: f64,
    pub seed: u64,
}

/// Recursive residual bootstrap for IRF confidence bands.
///
/// Each replication resamples the centered fitted residuals with
/// replacement, regenerates a levels path from the fitted VECM (observed
/// presample held fixed), re-estimates the same specification, and recomputes
/// the orthogonalized responses. Bands are pointwise percentile intervals.
/// Replication i draws from substream i+1 of the master seed, so output is
/// independent of execution order and identical across runs.
pub fn bootstrap_bands(
    fit: &VecmFit,
    ordering: &Ordering,
    horizon: usize,
    settings: BootstrapSettings,
) -> Result<IrfResult> {
    if settings.replications < 100 {
        return Err(Error::InvalidParameter {
            what: format!("need at least 100 replications, got {}", settings.replications),
        });
    }
    if !(settings.level > 0.0 && settings.level < 1.0) {
        return Err(Error::InvalidParameter {
            what: format!("confidence level {} outside (0, 1)", settings.level),
        });
    }
    let mut point = irf(fit, ordering, horizon)?;
    let positions = point.ordering.positions(&fit.names);
    let k = fit.k();
    let t_eff = fit.t_eff;

    // center the residuals before resampling
    let mut centered = fit.residuals.clone();
    for j in 0..k {
        let mean = centered.column(j).sum() / t_eff as f64;
        for i in 0..t_eff {
            centered[(i, j)] -= mean;
        }
    }

    let mut draws: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(settings.replications);
    let mut failed = 0usize;
    for rep in 0..settings.replications {
        let mut rng = GaussianSource::from_seed_stream(settings.seed, rep as u64 + 1);
        let data = regenerate_levels(fit, &centered, &mut rng);
        match replicate_responses(fit, &data, &positions, horizon) {
            Ok(responses) => draws.push(responses),
            Err(_) => failed += 1,
        }
    }
    if failed * 20 > settings.replications {
        return Err(Error::BootstrapFailures {
            failed,
            total: settings.replications,
        });
    }

    let lo_q = (1.0 - settings.level) / 2.0;
    let hi_q = 1.0 - lo_q;
    let mut lower = Vec::with_capacity(horizon + 1);
    let mut upper = Vec::with_capacity(horizon + 1);
    let mut cell = Vec::with_capacity(draws.len());
    for h in 0..=horizon {
        let mut lo = DMatrix::<f64>::zeros(k, k);
        let mut hi = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                cell.clear();
                cell.extend(draws.iter().map(|d| d[h][(i, j)]));
                cell.sort_by(|a, b| a.total_cmp(b));
                let point_value = point.responses[h][(i, j)];
                // percentile bands, widened if needed so they always bracket
                // the point estimate
                lo[(i, j)] = linalg::percentile_sorted(&cell, lo_q).min(point_value);
                hi[(i, j)] = linalg::percentile_sorted(&cell, hi_q).max(point_value);
            }
        }
        lower.push(lo);
        upper.push(hi);
    }

    point.lower = Some(lower);
    point.upper = Some(upper);
    point.level = Some(settings.level);
    point.failed_replications = failed;
    Ok(point)
}

/// Simulate a levels path from the fitted VECM with resampled residuals;
/// the first `l` observed rows stay fixed as initial values.
fn regenerate_levels(
    fit: &VecmFit,
    centered_residuals: &DMatrix<f64>,
    rng: &mut GaussianSource,
) -> DMatrix<f64> {
    let l = fit.spec.lags;
    let k = fit.k();
    let t = fit.data.nrows();
    let t_eff = fit.t_eff;
    let beta_vars = fit.beta_vars();
    let beta_trend = fit.beta_trend();

    let mut data = DMatrix::<f64>::zeros(t, k);
    data.view_mut((0, 0), (l, k))
        .copy_from(&fit.data.view((0, 0), (l, k)));

    let mut level = DVector::from_fn(k, |j, _| data[(l - 1, j)]);
    for row in 0..t_eff {
        let t_idx = l + row;
        let mut delta = fit.intercept.clone();
        if fit.rank() > 0 {
            let mut v = beta_vars.transpose() * &level;
            if let Some(trend) = &beta_trend {
                v += trend * (row + 1) as f64;
            }
            delta += &fit.alpha * v;
        }
        for (i, gamma) in fit.gammas.iter().enumerate() {
            let lag = i + 1;
            let prev = DVector::from_fn(k, |j, _| data[(t_idx - lag, j)] - data[(t_idx - lag - 1, j)]);
            delta += gamma * prev;
        }
        let draw = rng.next_index(t_eff);
        for j in 0..k {
            delta[j] += centered_residuals[(draw, j)];
        }
        level += &delta;
        for j in 0..k {
            data[(t_idx, j)] = level[j];
        }
    }
    data
}

fn replicate_responses(
    fit: &VecmFit,
    data: &DMatrix<f64>,
    positions: &[usize],
    horizon: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let frame = johansen::build_frame(data, fit.spec.lags, fit.spec.deterministic)?;
    let eigen = johansen::solve_eigen(&frame)?;
    let refit = johansen::estimate_with_frame(data, &fit.names, fit.spec, &frame, &eigen)?;
    let a = vecm_to_var(&refit);
    orthogonal_responses(&a, &refit.sigma, positions, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::johansen::{estimate_vecm, VecmDeterministic, VecmSpec};
    use crate::rng::GaussianSource;
    use crate::synthetic::{simulate, VecmDgp};

    fn demo_fit(t: usize, seed: u64) -> VecmFit {
        let dgp = VecmDgp::demo(2, 1).unwrap();
        let table = simulate(&dgp, t, seed).unwrap();
        estimate_vecm(
            &table,
            VecmSpec {
                lags: 2,
                rank: 1,
                deterministic: VecmDeterministic::ConstantOnly,
            },
        )
        .unwrap()
    }

    fn natural_ordering(fit: &VecmFit) -> Ordering {
        Ordering::new(fit.names.to_vec(), &fit.names).unwrap()
    }

    /// Hand-built stationary VAR(1) expressed as a full-rank VECM.
    fn var1_as_fit(a: DMatrix<f64>, sigma: DMatrix<f64>) -> VecmFit {
        let k = a.nrows();
        let names: Vec<String> = (0..k).map(|j| format!("v{j}")).collect();
        VecmFit {
            spec: VecmSpec {
                lags: 1,
                rank: k,
                deterministic: VecmDeterministic::ConstantOnly,
            },
            names,
            alpha: &a - DMatrix::<f64>::identity(k, k),
            beta: DMatrix::identity(k, k),
            gammas: vec![],
            intercept: DVector::zeros(k),
            residuals: DMatrix::zeros(20, k),
            sigma,
            loglik: 0.0,
            eigenvalues: vec![0.5; k],
            t_eff: 20,
            beta_se: None,
            normalization: None,
            data: DMatrix::zeros(21, k),
        }
    }

    #[test]
    fn ordering_validation() {
        let vars: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert!(Ordering::new(vec!["c".into(), "a".into(), "b".into()], &vars).is_ok());
        assert!(Ordering::new(vec!["a".into(), "b".into()], &vars).is_err());
        assert!(Ordering::new(vec!["a".into(), "a".into(), "b".into()], &vars).is_err());
        assert!(Ordering::new(vec!["a".into(), "b".into(), "z".into()], &vars).is_err());
    }

    #[test]
    fn scalar_conversion_case() {
        // l=1, K=1, alpha=-0.5, beta=1 -> A_1 = 0.5
        let alpha = DMatrix::from_element(1, 1, -0.5);
        let beta = DMatrix::from_element(1, 1, 1.0);
        let a = levels_var_from_params(&alpha, &beta, &[]);
        assert_eq!(a.len(), 1);
        assert!((a[0][(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn conversion_round_trips_parameters() {
        let mut src = GaussianSource::from_seed(31);
        for l in 1..=4usize {
            let k = 3;
            let alpha = DMatrix::from_fn(k, 1, |_, _| 0.3 * src.next_normal());
            let beta = DMatrix::from_fn(k, 1, |_, _| src.next_normal());
            let gammas: Vec<DMatrix<f64>> = (1..l)
                .map(|_| DMatrix::from_fn(k, k, |_, _| 0.2 * src.next_normal()))
                .collect();
            let a = levels_var_from_params(&alpha, &beta, &gammas);
            assert_eq!(a.len(), l);

            // reconstruct Pi and Gamma from the A matrices
            let mut pi = -DMatrix::<f64>::identity(k, k);
            for a_i in &a {
                pi += a_i;
            }
            assert!(((&alpha * beta.transpose()) - pi).abs().max() < 1e-12);
            if l >= 2 {
                let mut gamma = vec![DMatrix::<f64>::zeros(k, k); l - 1];
                gamma[l - 2] = -a[l - 1].clone();
                for i in (1..l - 1).rev() {
                    gamma[i - 1] = &gamma[i] - &a[i];
                }
                for (g_true, g_back) in gammas.iter().zip(&gamma) {
                    assert!((g_true - g_back).abs().max() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rank_zero_fit_keeps_unit_roots() {
        let dgp = VecmDgp::demo(2, 0).unwrap();
        let table = simulate(&dgp, 400, 17).unwrap();
        let fit = estimate_vecm(
            &table,
            VecmSpec {
                lags: 2,
                rank: 0,
                deterministic: VecmDeterministic::ConstantOnly,
            },
        )
        .unwrap();
        let a = vecm_to_var(&fit);
        let moduli = crate::varbase::companion_moduli(&a).unwrap();
        assert_eq!(moduli.iter().filter(|m| (**m - 1.0).abs() < 1e-10).count(), 2);
    }

    #[test]
    fn horizon_zero_is_cholesky_factor() {
        let fit = demo_fit(300, 2);
        let ordering = natural_ordering(&fit);
        let out = irf(&fit, &ordering, 4).unwrap();
        let chol = nalgebra::Cholesky::new(fit.sigma.clone()).unwrap();
        assert!((&out.responses[0] - chol.l()).abs().max() < 1e-12);
    }

    #[test]
    fn stationary_var1_matches_matrix_powers() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.4]);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let fit = var1_as_fit(a.clone(), sigma.clone());
        let ordering = natural_ordering(&fit);
        let out = irf(&fit, &ordering, 10).unwrap();
        let p = nalgebra::Cholesky::new(sigma).unwrap().l();
        let mut power = DMatrix::<f64>::identity(2, 2);
        for h in 0..=10 {
            let expected = &power * &p;
            assert!(
                (&out.responses[h] - expected).abs().max() < 1e-10,
                "mismatch at horizon {h}"
            );
            power = &a * power;
        }
    }

    #[test]
    fn first_ordered_variables_own_impact_is_its_sd() {
        let fit = demo_fit(400, 5);
        for names in [["v0", "v1"], ["v1", "v0"]] {
            let ordering = Ordering::new(
                names.iter().map(|s| s.to_string()).collect(),
                &fit.names,
            )
            .unwrap();
            let out = irf(&fit, &ordering, 0).unwrap();
            let first = fit.names.iter().position(|n| n == names[0]).unwrap();
            let sd = fit.sigma[(first, first)].sqrt();
            assert!((out.responses[0][(first, first)] - sd).abs() < 1e-12);
        }
    }

    #[test]
    fn fevd_shares_sum_to_one_and_stay_in_unit_interval() {
        let fit = demo_fit(500, 6);
        let ordering = natural_ordering(&fit);
        let out = fevd(&fit, &ordering, 8).unwrap();
        assert_eq!(out.shares.len(), 8);
        for share in &out.shares {
            for i in 0..2 {
                let total: f64 = share.row(i).sum();
                assert!((total - 1.0).abs() < 1e-10);
                for j in 0..2 {
                    assert!((0.0..=1.0).contains(&share[(i, j)]));
                }
            }
        }
    }

    #[test]
    fn decoupled_system_has_unit_own_shares() {
        let a = DMatrix::from_row_slice(2, 2, &[0.6, 0.0, 0.0, 0.3]);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let fit = var1_as_fit(a, sigma);
        let ordering = natural_ordering(&fit);
        let out = fevd(&fit, &ordering, 6).unwrap();
        for share in &out.shares {
            assert!((share[(0, 0)] - 1.0).abs() < 1e-12);
            assert!((share[(1, 1)] - 1.0).abs() < 1e-12);
            assert!(share[(0, 1)].abs() < 1e-12);
            assert!(share[(1, 0)].abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_consistency() {
        // relabeling the variables and permuting the ordering identically
        // leaves every response unchanged
        let dgp = VecmDgp::demo(3, 1).unwrap();
        let table = simulate(&dgp, 400, 9).unwrap();
        let spec = VecmSpec {
            lags: 2,
            rank: 1,
            deterministic: VecmDeterministic::ConstantOnly,
        };
        let fit = estimate_vecm(&table, spec).unwrap();
        let ordering = Ordering::new(
            vec!["v2".into(), "v0".into(), "v1".into()],
            &fit.names,
        )
        .unwrap();
        let base = irf(&fit, &ordering, 4).unwrap();

        let permuted_table = table.select(&["v2".into(), "v0".into(), "v1".into()]).unwrap();
        let fit_p = estimate_vecm(&permuted_table, spec).unwrap();
        let ordering_p = Ordering::new(
            vec!["v2".into(), "v0".into(), "v1".into()],
            &fit_p.names,
        )
        .unwrap();
        let permuted = irf(&fit_p, &ordering_p, 4).unwrap();

        // map natural indices: permuted table column c holds original variable perm[c]
        let perm = [2usize, 0, 1];
        for h in 0..=4 {
            for i in 0..3 {
                for j in 0..3 {
                    let a = base.responses[h][(perm[i], perm[j])];
                    let b = permuted.responses[h][(i, j)];
                    assert!(
                        (a - b).abs() < 1e-6,
                        "h={h} i={i} j={j}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn bootstrap_is_deterministic_and_brackets_point() {
        let fit = demo_fit(200, 11);
        let ordering = natural_ordering(&fit);
        let settings = BootstrapSettings {
            replications: 120,
            level: 0.9,
            seed: 77,
        };
        let a = bootstrap_bands(&fit, &ordering, 5, settings).unwrap();
        let b = bootstrap_bands(&fit, &ordering, 5, settings).unwrap();
        for h in 0..=5 {
            let (la, ua) = (&a.lower.as_ref().unwrap()[h], &a.upper.as_ref().unwrap()[h]);
            let (lb, ub) = (&b.lower.as_ref().unwrap()[h], &b.upper.as_ref().unwrap()[h]);
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(la[(i, j)].to_bits(), lb[(i, j)].to_bits());
                    assert_eq!(ua[(i, j)].to_bits(), ub[(i, j)].to_bits());
                    assert!(la[(i, j)] <= a.responses[h][(i, j)]);
                    assert!(ua[(i, j)] >= a.responses[h][(i, j)]);
                }
            }
        }
    }

    #[test]
    fn bootstrap_rejects_bad_settings() {
        let fit = demo_fit(200, 12);
        let ordering = natural_ordering(&fit);
        assert!(bootstrap_bands(
            &fit,
            &ordering,
            4,
            BootstrapSettings {
                replications: 50,
                level: 0.95,
                seed: 1
            }
        )
        .is_err());
        assert!(bootstrap_bands(
            &fit,
            &ordering,
            4,
            BootstrapSettings {
                replications: 100,
                level: 1.5,
                seed: 1
            }
        )
        .is_err());
    }
}
