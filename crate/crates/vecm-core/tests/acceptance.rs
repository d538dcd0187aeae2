//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`) and holding
//! its runtime budget.
//!
//! Criterion 10 depends on a reconstructed quarterly panel that is not
//! bundled; it is gated on `VECM_LAB_PAPER_DATA` (or `data/paper_panel.csv`
//! at the workspace root) and reports SKIP when the file is absent.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use vecm_core::dataset::{
    apply_transforms, first_difference, Deterministic, TimeSeriesTable, Transform, TransformSpec,
};
use vecm_core::diagnostics::{granger_short_run, stability, TestResult};
use vecm_core::johansen::{
    estimate_vecm, normalize_beta, select_rank, trace_test, VecmDeterministic, VecmFit, VecmSpec,
};
use vecm_core::rng::GaussianSource;
use vecm_core::structural::{
    bootstrap_bands, fevd, irf, levels_var_from_params, ma_matrices, BootstrapSettings, Ordering,
};
use vecm_core::synthetic::{random_walk, simulate, VecmDgp};
use vecm_core::unitroot::{adf_test, LagSelection};
use vecm_core::varbase::lag_order_table;

fn criterion<F>(number: usize, description: &str, budget: Duration, run: F)
where
    F: FnOnce() -> Result<(), String>,
{
    let start = Instant::now();
    let outcome = run();
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) if elapsed <= budget => {
            println!("acceptance {number}: PASS ({elapsed:.2?}) - {description}");
        }
        Ok(()) => {
            println!(
                "acceptance {number}: FAIL (over budget: {elapsed:.2?} > {budget:.2?}) - {description}"
            );
            panic!("criterion {number} exceeded its runtime budget");
        }
        Err(reason) => {
            println!("acceptance {number}: FAIL ({elapsed:.2?}) - {description}: {reason}");
            panic!("criterion {number} failed: {reason}");
        }
    }
}

fn check(condition: bool, reason: impl Fn() -> String) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(reason())
    }
}

fn synthetic_table(values: DMatrix<f64>) -> TimeSeriesTable {
    let t = values.nrows();
    let mut q: vecm_core::dataset::Quarter = "1900Q1".parse().unwrap();
    let mut dates = Vec::with_capacity(t);
    for _ in 0..t {
        dates.push(q);
        q = q.succ();
    }
    let names = (0..values.ncols()).map(|j| format!("v{j}")).collect();
    TimeSeriesTable::new(dates, names, values).unwrap()
}

#[test]
fn criterion_01_rank_selection_replays_published_trace_table() {
    criterion(
        1,
        "rank selector on the published statistics picks 4 at 5% and 3 at 1%",
        Duration::from_millis(1),
        || {
            let stats = [
                193.0178, 136.1557, 97.0854, 67.5869, 41.7409, 21.5913, 5.4194,
            ];
            let cv5 = [146.76, 114.90, 87.31, 62.99, 42.44, 25.32, 12.25];
            let cv1 = [158.49, 124.75, 96.58, 70.05, 48.45, 30.45, 16.26];
            check(select_rank(&stats, &cv5) == 4, || {
                format!("5% selection was {}", select_rank(&stats, &cv5))
            })?;
            check(select_rank(&stats, &cv1) == 3, || {
                format!("1% selection was {}", select_rank(&stats, &cv1))
            })
        },
    );
}

#[test]
fn criterion_02_chi_square_mapping_replays_published_p_values() {
    criterion(
        2,
        "chi-square survival maps the published (statistic, df) pairs to their p-values",
        Duration::from_millis(1),
        || {
            let cases = [(1.450, 2, 0.484), (12.443, 2, 0.002), (37.74, 49, 0.879)];
            for (stat, df, p) in cases {
                let got = TestResult::from_chi_square(stat, df).p_value;
                check((got - p).abs() <= 0.001, || {
                    format!("SF({stat}, {df}) = {got}, expected {p} +- 0.001")
                })?;
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_03_trace_test_rank_recovery_over_seeds() {
    criterion(
        3,
        "trace test recovers rank 1 for a cointegrated pair and rank 0 for independent walks in >= 90% of 200 seeds",
        Duration::from_secs(60),
        || {
            let t = 1_000;
            let seeds = 200;
            let dgp = VecmDgp::demo(2, 1).map_err(|e| e.to_string())?;
            let mut rank1_hits = 0;
            let mut rank0_hits = 0;
            for seed in 0..seeds {
                let table = simulate(&dgp, t, 10_000 + seed).map_err(|e| e.to_string())?;
                let res = trace_test(&table, 2, VecmDeterministic::RestrictedTrend)
                    .map_err(|e| e.to_string())?;
                if res.selected_rank_5pct == 1 {
                    rank1_hits += 1;
                }

                let mut rng = GaussianSource::from_seed(20_000 + seed);
                let mut values = DMatrix::<f64>::zeros(t, 2);
                let (mut a, mut b) = (0.0, 0.0);
                for i in 0..t {
                    a += rng.next_normal();
                    b += rng.next_normal();
                    values[(i, 0)] = a;
                    values[(i, 1)] = b;
                }
                let walks = synthetic_table(values);
                let res = trace_test(&walks, 2, VecmDeterministic::RestrictedTrend)
                    .map_err(|e| e.to_string())?;
                if res.selected_rank_5pct == 0 {
                    rank0_hits += 1;
                }
            }
            check(rank1_hits * 10 >= seeds * 9, || {
                format!("rank 1 recovered in only {rank1_hits}/{seeds} seeds")
            })?;
            check(rank0_hits * 10 >= seeds * 9, || {
                format!("rank 0 kept in only {rank0_hits}/{seeds} seeds")
            })
        },
    );
}

#[test]
fn criterion_04_estimator_consistency_at_large_t() {
    criterion(
        4,
        "K=3, r=1 VECM at T=5000: normalized beta and alpha within +-0.05 of truth; loglik/eigenvalue identity to 1e-6",
        Duration::from_secs(10),
        || {
            let dgp = VecmDgp::demo(3, 1).map_err(|e| e.to_string())?;
            let table = simulate(&dgp, 5_000, 4242).map_err(|e| e.to_string())?;
            let spec = VecmSpec {
                lags: 2,
                rank: 1,
                deterministic: VecmDeterministic::ConstantOnly,
            };
            let fit = estimate_vecm(&table, spec).map_err(|e| e.to_string())?;
            let fit = normalize_beta(&fit, &["v0".to_string()]).map_err(|e| e.to_string())?;

            // truth from the generating process, normalized the same way
            let beta_true = [1.0, 0.0, -1.0];
            let alpha_true = [-0.4, 0.0, 0.15];
            for (i, want) in beta_true.iter().enumerate() {
                let got = fit.beta[(i, 0)];
                check((got - want).abs() <= 0.05, || {
                    format!("beta[{i}] = {got}, truth {want}")
                })?;
            }
            for (i, want) in alpha_true.iter().enumerate() {
                let got = fit.alpha[(i, 0)];
                check((got - want).abs() <= 0.05, || {
                    format!("alpha[{i}] = {got}, truth {want}")
                })?;
            }

            let full = estimate_vecm(
                &table,
                VecmSpec {
                    lags: 2,
                    rank: 3,
                    deterministic: VecmDeterministic::ConstantOnly,
                },
            )
            .map_err(|e| e.to_string())?;
            let expected = 0.5
                * fit.t_eff as f64
                * full.eigenvalues[1..]
                    .iter()
                    .map(|l| (1.0 - l).ln())
                    .sum::<f64>();
            let diff = fit.loglik - full.loglik;
            check((diff - expected).abs() <= 1e-6, || {
                format!("identity residual {}", (diff - expected).abs())
            })
        },
    );
}

#[test]
fn criterion_05_irf_matches_matrix_powers_analytically() {
    criterion(
        5,
        "stationary VAR(1): orthogonalized IRF equals A^h * chol(Sigma) to 1e-10 at horizons 0..10",
        Duration::from_secs(10),
        || {
            let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.4]);
            let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
            let k = 2;
            let names: Vec<String> = (0..k).map(|j| format!("v{j}")).collect();
            let fit = VecmFit {
                spec: VecmSpec {
                    lags: 1,
                    rank: k,
                    deterministic: VecmDeterministic::ConstantOnly,
                },
                names: names.clone(),
                alpha: &a - DMatrix::<f64>::identity(k, k),
                beta: DMatrix::identity(k, k),
                gammas: vec![],
                intercept: DVector::zeros(k),
                residuals: DMatrix::zeros(20, k),
                sigma: sigma.clone(),
                loglik: 0.0,
                eigenvalues: vec![0.5; k],
                t_eff: 20,
                beta_se: None,
                normalization: None,
                data: DMatrix::zeros(21, k),
            };
            let ordering = Ordering::new(names.clone(), &names).map_err(|e| e.to_string())?;
            let out = irf(&fit, &ordering, 10).map_err(|e| e.to_string())?;
            let p = nalgebra::Cholesky::new(sigma).unwrap().l();
            check((&out.responses[0] - &p).abs().max() == 0.0, || {
                "horizon-0 response differs from the Cholesky factor".to_string()
            })?;
            let mut power = DMatrix::<f64>::identity(k, k);
            for h in 0..=10usize {
                let expected = &power * &p;
                let err = (&out.responses[h] - expected).abs().max();
                check(err <= 1e-10, || format!("horizon {h}: max error {err}"))?;
                power = &a * power;
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_06_fevd_shares_normalized_on_random_models() {
    criterion(
        6,
        "FEVD shares on 50 fitted models lie in [0,1] and sum to 1 per (response, step) within 1e-10",
        Duration::from_secs(60),
        || {
            let mut count = 0;
            let mut seed = 0u64;
            while count < 50 {
                let k = 1 + (seed as usize % 4);
                let r = (seed as usize / 4) % (k + 1);
                seed += 1;
                let dgp = match VecmDgp::demo(k, r) {
                    Ok(d) => d,
                    Err(_) => continue,
                };
                let table = simulate(&dgp, 250, 30_000 + seed).map_err(|e| e.to_string())?;
                let fit = estimate_vecm(
                    &table,
                    VecmSpec {
                        lags: 2,
                        rank: r,
                        deterministic: VecmDeterministic::ConstantOnly,
                    },
                )
                .map_err(|e| e.to_string())?;
                let ordering =
                    Ordering::new(fit.names.clone(), &fit.names).map_err(|e| e.to_string())?;
                let out = fevd(&fit, &ordering, 8).map_err(|e| e.to_string())?;
                for (s, share) in out.shares.iter().enumerate() {
                    for i in 0..k {
                        let mut total = 0.0;
                        for j in 0..k {
                            let v = share[(i, j)];
                            check((0.0..=1.0).contains(&v), || {
                                format!("share out of range at step {s}: {v}")
                            })?;
                            total += v;
                        }
                        check((total - 1.0).abs() <= 1e-10, || {
                            format!("row sum {total} at step {s} response {i}")
                        })?;
                    }
                }
                count += 1;
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_07_adf_size_on_simulated_random_walks() {
    criterion(
        7,
        "ADF rejection rate at the 5% level over 2000 random walks (T=200) within [3%, 7%]",
        Duration::from_secs(120),
        || {
            let reps = 2_000;
            let mut rejections = 0;
            for seed in 0..reps {
                let y = random_walk(200, 90_000 + seed, 0.0);
                let res = adf_test(&y, Deterministic::Constant, LagSelection::Auto)
                    .map_err(|e| e.to_string())?;
                if res.p_value < 0.05 {
                    rejections += 1;
                }
            }
            let rate = rejections as f64 / reps as f64;
            check((0.03..=0.07).contains(&rate), || {
                format!("rejection rate {rate}")
            })
        },
    );
}

#[test]
fn criterion_08_bootstrap_determinism_and_coverage() {
    criterion(
        8,
        "bootstrap bands: bit-identical under one seed; ~95% pointwise coverage of the true IRF within [88%, 99%] at horizons 1..4 over 200 draws",
        Duration::from_secs(600),
        || {
            let dgp = VecmDgp::demo(2, 1).map_err(|e| e.to_string())?;
            let spec = VecmSpec {
                lags: 2,
                rank: 1,
                deterministic: VecmDeterministic::ConstantOnly,
            };

            // determinism
            let table = simulate(&dgp, 200, 777).map_err(|e| e.to_string())?;
            let fit = estimate_vecm(&table, spec).map_err(|e| e.to_string())?;
            let ordering =
                Ordering::new(fit.names.clone(), &fit.names).map_err(|e| e.to_string())?;
            let settings = BootstrapSettings {
                replications: 150,
                level: 0.95,
                seed: 99,
            };
            let first = bootstrap_bands(&fit, &ordering, 4, settings).map_err(|e| e.to_string())?;
            let second =
                bootstrap_bands(&fit, &ordering, 4, settings).map_err(|e| e.to_string())?;
            for h in 0..=4usize {
                for i in 0..2 {
                    for j in 0..2 {
                        let (a, b) = (
                            first.lower.as_ref().unwrap()[h][(i, j)],
                            second.lower.as_ref().unwrap()[h][(i, j)],
                        );
                        check(a.to_bits() == b.to_bits(), || {
                            format!("lower band differs at h={h} ({a} vs {b})")
                        })?;
                        let (a, b) = (
                            first.upper.as_ref().unwrap()[h][(i, j)],
                            second.upper.as_ref().unwrap()[h][(i, j)],
                        );
                        check(a.to_bits() == b.to_bits(), || {
                            format!("upper band differs at h={h} ({a} vs {b})")
                        })?;
                    }
                }
            }

            // coverage of the true IRF
            let truth = {
                let a = levels_var_from_params(dgp.alpha(), dgp.beta(), dgp.gammas());
                let psi = ma_matrices(&a, 4);
                let chol = nalgebra::Cholesky::new(dgp.sigma().clone()).unwrap();
                psi.into_iter()
                    .map(|m| m * chol.l())
                    .collect::<Vec<DMatrix<f64>>>()
            };
            let outer = 200;
            let mut hits = vec![[[0usize; 2]; 2]; 5];
            for draw in 0..outer {
                let table = simulate(&dgp, 200, 50_000 + draw).map_err(|e| e.to_string())?;
                let fit = estimate_vecm(&table, spec).map_err(|e| e.to_string())?;
                let bands = bootstrap_bands(
                    &fit,
                    &ordering,
                    4,
                    BootstrapSettings {
                        replications: 400,
                        level: 0.95,
                        seed: 60_000 + draw,
                    },
                )
                .map_err(|e| e.to_string())?;
                for h in 1..=4usize {
                    for i in 0..2 {
                        for j in 0..2 {
                            let lo = bands.lower.as_ref().unwrap()[h][(i, j)];
                            let hi = bands.upper.as_ref().unwrap()[h][(i, j)];
                            let t = truth[h][(i, j)];
                            if lo <= t && t <= hi {
                                hits[h][i][j] += 1;
                            }
                        }
                    }
                }
            }
            for h in 1..=4usize {
                for i in 0..2 {
                    for j in 0..2 {
                        let rate = hits[h][i][j] as f64 / outer as f64;
                        check((0.88..=0.99).contains(&rate), || {
                            format!("coverage {rate} at h={h}, response {i}, shock {j}")
                        })?;
                    }
                }
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_09_stability_reports_k_minus_r_unit_moduli() {
    criterion(
        9,
        "fitted rank-r models report exactly K-r unit moduli within 1e-6 (including K=7, r=2)",
        Duration::from_secs(120),
        || {
            for (k, r) in [(2usize, 1usize), (3, 1), (4, 2), (5, 3), (7, 2)] {
                let dgp = VecmDgp::demo(k, r).map_err(|e| e.to_string())?;
                let table =
                    simulate(&dgp, 400, 70_000 + (10 * k + r) as u64).map_err(|e| e.to_string())?;
                let fit = estimate_vecm(
                    &table,
                    VecmSpec {
                        lags: 2,
                        rank: r,
                        deterministic: VecmDeterministic::ConstantOnly,
                    },
                )
                .map_err(|e| e.to_string())?;
                let report = stability(&fit).map_err(|e| e.to_string())?;
                check(report.unit_count == k - r, || {
                    format!(
                        "K={k}, r={r}: {} unit moduli (moduli {:?})",
                        report.unit_count, report.moduli
                    )
                })?;
            }
            Ok(())
        },
    );
}

/// Reconstructed-panel fixtures; skipped unless the optional data file is
/// present.
#[test]
fn criterion_10_reconstructed_panel_fixtures() {
    let path = std::env::var("VECM_LAB_PAPER_DATA").unwrap_or_else(|_| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/paper_panel.csv").to_string()
    });
    if !std::path::Path::new(&path).exists() {
        println!("acceptance 10: SKIP - reconstructed panel not present ({path})");
        return;
    }
    criterion(
        10,
        "reconstructed panel: lag choice, adjustment speed, relation-1 coefficients, CPI variance shares, Granger links",
        Duration::from_secs(600),
        || {
            let raw = TimeSeriesTable::load_csv(std::path::Path::new(&path), "date")
                .map_err(|e| e.to_string())?;
            let names = [
                "CPI",
                "M2",
                "Activity Level",
                "Interest Rate",
                "NEER",
                "Imports Prices",
                "Regulated Prices",
            ];
            let selected = raw
                .select(&names.iter().map(|s| s.to_string()).collect::<Vec<_>>())
                .map_err(|e| e.to_string())?;
            let mut spec = TransformSpec::new();
            for name in names {
                let transform = if name == "Interest Rate" {
                    Transform::Level
                } else {
                    Transform::Log
                };
                spec.set(name, transform, Deterministic::ConstantTrend);
            }
            let table = apply_transforms(&selected, &spec).map_err(|e| e.to_string())?;

            // unit roots: every variable I(1) at 5%
            for name in names {
                let series: Vec<f64> = table
                    .column(name)
                    .map_err(|e| e.to_string())?
                    .iter()
                    .copied()
                    .collect();
                let det = if matches!(name, "Interest Rate" | "Imports Prices") {
                    Deterministic::Constant
                } else {
                    Deterministic::ConstantTrend
                };
                let level = adf_test(&series, det, LagSelection::Auto).map_err(|e| e.to_string())?;
                let diff = adf_test(
                    &first_difference(&series).map_err(|e| e.to_string())?,
                    det,
                    LagSelection::Auto,
                )
                .map_err(|e| e.to_string())?;
                check(level.p_value >= 0.05 && diff.p_value < 0.05, || {
                    format!(
                        "{name}: level p {} / diff p {} not I(1)",
                        level.p_value, diff.p_value
                    )
                })?;
            }

            // lag selection
            let lag_table = lag_order_table(&table, 8, Deterministic::ConstantTrend)
                .map_err(|e| e.to_string())?;
            check(lag_table.best_schwarz == 2, || {
                format!("Schwarz selected {}", lag_table.best_schwarz)
            })?;

            // fit with l = 2, r = 2, restricted trend; normalize on CPI, M2
            let fit = estimate_vecm(
                &table,
                VecmSpec {
                    lags: 2,
                    rank: 2,
                    deterministic: VecmDeterministic::RestrictedTrend,
                },
            )
            .map_err(|e| e.to_string())?;
            let fit = normalize_beta(&fit, &["CPI".to_string(), "M2".to_string()])
                .map_err(|e| e.to_string())?;

            let cpi = 0;
            let alpha_cpi = fit.alpha[(cpi, 0)].abs();
            check((alpha_cpi - 0.072).abs() <= 0.02, || {
                format!("CPI adjustment coefficient {alpha_cpi}")
            })?;

            let activity = 2;
            let interest = 3;
            let b_activity = fit.beta[(activity, 0)];
            let b_interest = fit.beta[(interest, 0)];
            check((b_activity - 1.881).abs() <= 0.5, || {
                format!("Activity Level coefficient {b_activity}")
            })?;
            check((b_interest + 3.902).abs() <= 0.5, || {
                format!("Interest Rate coefficient {b_interest}")
            })?;

            // CPI own variance shares across the four orderings
            let orderings: [Vec<&str>; 4] = [
                vec![
                    "Imports Prices",
                    "M2",
                    "Interest Rate",
                    "Activity Level",
                    "NEER",
                    "Regulated Prices",
                    "CPI",
                ],
                vec![
                    "Imports Prices",
                    "M2",
                    "Interest Rate",
                    "NEER",
                    "Activity Level",
                    "Regulated Prices",
                    "CPI",
                ],
                vec![
                    "Imports Prices",
                    "NEER",
                    "Regulated Prices",
                    "CPI",
                    "Activity Level",
                    "M2",
                    "Interest Rate",
                ],
                vec![
                    "Imports Prices",
                    "NEER",
                    "Activity Level",
                    "Regulated Prices",
                    "M2",
                    "Interest Rate",
                    "CPI",
                ],
            ];
            for names_in_order in &orderings {
                let ordering = Ordering::new(
                    names_in_order.iter().map(|s| s.to_string()).collect(),
                    &fit.names,
                )
                .map_err(|e| e.to_string())?;
                let out = fevd(&fit, &ordering, 6).map_err(|e| e.to_string())?;
                let own_first = out.shares[0][(cpi, cpi)];
                let own_sixth = out.shares[5][(cpi, cpi)];
                check((0.50..=0.58).contains(&own_first), || {
                    format!("CPI own share at step 1: {own_first}")
                })?;
                check((0.16..=0.28).contains(&own_sixth), || {
                    format!("CPI own share at step 6: {own_sixth}")
                })?;
            }

            // short-run Granger links into CPI
            let interest_to_cpi =
                granger_short_run(&fit, "Interest Rate", "CPI").map_err(|e| e.to_string())?;
            let neer_to_cpi =
                granger_short_run(&fit, "NEER", "CPI").map_err(|e| e.to_string())?;
            check(interest_to_cpi.p_value < 0.05, || {
                format!("Interest Rate -> CPI p {}", interest_to_cpi.p_value)
            })?;
            check(neer_to_cpi.p_value < 0.05, || {
                format!("NEER -> CPI p {}", neer_to_cpi.p_value)
            })
        },
    );
}
