//! Seeded generation of VAR/VECM processes.
//!
//! These generators are the brute-force oracle for every estimator and test
//! in the crate: they produce data whose population parameters are known
//! exactly, so estimator output can be checked against the construction.
//! Everything is a pure function of (process, length, seed); see [`crate::rng`]
//! for the fixed generator algorithm.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Quarter, TimeSeriesTable};
use crate::rng::GaussianSource;
use crate::structural::levels_var_from_params;
use crate::varbase::companion_moduli;
use crate::{Error, Result};

/// Tolerance separating the unit moduli implied by the rank restriction
/// from genuinely stable roots.
const UNIT_TOL: f64 = 1e-6;

/// A fully specified error-correction process.
///
/// Construction validates the shape and the companion roots: a K-variable,
/// rank-r process must carry exactly K-r unit moduli, all other roots
/// strictly inside the unit circle, and a symmetric positive semidefinite
/// innovation covariance.
#[derive(Debug, Clone)]
pub struct VecmDgp {
    alpha: DMatrix<f64>,
    beta: DMatrix<f64>,
    gammas: Vec<DMatrix<f64>>,
    sigma: DMatrix<f64>,
    intercept: DVector<f64>,
    initial: DMatrix<f64>,
    /// Symmetric square root of sigma, cached for sampling.
    sigma_factor: DMatrix<f64>,
}

impl VecmDgp {
    pub fn new(
        alpha: DMatrix<f64>,
        beta: DMatrix<f64>,
        gammas: Vec<DMatrix<f64>>,
        sigma: DMatrix<f64>,
        intercept: DVector<f64>,
        initial: DMatrix<f64>,
    ) -> Result<Self> {
        let k = sigma.nrows();
        let r = alpha.ncols();
        let l = gammas.len() + 1;
        if alpha.nrows() != k || beta.nrows() != k || beta.ncols() != r || r > k {
            return Err(Error::InvalidDgp {
                what: format!(
                    "shape mismatch: alpha {}x{}, beta {}x{}, K={k}",
                    alpha.nrows(),
                    alpha.ncols(),
                    beta.nrows(),
                    beta.ncols()
                ),
            });
        }
        if gammas.iter().any(|g| g.nrows() != k || g.ncols() != k) {
            return Err(Error::InvalidDgp {
                what: "short-run matrices must be K x K".to_string(),
            });
        }
        if sigma.ncols() != k || (&sigma - sigma.transpose()).abs().max() > 1e-12 {
            return Err(Error::InvalidDgp {
                what: "innovation covariance must be symmetric K x K".to_string(),
            });
        }
        if intercept.len() != k || initial.nrows() != l || initial.ncols() != k {
            return Err(Error::InvalidDgp {
                what: format!("intercept must be K-vector and initial values {l} x {k}"),
            });
        }

        // positive semidefinite factor via the symmetric eigendecomposition
        // (a singular covariance is legal: it gives a deterministic process)
        let eig = sigma.clone().symmetric_eigen();
        let scale = eig.eigenvalues.amax().max(1.0);
        let mut factor = DMatrix::<f64>::zeros(k, k);
        for (i, lambda) in eig.eigenvalues.iter().enumerate() {
            if *lambda < -1e-10 * scale {
                return Err(Error::InvalidDgp {
                    what: format!("innovation covariance has negative eigenvalue {lambda}"),
                });
            }
            let root = lambda.max(0.0).sqrt();
            let col = eig.eigenvectors.column(i) * root;
            for row in 0..k {
                factor[(row, i)] = col[row];
            }
        }
        let sigma_factor = &factor * eig.eigenvectors.transpose();

        let moduli = companion_moduli(&levels_var_from_params(&alpha, &beta, &gammas))?;
        let units = moduli.iter().filter(|m| (**m - 1.0).abs() <= UNIT_TOL).count();
        if units != k - r {
            return Err(Error::InvalidDgp {
                what: format!(
                    "companion matrix has {units} unit moduli, expected K-r = {} (moduli {moduli:?})",
                    k - r
                ),
            });
        }
        if moduli.iter().any(|m| *m > 1.0 + UNIT_TOL)
            || moduli
                .iter()
                .filter(|m| (**m - 1.0).abs() > UNIT_TOL)
                .any(|m| *m >= 1.0 - UNIT_TOL)
        {
            return Err(Error::InvalidDgp {
                what: format!("non-unit companion roots not strictly stable: {moduli:?}"),
            });
        }

        Ok(Self {
            alpha,
            beta,
            gammas,
            sigma,
            intercept,
            initial,
            sigma_factor,
        })
    }

    /// A stable demonstration process for a given dimension and rank:
    /// relations `y_i - y_K` with two-sided adjustment and one mild
    /// short-run lag.
    pub fn demo(k: usize, r: usize) -> Result<Self> {
        if k == 0 || r > k {
            return Err(Error::InvalidDgp {
                what: format!("demo process needs 0 < K and r <= K, got K={k}, r={r}"),
            });
        }
        let mut alpha = DMatrix::<f64>::zeros(k, r);
        let mut beta = DMatrix::<f64>::zeros(k, r);
        for c in 0..r {
            beta[(c, c)] = 1.0;
            if r < k {
                beta[(k - 1, c)] = -1.0;
            }
            alpha[(c, c)] = -0.4;
            if r < k {
                alpha[(k - 1, c)] = 0.15;
            }
        }
        let gammas = vec![DMatrix::<f64>::identity(k, k) * 0.2];
        let sigma = DMatrix::<f64>::identity(k, k);
        Self::new(
            alpha,
            beta,
            gammas,
            sigma,
            DVector::zeros(k),
            DMatrix::zeros(2, k),
        )
    }

    pub fn k(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn rank(&self) -> usize {
        self.alpha.ncols()
    }

    pub fn lags(&self) -> usize {
        self.gammas.len() + 1
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn gammas(&self) -> &[DMatrix<f64>] {
        &self.gammas
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
}

/// Default burn-in, in multiples of the lag order.
const BURN_IN_FACTOR: usize = 10;

/// Iterate the process forward from its initial values with seeded Gaussian
/// innovations, discarding a burn-in of `10 * l` periods. Deterministic
/// given `(dgp, t, seed)`.
pub fn simulate(dgp: &VecmDgp, t: usize, seed: u64) -> Result<TimeSeriesTable> {
    simulate_with_burn_in(dgp, t, seed, BURN_IN_FACTOR * dgp.lags())
}

/// [`simulate`] with an explicit burn-in length.
pub fn simulate_with_burn_in(
    dgp: &VecmDgp,
    t: usize,
    seed: u64,
    burn_in: usize,
) -> Result<TimeSeriesTable> {
    let l = dgp.lags();
    let k = dgp.k();
    if t < l + 1 {
        return Err(Error::TooShort {
            needed: l + 1,
            got: t,
        });
    }
    let mut rng = GaussianSource::from_seed(seed);
    let total = l + burn_in + t;
    let mut levels = DMatrix::<f64>::zeros(total, k);
    levels
        .view_mut((0, 0), (l, k))
        .copy_from(&dgp.initial);

    let mut z = DVector::<f64>::zeros(k);
    for t_idx in l..total {
        let mut delta = dgp.intercept.clone();
        if dgp.rank() > 0 {
            let prev = levels.row(t_idx - 1).transpose();
            delta += &dgp.alpha * (dgp.beta.transpose() * prev);
        }
        for (i, gamma) in dgp.gammas.iter().enumerate() {
            let lag = i + 1;
            let diff = (levels.row(t_idx - lag) - levels.row(t_idx - lag - 1)).transpose();
            delta += gamma * diff;
        }
        for j in 0..k {
            z[j] = rng.next_normal();
        }
        delta += &dgp.sigma_factor * &z;
        let prev = levels.row(t_idx - 1).into_owned();
        let mut row = levels.row_mut(t_idx);
        for j in 0..k {
            row[j] = prev[j] + delta[j];
        }
    }

    let start = total - t;
    let values = levels.rows(start, t).into_owned();
    let names = (0..k).map(|j| format!("v{j}")).collect();
    TimeSeriesTable::new(synthetic_dates(t), names, values)
}

fn synthetic_dates(t: usize) -> Vec<Quarter> {
    let mut q: Quarter = "2000Q1".parse().unwrap();
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        out.push(q);
        q = q.succ();
    }
    out
}

/// Random walk with per-step drift: cumulative sum of `drift + e_t` with
/// standard normal innovations.
pub fn random_walk(t: usize, seed: u64, drift: f64) -> Vec<f64> {
    random_walk_scaled(t, seed, drift, 1.0)
}

/// [`random_walk`] with innovation standard deviation `sd` (0 gives the
/// deterministic ramp `drift * t`).
pub fn random_walk_scaled(t: usize, seed: u64, drift: f64, sd: f64) -> Vec<f64> {
    let mut rng = GaussianSource::from_seed(seed);
    let mut out = Vec::with_capacity(t);
    let mut level = 0.0;
    for _ in 0..t {
        level += drift + sd * rng.next_normal();
        out.push(level);
    }
    out
}
