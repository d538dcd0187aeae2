//! Distribution functions shared by the test statistics.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Chi-square survival function (upper tail) with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    assert!(df > 0, "chi-square needs df >= 1");
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0)
}
