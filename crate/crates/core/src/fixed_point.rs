//! Scalar fixed-point equations for the gamma parameter of each estimator.
//!
//! All three maps are monotone in gamma, so each root is bracketed and then
//! isolated by bisection. Bisection runs the bracket down to floating-point
//! exhaustion and the returned solution carries the achieved equation
//! residual as a certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Bound on the equation residual at the returned root.
    pub tol: f64,
    pub max_iter: usize,
    /// Multiplier for geometric bracket expansion.
    pub bracket_growth: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-12,
            max_iter: 200,
            bracket_growth: 2.0,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if self.tol <= 0.0 {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if self.bracket_growth <= 1.0 {
            return Err(Error::InvalidParameter(
                "bracket_growth must exceed 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GammaSolution {
    pub gamma_hat: f64,
    /// Equation residual at `gamma_hat`.
    pub residual: f64,
    pub iterations: usize,
}

fn rank_fraction(s: &[f64]) -> f64 {
    let s_max = s.iter().cloned().fold(0.0, f64::max);
    if s_max == 0.0 {
        return 0.0;
    }
    let cutoff = crate::covariance::RANK_CUTOFF * s_max;
    s.iter().filter(|&&x| x > cutoff).count() as f64 / s.len() as f64
}

/// Bisection on an increasing function with `f(lo) < 0 <= f(hi)`.
/// Runs until the bracket cannot shrink further, then certifies the residual.
fn bisect<F: Fn(f64) -> f64>(
    mut lo: f64,
    mut hi: f64,
    f: F,
    opts: &SolveOptions,
) -> Result<GammaSolution> {
    let mut iterations = 0usize;
    let mut best = 0.5 * (lo + hi);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let fm = f(mid);
        best = mid;
        if fm == 0.0 {
            break;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if iterations > 2 * opts.max_iter {
            break;
        }
    }
    let residual = f(best);
    if residual.abs() > opts.tol {
        return Err(Error::Numerical(format!(
            "bisection stalled with residual {residual:e} above tol {:e}",
            opts.tol
        )));
    }
    Ok(GammaSolution {
        gamma_hat: best,
        residual,
        iterations,
    })
}

/// Equation residual of the interpolating fixed point at `gamma`:
/// `(1/n) sum gamma s_i^2/(1 + gamma s_i^2) - alpha`. Increasing in gamma.
pub fn gls_equation(s: &[f64], alpha: f64, gamma: f64) -> f64 {
    shrinkage_mean(s, gamma, 1.0) - alpha
}

/// Equation residual of the ridge fixed point at `gamma`:
/// `(1/n) sum gamma s_i^2/(lambda + gamma s_i^2) - alpha (1 - gamma)`.
/// Increasing in gamma.
pub fn ridge_equation(s: &[f64], alpha: f64, lambda: f64, gamma: f64) -> f64 {
    shrinkage_mean(s, gamma, lambda) - alpha * (1.0 - gamma)
}

/// Equation residual of the row-correlated fixed point at `gamma`:
/// `gamma - (1/m) sum_j 1/(1/os_j^2 + T(gamma)/alpha)`. Sign-definite on
/// either side of the root.
pub fn rowcorr_equation(s: &[f64], os: &[f64], alpha: f64, lambda: f64, gamma: f64) -> f64 {
    let n = s.len() as f64;
    let m = os.len() as f64;
    let t = s
        .iter()
        .map(|&si| {
            let s2 = si * si;
            s2 / (lambda + gamma * s2)
        })
        .sum::<f64>()
        / (alpha * n);
    gamma - os.iter().map(|&o| 1.0 / (1.0 / (o * o) + t)).sum::<f64>() / m
}

/// Mean of `gamma s_i^2 / (lambda + gamma s_i^2)`.
fn shrinkage_mean(s: &[f64], gamma: f64, lambda: f64) -> f64 {
    let n = s.len() as f64;
    s.iter()
        .map(|&si| {
            let s2 = si * si;
            gamma * s2 / (lambda + gamma * s2)
        })
        .sum::<f64>()
        / n
}

/// Root of `(1/n) sum gamma s_i^2/(1 + gamma s_i^2) = alpha`, the
/// interpolating (min-norm) regime. Requires `alpha < kappa(s)` strictly.
pub fn solve_gls_gamma(s: &[f64], alpha: f64, opts: &SolveOptions) -> Result<GammaSolution> {
    opts.validate()?;
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let kappa = rank_fraction(s);
    if alpha >= kappa {
        return Err(Error::InfeasibleRegime(format!(
            "alpha = {alpha} must be below the rank fraction kappa = {kappa}; \
             interpolation is infeasible otherwise"
        )));
    }
    let f = |g: f64| gls_equation(s, alpha, g);
    // F is increasing with range (0, kappa); expand until the root is inside.
    let mut hi = 1.0;
    let mut grow = 0;
    while f(hi) < 0.0 {
        hi *= opts.bracket_growth;
        grow += 1;
        if grow > opts.max_iter {
            return Err(Error::Numerical(
                "failed to bracket the GLS gamma equation".into(),
            ));
        }
    }
    let mut sol = bisect(0.0, hi, f, opts)?;
    sol.iterations += grow;
    Ok(sol)
}

/// Root of `(1/n) sum gamma s_i^2/(lambda + gamma s_i^2) = alpha (1 - gamma)`
/// on `[0, 1]`. With `lambda = 0` and `alpha > 1` the closed form
/// `gamma = 1 - 1/alpha` is returned directly.
pub fn solve_ridge_gamma(
    s: &[f64],
    alpha: f64,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<GammaSolution> {
    opts.validate()?;
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if lambda == 0.0 {
        // At lambda = 0 the left side is the constant kappa for gamma > 0,
        // so bisection loses continuity at the origin; the under-parameterized
        // closed form applies instead.
        if alpha <= 1.0 {
            return Err(Error::InfeasibleRegime(
                "lambda = 0 requires alpha > 1 (least-squares regime)".into(),
            ));
        }
        let gamma = 1.0 - 1.0 / alpha;
        let residual = rank_fraction(s) - 1.0;
        return Ok(GammaSolution {
            gamma_hat: gamma,
            residual,
            iterations: 0,
        });
    }
    let f = |g: f64| ridge_equation(s, alpha, lambda, g);
    bisect(0.0, 1.0, f, opts)
}

/// Root of the row-correlated map
/// `gamma = (1/m) sum_j 1/(1/os_j^2 + (1/(alpha n)) sum_i s_i^2/(lambda + gamma s_i^2))`.
pub fn solve_rowcorr_gamma(
    s: &[f64],
    os: &[f64],
    alpha: f64,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<GammaSolution> {
    opts.validate()?;
    if os.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidParameter(
            "row covariance spectrum must be strictly positive".into(),
        ));
    }
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    if lambda == 0.0 && alpha <= 1.0 {
        return Err(Error::InfeasibleRegime(
            "lambda = 0 requires alpha > 1 in the row-correlated map".into(),
        ));
    }
    let m = os.len() as f64;
    let h = |g: f64| rowcorr_equation(s, os, alpha, lambda, g);
    let upper = os.iter().map(|&o| o * o).sum::<f64>() / m;
    // At lambda = 0 the map is singular at gamma = 0 (and h(0) = 0 spuriously),
    // so the bracket starts just above the origin.
    let lo = if lambda == 0.0 { upper * 1e-15 } else { 0.0 };
    if h(lo) > 0.0 || h(upper) < 0.0 {
        return Err(Error::Numerical(
            "no sign change on the row-correlated gamma bracket".into(),
        ));
    }
    bisect(lo, upper, h, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    #[test]
    fn gls_isotropic_closed_form() {
        let s = ones(100);
        let sol = solve_gls_gamma(&s, 0.5, &SolveOptions::default()).unwrap();
        assert!((sol.gamma_hat - 1.0).abs() < 1e-10, "{}", sol.gamma_hat);
        let sol = solve_gls_gamma(&s, 0.25, &SolveOptions::default()).unwrap();
        assert!((sol.gamma_hat - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn gls_infeasible_alpha() {
        let s = ones(50);
        assert!(matches!(
            solve_gls_gamma(&s, 1.2, &SolveOptions::default()),
            Err(Error::InfeasibleRegime(_))
        ));
        assert!(solve_gls_gamma(&s, -0.1, &SolveOptions::default()).is_err());
    }

    #[test]
    fn ridge_ls_closed_form() {
        let s = ones(10);
        let sol = solve_ridge_gamma(&s, 2.0, 0.0, &SolveOptions::default()).unwrap();
        assert_eq!(sol.gamma_hat, 0.5);
        assert!(matches!(
            solve_ridge_gamma(&s, 0.5, 0.0, &SolveOptions::default()),
            Err(Error::InfeasibleRegime(_))
        ));
        assert!(solve_ridge_gamma(&s, 1.0, -0.5, &SolveOptions::default()).is_err());
    }

    #[test]
    fn ridge_golden_ratio_case() {
        // s = 1, lambda = 1, alpha = 1: gamma/(1+gamma) = 1-gamma.
        let s = ones(64);
        let sol = solve_ridge_gamma(&s, 1.0, 1.0, &SolveOptions::default()).unwrap();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((sol.gamma_hat - golden).abs() < 1e-10, "{}", sol.gamma_hat);
    }

    #[test]
    fn ridge_large_lambda_limit() {
        let s = ones(32);
        let sol = solve_ridge_gamma(&s, 0.7, 1e6, &SolveOptions::default()).unwrap();
        assert!(sol.gamma_hat > 0.999);
    }

    #[test]
    fn rowcorr_reduces_to_ridge() {
        let s: Vec<f64> = (0..80).map(|i| 0.5 + 0.02 * i as f64).collect();
        let os = ones(40);
        let opts = SolveOptions::default();
        let a = solve_rowcorr_gamma(&s, &os, 0.5, 0.3, &opts).unwrap();
        let b = solve_ridge_gamma(&s, 0.5, 0.3, &opts).unwrap();
        assert!((a.gamma_hat - b.gamma_hat).abs() < 1e-10);
    }

    #[test]
    fn rowcorr_golden_ratio_chain() {
        let s = ones(64);
        let os = ones(64);
        let sol = solve_rowcorr_gamma(&s, &os, 1.0, 1.0, &SolveOptions::default()).unwrap();
        assert!((sol.gamma_hat - 0.6180339887498949).abs() < 1e-9);
    }

    #[test]
    fn rowcorr_bracket_upper_bound() {
        let s = ones(32);
        let os = vec![0.7; 32];
        let sol = solve_rowcorr_gamma(&s, &os, 0.8, 0.4, &SolveOptions::default()).unwrap();
        assert!(sol.gamma_hat <= 0.7 * 0.7 + 1e-12);
        assert!(solve_rowcorr_gamma(&s, &[0.0; 32], 0.8, 0.4, &SolveOptions::default()).is_err());
    }

    #[test]
    fn residual_certificate_holds() {
        let s: Vec<f64> = (0..100).map(|i| 0.1 + 0.1 * i as f64).collect();
        let sol = solve_gls_gamma(&s, 0.4, &SolveOptions::default()).unwrap();
        assert!(sol.residual.abs() <= 1e-12);
    }

    #[test]
    fn determinism() {
        let s: Vec<f64> = (0..64).map(|i| (i as f64 * 0.7).sin().abs() + 0.2).collect();
        let a = solve_ridge_gamma(&s, 0.9, 0.2, &SolveOptions::default()).unwrap();
        let b = solve_ridge_gamma(&s, 0.9, 0.2, &SolveOptions::default()).unwrap();
        assert_eq!(a.gamma_hat.to_bits(), b.gamma_hat.to_bits());
    }
}
