//! Monte Carlo verification harness.
//!
//! Draws finite-size instances of the correlated regression model, fits each
//! estimator exactly, and aggregates the empirical counterparts of every
//! theoretical quantity. Trials are seeded through per-trial RNG streams so
//! results are byte-identical regardless of thread count or scheduling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::covariance::RANK_CUTOFF;
use crate::error::{Error, Result};
use crate::theory::Regime;

/// Environment variable overriding the rayon worker count.
pub const WORKERS_ENV: &str = "RIDGE_RISK_WORKERS";

/// Entry distribution for the iid design or noise draws. All three are
/// zero mean, unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dist {
    Gaussian,
    /// Plus or minus one with equal probability.
    Rademacher,
    /// Uniform on [-1/2, 1/2] scaled by sqrt(12).
    UniformScaled,
}

impl std::str::FromStr for Dist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Dist::Gaussian),
            "rademacher" => Ok(Dist::Rademacher),
            "uniform_scaled" | "uniform" => Ok(Dist::UniformScaled),
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution {other:?}"
            ))),
        }
    }
}

fn sample(rng: &mut ChaCha8Rng, dist: Dist) -> f64 {
    match dist {
        Dist::Gaussian => rng.sample(StandardNormal),
        Dist::Rademacher => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        Dist::UniformScaled => 12f64.sqrt() * (rng.random::<f64>() - 0.5),
    }
}

/// Simulation parameters independent of the covariance matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub regime: Regime,
    /// Ignored for the minimum-norm regime; must be 0 for least squares.
    pub lambda: f64,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub design_dist: Dist,
    pub noise_dist: Dist,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.lambda < 0.0 || self.sigma < 0.0 {
            return Err(Error::InvalidParameter(
                "lambda and sigma must be nonnegative".into(),
            ));
        }
        if self.regime == Regime::LeastSquares && self.lambda != 0.0 {
            return Err(Error::InvalidParameter(
                "least squares takes lambda = 0".into(),
            ));
        }
        if self.regime == Regime::Ridge && self.lambda == 0.0 {
            return Err(Error::InvalidParameter(
                "ridge needs lambda > 0; use the least_squares regime for lambda = 0".into(),
            ));
        }
        Ok(())
    }
}

/// Measurements from a single instance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub trial: usize,
    pub risk: f64,
    pub objective: f64,
    pub residual: f64,
    pub beta_norm_sq: f64,
    pub nu1: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation over trials divided by sqrt(trials).
    pub stderr: f64,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let stderr = if values.len() < 2 {
        f64::NAN
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    };
    MetricSummary { mean, stderr }
}

/// Trial-aggregated measurements.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub trials: usize,
    pub risk: MetricSummary,
    pub objective: MetricSummary,
    pub residual: MetricSummary,
    pub beta_norm_sq: MetricSummary,
    pub nu1: MetricSummary,
}

/// Fixed unit-norm signal drawn from the seed's reserved stream, so every
/// trial and every sweep point with the same seed shares it.
pub fn sample_beta_bar(seed: u64, n: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut b = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = b.norm();
    if norm > 0.0 {
        b /= norm;
    }
    b
}

/// One draw of the design and response.
pub struct Instance {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

/// Streams 1 + 2*trial (design) and 2 + 2*trial (noise) under the shared
/// seed; stream 0 is reserved for the signal.
#[allow(clippy::too_many_arguments)]
pub fn sample_instance(
    trial: usize,
    seed: u64,
    m: usize,
    a: &DMatrix<f64>,
    noise_a: &DMatrix<f64>,
    rowcov_a: Option<&DMatrix<f64>>,
    sigma: f64,
    beta_bar: &DVector<f64>,
    design_dist: Dist,
    noise_dist: Dist,
) -> Result<Instance> {
    let n = a.ncols();
    if beta_bar.len() != n {
        return Err(Error::DimensionMismatch(
            "beta_bar length must match the feature dimension".into(),
        ));
    }
    if noise_a.nrows() != m {
        return Err(Error::DimensionMismatch(
            "noise covariance root must be m x m".into(),
        ));
    }
    let mut rng_z = ChaCha8Rng::seed_from_u64(seed);
    rng_z.set_stream(1 + 2 * trial as u64);
    let z = DMatrix::from_fn(m, n, |_, _| sample(&mut rng_z, design_dist));

    let mut x = z * a;
    if let Some(rc) = rowcov_a {
        if rc.nrows() != m {
            return Err(Error::DimensionMismatch(
                "row covariance root must be m x m".into(),
            ));
        }
        x = rc * x;
    }

    let mut rng_v = ChaCha8Rng::seed_from_u64(seed);
    rng_v.set_stream(2 + 2 * trial as u64);
    let v = DVector::from_fn(m, |_, _| sample(&mut rng_v, noise_dist));

    let y = &x * beta_bar + sigma * (noise_a * v);
    Ok(Instance { x, y })
}

/// Minimum-norm solution of `X beta = y` (equals least squares when the
/// system is overdetermined), via the SVD pseudo-inverse.
pub fn fit_min_norm(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = x.clone().svd(true, true);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = RANK_CUTOFF * s_max;
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Numerical("SVD without U".into()))?;
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Numerical("SVD without V^T".into()))?;
    let mut coeffs = u.transpose() * y;
    for (i, c) in coeffs.iter_mut().enumerate() {
        let s = svd.singular_values[i];
        *c = if s > cutoff { *c / s } else { 0.0 };
    }
    Ok(v_t.transpose() * coeffs)
}

pub fn fit_ls(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    fit_min_norm(x, y)
}

/// Exact minimizer of `lambda ||beta||^2 + (1/m) ||y - X beta||^2`, through
/// whichever of the primal or dual normal equations is smaller.
pub fn fit_ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter("fit_ridge needs lambda > 0".into()));
    }
    let (m, n) = x.shape();
    let lm = lambda * m as f64;
    if n <= m {
        let g = DMatrix::identity(n, n) * lm + x.transpose() * x;
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::Numerical("ridge normal equations not SPD".into()))?;
        Ok(chol.solve(&(x.transpose() * y)))
    } else {
        let g = DMatrix::identity(m, m) * lm + x * x.transpose();
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::Numerical("ridge dual equations not SPD".into()))?;
        Ok(x.transpose() * chol.solve(y))
    }
}

/// `||A (beta_bar - beta_hat)||^2`.
pub fn empirical_risk(a: &DMatrix<f64>, beta_bar: &DVector<f64>, beta_hat: &DVector<f64>) -> f64 {
    (a * (beta_bar - beta_hat)).norm_squared()
}

fn run_trial(
    trial: usize,
    cfg: &SimConfig,
    m: usize,
    a: &DMatrix<f64>,
    noise_a: &DMatrix<f64>,
    rowcov_a: Option<&DMatrix<f64>>,
    beta_bar: &DVector<f64>,
) -> Result<TrialMetrics> {
    let inst = sample_instance(
        trial,
        cfg.seed,
        m,
        a,
        noise_a,
        rowcov_a,
        cfg.sigma,
        beta_bar,
        cfg.design_dist,
        cfg.noise_dist,
    )?;
    let n = a.ncols() as f64;
    let mf = m as f64;
    let beta_hat = match cfg.regime {
        Regime::MinNorm => fit_min_norm(&inst.x, &inst.y)?,
        Regime::Ridge => fit_ridge(&inst.x, &inst.y, cfg.lambda)?,
        Regime::LeastSquares => fit_ls(&inst.x, &inst.y)?,
    };
    let r = &inst.y - &inst.x * &beta_hat;
    let residual = r.norm_squared() / mf;
    let beta_norm_sq = beta_hat.norm_squared();
    let risk = empirical_risk(a, beta_bar, &beta_hat);
    let objective = match cfg.regime {
        Regime::MinNorm => beta_norm_sq,
        Regime::Ridge | Regime::LeastSquares => cfg.lambda * beta_norm_sq + residual,
    };
    // Dual vector: 2 Rc^T r / m for the penalized forms, 2 (X X^T)^+ y for
    // the interpolator; nu1 is sqrt(n) times its norm. The row-mixing
    // adjoint maps the residual back to the rotated frame the closed forms
    // live in.
    let nu1 = match cfg.regime {
        Regime::Ridge | Regime::LeastSquares => {
            let mapped = match rowcov_a {
                Some(rc) => rc.transpose() * &r,
                None => r.clone(),
            };
            2.0 * n.sqrt() * mapped.norm() / mf
        }
        Regime::MinNorm => {
            let gram = &inst.x * inst.x.transpose();
            let nu = 2.0 * fit_min_norm(&gram, &inst.y)?;
            let mapped = match rowcov_a {
                Some(rc) => rc.transpose() * nu,
                None => nu,
            };
            n.sqrt() * mapped.norm()
        }
    };
    Ok(TrialMetrics {
        trial,
        risk,
        objective,
        residual,
        beta_norm_sq,
        nu1,
    })
}

fn with_worker_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let workers: usize = v.parse().map_err(|_| {
                Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))
            })?;
            if workers == 0 {
                return Err(Error::Config(format!("{WORKERS_ENV} must be positive")));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

/// Run all trials and return per-trial metrics (in trial order) with their
/// aggregation. The reduction is a fold over the ordered trial vector, so the
/// output does not depend on the thread count.
pub fn run_monte_carlo(
    cfg: &SimConfig,
    m: usize,
    a: &DMatrix<f64>,
    noise_a: &DMatrix<f64>,
    rowcov_a: Option<&DMatrix<f64>>,
) -> Result<(EmpiricalSummary, Vec<TrialMetrics>)> {
    cfg.validate()?;
    let beta_bar = sample_beta_bar(cfg.seed, a.ncols());
    let results: Vec<Result<TrialMetrics>> = with_worker_pool(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                run_trial(t, cfg, m, a, noise_a, rowcov_a, &beta_bar).map_err(|e| Error::Trial {
                    trial: t,
                    source: Box::new(e),
                })
            })
            .collect()
    })?;
    let trials: Vec<TrialMetrics> = results.into_iter().collect::<Result<_>>()?;
    let pick = |f: fn(&TrialMetrics) -> f64| -> Vec<f64> { trials.iter().map(f).collect() };
    let summary = EmpiricalSummary {
        trials: trials.len(),
        risk: summarize(&pick(|t| t.risk)),
        objective: summarize(&pick(|t| t.objective)),
        residual: summarize(&pick(|t| t.residual)),
        beta_norm_sq: summarize(&pick(|t| t.beta_norm_sq)),
        nu1: summarize(&pick(|t| t.nu1)),
    };
    Ok((summary, trials))
}

/// Write per-trial metrics as CSV with full float precision.
pub fn write_trials_csv(path: &str, trials: &[TrialMetrics]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "trial,risk,objective,residual,beta_norm_sq,nu1")?;
    for t in trials {
        writeln!(
            f,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            t.trial, t.risk, t.objective, t.residual, t.beta_norm_sq, t.nu1
        )?;
    }
    Ok(())
}
