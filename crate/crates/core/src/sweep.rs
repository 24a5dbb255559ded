//! Parameter sweeps: spec parsing, theory plus Monte Carlo evaluation per
//! point, CSV emission and theory-vs-measurement comparison.
//!
//! Sweep output is deterministic byte for byte for a fixed spec and seed:
//! floats are printed with 17 significant digits and the Monte Carlo
//! reduction does not depend on thread scheduling.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::covariance::{
    build_cov, spectral_profile, CovKind, CovSpec, NoiseProfile, RANK_CUTOFF,
};
use crate::error::{Error, Result};
use crate::fixed_point::SolveOptions;
use crate::simulate::{run_monte_carlo, sample_beta_bar, Dist, EmpiricalSummary, SimConfig};
use crate::theory::{characterize, Regime, TheoryOutput};

/// Which scalar the sweep moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// n/m, the feature-to-sample ratio. Crosses the interpolation threshold
    /// at 1.
    OverparamRatio,
    /// Ridge penalty.
    Lambda,
    /// Decay parameter of the row covariance (which must be the Toeplitz
    /// kind).
    QRows,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::OverparamRatio => write!(f, "overparam_ratio"),
            Axis::Lambda => write!(f, "lambda"),
            Axis::QRows => write!(f, "q_rows"),
        }
    }
}

fn default_scale() -> f64 {
    1.0
}

/// Covariance description as it appears in a sweep spec; the dimension is
/// injected later (features use n, rows and noise use m).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovInput {
    #[serde(flatten)]
    pub kind: CovKind,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

impl CovInput {
    pub fn with_dim(&self, dim: usize) -> CovSpec {
        CovSpec {
            kind: self.kind.clone(),
            scale: self.scale,
            dim,
        }
    }
}

fn default_sigma() -> f64 {
    1.0
}
fn default_trials() -> usize {
    50
}
fn default_dist() -> Dist {
    Dist::Gaussian
}

/// Full description of one sweep, deserialized from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Feature dimension; sample counts derive from it via the ratio.
    pub n: usize,
    /// Fixed n/m when the axis is not the ratio itself.
    #[serde(default)]
    pub overparam_ratio: Option<f64>,
    /// Fixed penalty when the axis is not lambda. Zero selects the
    /// minimum-norm or least-squares estimator by ratio.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Estimator override; omitted means: ridge when lambda > 0, otherwise
    /// minimum-norm below the threshold and least squares above it.
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub no_mc: bool,
    #[serde(default = "default_dist")]
    pub design_dist: Dist,
    #[serde(default = "default_dist")]
    pub noise_dist: Dist,
    pub feature_cov: CovInput,
    pub noise_cov: CovInput,
    #[serde(default)]
    pub row_cov: Option<CovInput>,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<SweepSpec> {
        let spec: SweepSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("sweep spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &str) -> Result<SweepSpec> {
        SweepSpec::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("values must be non-empty".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.axis != Axis::OverparamRatio && self.overparam_ratio.is_none() {
            return Err(Error::Config(
                "overparam_ratio is required unless it is the sweep axis".into(),
            ));
        }
        if self.axis == Axis::OverparamRatio && self.values.iter().any(|&v| v <= 0.0) {
            return Err(Error::Config("ratios must be positive".into()));
        }
        if self.axis == Axis::Lambda && self.values.iter().any(|&v| v < 0.0) {
            return Err(Error::Config("lambda values must be nonnegative".into()));
        }
        if self.axis == Axis::QRows {
            match &self.row_cov {
                Some(rc) if matches!(rc.kind, CovKind::ToeplitzPlusIdentity { .. }) => {}
                _ => {
                    return Err(Error::Config(
                        "a q_rows sweep needs a toeplitz_plus_identity row_cov".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// One evaluated sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub n: usize,
    pub m: usize,
    /// n/m actually used after rounding m.
    pub realized_ratio: f64,
    pub lambda: f64,
    pub regime: Regime,
    pub feasible: bool,
    pub theory: Option<TheoryOutput>,
    pub mc: Option<EmpiricalSummary>,
}

fn effective_regime(spec: &SweepSpec, lambda: f64, m: usize, n: usize) -> Regime {
    if let Some(r) = spec.regime {
        return r;
    }
    if lambda > 0.0 {
        Regime::Ridge
    } else if m < n {
        Regime::MinNorm
    } else {
        Regime::LeastSquares
    }
}

fn infeasibility(e: &Error) -> bool {
    matches!(
        e,
        Error::InfeasibleRegime(_) | Error::Rank(_) | Error::DegenerateDenominator(_)
    )
}

/// Evaluate every sweep point: closed forms always, Monte Carlo unless
/// `no_mc` is set or the point is infeasible.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let n = spec.n;
    let a = build_cov(&spec.feature_cov.with_dim(n))?;
    let beta_bar = sample_beta_bar(spec.seed, n);
    let profile = spectral_profile(&a, &beta_bar, RANK_CUTOFF)?;
    let opts = SolveOptions::default();

    let mut rows = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let ratio = match spec.axis {
            Axis::OverparamRatio => value,
            _ => spec.overparam_ratio.unwrap(),
        };
        let m = ((n as f64 / ratio).round() as usize).max(1);
        let realized_ratio = n as f64 / m as f64;
        let alpha = m as f64 / n as f64;
        let lambda = match spec.axis {
            Axis::Lambda => value,
            _ => spec.lambda.unwrap_or(0.0),
        };
        let regime = effective_regime(spec, lambda, m, n);
        let lambda = match regime {
            Regime::MinNorm | Regime::LeastSquares => 0.0,
            Regime::Ridge => lambda,
        };

        let noise_a = build_cov(&spec.noise_cov.with_dim(m))?;
        let rowcov_a: Option<DMatrix<f64>> = match &spec.row_cov {
            None => None,
            Some(rc) => {
                let mut rc = rc.clone();
                if spec.axis == Axis::QRows {
                    rc.kind = CovKind::ToeplitzPlusIdentity { q: value };
                }
                Some(build_cov(&rc.with_dim(m))?)
            }
        };
        let noise = NoiseProfile::build(&noise_a, rowcov_a.as_ref(), spec.sigma)?;

        let theory = match characterize(regime, &profile, &noise, alpha, lambda, &opts) {
            Ok(t) => Some(t),
            Err(e) if infeasibility(&e) => None,
            Err(e) => return Err(e),
        };
        let feasible = theory.is_some();

        let mc = if feasible && !spec.no_mc {
            let cfg = SimConfig {
                regime,
                lambda,
                sigma: spec.sigma,
                trials: spec.trials,
                seed: spec.seed,
                design_dist: spec.design_dist,
                noise_dist: spec.noise_dist,
            };
            Some(run_monte_carlo(&cfg, m, &a, &noise_a, rowcov_a.as_ref())?.0)
        } else {
            None
        };

        rows.push(SweepRow {
            axis: spec.axis,
            value,
            n,
            m,
            realized_ratio,
            lambda,
            regime,
            feasible,
            theory,
            mc,
        });
    }
    Ok(rows)
}

/// The "all estimators" view of a sweep: one feasibility-respecting pass at
/// lambda = 0 (minimum-norm below the threshold, least squares above it)
/// concatenated with a ridge pass at `ridge_lambda`.
pub fn run_sweep_all(spec: &SweepSpec, ridge_lambda: f64) -> Result<Vec<SweepRow>> {
    let mut base = spec.clone();
    base.regime = None;
    base.lambda = Some(0.0);
    let mut rows = run_sweep(&base)?;
    let mut ridge = spec.clone();
    ridge.regime = Some(Regime::Ridge);
    ridge.lambda = Some(ridge_lambda);
    rows.extend(run_sweep(&ridge)?);
    Ok(rows)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

pub const CSV_HEADER: &str = "axis,value,n,m,overparam_ratio,lambda,regime,status,\
gamma_hat,risk,objective,residual,beta_norm_sq,nu1,\
mc_risk,mc_risk_se,mc_objective,mc_objective_se,mc_residual,mc_residual_se,\
mc_beta_norm_sq,mc_beta_norm_sq_se,mc_nu1,mc_nu1_se";

/// Render rows to CSV. Missing fields (infeasible points, skipped Monte
/// Carlo) are left empty.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let status = if r.feasible { "ok" } else { "infeasible" };
        let t = r.theory.as_ref();
        let mc = r.mc.as_ref();
        let cells = [
            r.axis.to_string(),
            fmt(r.value),
            r.n.to_string(),
            r.m.to_string(),
            fmt(r.realized_ratio),
            fmt(r.lambda),
            r.regime.to_string(),
            status.to_string(),
            fmt_opt(t.map(|t| t.gamma_hat)),
            fmt_opt(t.map(|t| t.risk)),
            fmt_opt(t.map(|t| t.objective)),
            fmt_opt(t.map(|t| t.residual)),
            fmt_opt(t.map(|t| t.beta_norm_sq)),
            fmt_opt(t.map(|t| t.nu1)),
            fmt_opt(mc.map(|s| s.risk.mean)),
            fmt_opt(mc.map(|s| s.risk.stderr)),
            fmt_opt(mc.map(|s| s.objective.mean)),
            fmt_opt(mc.map(|s| s.objective.stderr)),
            fmt_opt(mc.map(|s| s.residual.mean)),
            fmt_opt(mc.map(|s| s.residual.stderr)),
            fmt_opt(mc.map(|s| s.beta_norm_sq.mean)),
            fmt_opt(mc.map(|s| s.beta_norm_sq.stderr)),
            fmt_opt(mc.map(|s| s.nu1.mean)),
            fmt_opt(mc.map(|s| s.nu1.stderr)),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &str, rows: &[SweepRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(rows_to_csv(rows).as_bytes())?;
    Ok(())
}

/// One theory-vs-measurement discrepancy.
#[derive(Debug, Clone)]
pub struct CompareEntry {
    pub value: f64,
    pub metric: &'static str,
    pub theory: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    /// (mc_mean - theory) / mc_stderr.
    pub z: f64,
}

/// z-scores for the directly measured quantities (risk and objective) at
/// every point that has both a closed form and a Monte Carlo summary.
pub fn compare_report(rows: &[SweepRow]) -> Vec<CompareEntry> {
    let mut out = Vec::new();
    for r in rows {
        let (Some(t), Some(mc)) = (r.theory.as_ref(), r.mc.as_ref()) else {
            continue;
        };
        for (metric, th, s) in [
            ("risk", t.risk, mc.risk),
            ("objective", t.objective, mc.objective),
        ] {
            let z = if s.stderr > 0.0 {
                (s.mean - th) / s.stderr
            } else if (s.mean - th).abs() < 1e-9 {
                0.0
            } else {
                f64::INFINITY
            };
            out.push(CompareEntry {
                value: r.value,
                metric,
                theory: th,
                mc_mean: s.mean,
                mc_stderr: s.stderr,
                z,
            });
        }
    }
    out
}

pub fn max_abs_z(entries: &[CompareEntry]) -> f64 {
    entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        SweepSpec::from_toml(
            r#"
            axis = "overparam_ratio"
            values = [0.5, 1.0, 2.0]
            n = 24
            sigma = 0.5
            trials = 4
            seed = 3
            feature_cov = { kind = "identity" }
            noise_cov = { kind = "identity" }
            "#,
        )
        .unwrap()
    }

    #[test]
    fn toml_parsing_defaults_and_errors() {
        let spec = small_spec();
        assert_eq!(spec.trials, 4);
        assert_eq!(spec.design_dist, Dist::Gaussian);
        assert!(spec.regime.is_none());
        assert!(SweepSpec::from_toml("axis = \"lambda\"").is_err());
        // lambda axis without a fixed ratio is rejected.
        assert!(SweepSpec::from_toml(
            r#"
            axis = "lambda"
            values = [0.5]
            n = 10
            feature_cov = { kind = "identity" }
            noise_cov = { kind = "identity" }
            "#
        )
        .is_err());
        // q_rows axis without a toeplitz row_cov is rejected.
        assert!(SweepSpec::from_toml(
            r#"
            axis = "q_rows"
            values = [0.5]
            n = 10
            overparam_ratio = 2.0
            feature_cov = { kind = "identity" }
            noise_cov = { kind = "identity" }
            "#
        )
        .is_err());
    }

    #[test]
    fn ratio_sweep_marks_threshold_infeasible() {
        let rows = run_sweep(&small_spec()).unwrap();
        assert_eq!(rows.len(), 3);
        // ratio 0.5: m = 48 > n, least squares.
        assert_eq!(rows[0].regime, Regime::LeastSquares);
        assert!(rows[0].feasible);
        // ratio 1: interpolation threshold, no finite characterization.
        assert!(!rows[1].feasible);
        assert!(rows[1].theory.is_none() && rows[1].mc.is_none());
        // ratio 2: m = 12 < n, minimum-norm.
        assert_eq!(rows[2].regime, Regime::MinNorm);
        assert!(rows[2].feasible);
    }

    #[test]
    fn csv_is_deterministic_and_well_formed() {
        let spec = small_spec();
        let a = rows_to_csv(&run_sweep(&spec).unwrap());
        let b = rows_to_csv(&run_sweep(&spec).unwrap());
        assert_eq!(a, b);
        let mut lines = a.lines();
        let header = lines.next().unwrap();
        let ncols = header.split(',').count();
        for line in lines {
            assert_eq!(line.split(',').count(), ncols, "ragged line: {line}");
        }
        // Infeasible row has empty theory cells.
        let infeasible = a.lines().nth(2).unwrap();
        assert!(infeasible.contains(",infeasible,,"));
    }

    #[test]
    fn no_mc_skips_simulation() {
        let mut spec = small_spec();
        spec.no_mc = true;
        let rows = run_sweep(&spec).unwrap();
        assert!(rows.iter().all(|r| r.mc.is_none()));
        assert!(rows[0].theory.is_some());
    }

    #[test]
    fn compare_report_z_scores_are_finite_and_small() {
        let mut spec = small_spec();
        spec.n = 60;
        spec.trials = 30;
        spec.values = vec![0.4, 2.5];
        let rows = run_sweep(&spec).unwrap();
        let report = compare_report(&rows);
        assert_eq!(report.len(), 4);
        for e in &report {
            assert!(e.z.is_finite(), "{e:?}");
        }
        assert!(max_abs_z(&report) < 6.0);
    }

    #[test]
    fn lambda_axis_uses_fixed_ratio() {
        let spec = SweepSpec::from_toml(
            r#"
            axis = "lambda"
            values = [0.25, 1.0]
            n = 20
            overparam_ratio = 2.0
            sigma = 0.3
            trials = 2
            no_mc = true
            feature_cov = { kind = "toeplitz_plus_identity", q = 0.5 }
            noise_cov = { kind = "identity" }
            "#,
        )
        .unwrap();
        let rows = run_sweep(&spec).unwrap();
        assert!(rows.iter().all(|r| r.m == 10));
        assert_eq!(rows[0].lambda, 0.25);
        assert_eq!(rows[0].regime, Regime::Ridge);
        assert!(rows[0].theory.unwrap().risk > 0.0);
    }

    #[test]
    fn q_rows_axis_rebuilds_row_cov() {
        let spec = SweepSpec::from_toml(
            r#"
            axis = "q_rows"
            values = [0.0, 0.8]
            n = 16
            overparam_ratio = 2.0
            lambda = 0.5
            sigma = 0.4
            no_mc = true
            feature_cov = { kind = "identity" }
            noise_cov = { kind = "identity" }
            row_cov = { kind = "toeplitz_plus_identity", q = 0.0 }
            "#,
        )
        .unwrap();
        let rows = run_sweep(&spec).unwrap();
        let r0 = rows[0].theory.unwrap().risk;
        let r8 = rows[1].theory.unwrap().risk;
        assert!(r0 > 0.0 && r8 > 0.0);
        assert_ne!(r0, r8);
    }
}
