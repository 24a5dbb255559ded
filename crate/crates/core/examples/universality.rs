//! The closed forms are derived for Gaussian entries but hold more broadly:
//! rerun the same minimum-norm point with Rademacher and scaled-uniform
//! design/noise entries and compare against the unchanged theory values.

use ridge_risk::covariance::{build_cov, spectral_profile, CovSpec, NoiseProfile, RANK_CUTOFF};
use ridge_risk::fixed_point::SolveOptions;
use ridge_risk::simulate::{run_monte_carlo, sample_beta_bar, Dist, SimConfig};
use ridge_risk::theory::{characterize, Regime};

fn main() -> ridge_risk::Result<()> {
    let n = 200;
    let m = 100;
    let a = build_cov(&CovSpec::toeplitz(0.5, 1.0, n))?;
    let noise_a = build_cov(&CovSpec::toeplitz(0.4, 1.0, m))?;
    let beta_bar = sample_beta_bar(5, n);
    let profile = spectral_profile(&a, &beta_bar, RANK_CUTOFF)?;
    let noise = NoiseProfile::build(&noise_a, None, 1.0)?;
    let t = characterize(Regime::MinNorm, &profile, &noise, 0.5, 0.0, &SolveOptions::default())?;
    println!("theory risk (distribution-free): {:.6}\n", t.risk);

    for dist in [Dist::Gaussian, Dist::Rademacher, Dist::UniformScaled] {
        let cfg = SimConfig {
            regime: Regime::MinNorm,
            lambda: 0.0,
            sigma: 1.0,
            trials: 50,
            seed: 5,
            design_dist: dist,
            noise_dist: dist,
        };
        let (s, _) = run_monte_carlo(&cfg, m, &a, &noise_a, None)?;
        println!(
            "{:<16} mc risk {:.6} +- {:.6}   z = {:+.2}",
            format!("{dist:?}"),
            s.risk.mean,
            s.risk.stderr,
            (s.risk.mean - t.risk) / s.risk.stderr
        );
    }
    Ok(())
}
