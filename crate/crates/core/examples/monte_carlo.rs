//! Cross-check the closed forms against Monte Carlo at one parameter point.
//!
//! Prints theory value, empirical mean, standard error and the z-score for
//! every measured quantity.

use ridge_risk::covariance::{build_cov, spectral_profile, CovSpec, NoiseProfile, RANK_CUTOFF};
use ridge_risk::fixed_point::SolveOptions;
use ridge_risk::simulate::{run_monte_carlo, sample_beta_bar, Dist, SimConfig};
use ridge_risk::theory::{characterize, Regime};

fn main() -> ridge_risk::Result<()> {
    let n = 300;
    let m = 150;
    let a = build_cov(&CovSpec::toeplitz(0.5, 1.0, n))?;
    let noise_a = build_cov(&CovSpec::toeplitz(0.4, 1.0, m))?;
    let beta_bar = sample_beta_bar(7, n);
    let profile = spectral_profile(&a, &beta_bar, RANK_CUTOFF)?;
    let noise = NoiseProfile::build(&noise_a, None, 1.0)?;

    let cfg = SimConfig {
        regime: Regime::Ridge,
        lambda: 0.5,
        sigma: 1.0,
        trials: 50,
        seed: 7,
        design_dist: Dist::Gaussian,
        noise_dist: Dist::Gaussian,
    };
    let t = characterize(cfg.regime, &profile, &noise, 0.5, cfg.lambda, &SolveOptions::default())?;
    let (s, _) = run_monte_carlo(&cfg, m, &a, &noise_a, None)?;

    println!("ridge, lambda = 0.5, n = {n}, m = {m}, {} trials", cfg.trials);
    println!("{:<13}{:>14}{:>14}{:>12}{:>8}", "metric", "theory", "mc_mean", "mc_se", "z");
    for (name, th, e) in [
        ("risk", t.risk, s.risk),
        ("objective", t.objective, s.objective),
        ("residual", t.residual, s.residual),
        ("beta_norm_sq", t.beta_norm_sq, s.beta_norm_sq),
        ("nu1", t.nu1, s.nu1),
    ] {
        println!(
            "{name:<13}{th:>14.6}{:>14.6}{:>12.2e}{:>8.2}",
            e.mean,
            e.stderr,
            (e.mean - th) / e.stderr
        );
    }
    Ok(())
}
