//! Evaluate the closed-form characterization of all three estimators at a
//! single parameter point and print every limiting quantity.

use ridge_risk::covariance::{build_cov, spectral_profile, CovSpec, NoiseProfile, RANK_CUTOFF};
use ridge_risk::fixed_point::SolveOptions;
use ridge_risk::simulate::sample_beta_bar;
use ridge_risk::theory::{characterize, Regime, TheoryOutput};

fn show(name: &str, t: &TheoryOutput) {
    println!("{name}");
    println!("  gamma_hat    {:.10}", t.gamma_hat);
    println!("  risk         {:.10}  (bias {:.10} + variance {:.10})", t.risk, t.bias_part, t.variance_part);
    println!("  objective    {:.10}", t.objective);
    println!("  residual     {:.10}", t.residual);
    println!("  beta_norm_sq {:.10}", t.beta_norm_sq);
    println!("  nu1          {:.10}", t.nu1);
}

fn main() -> ridge_risk::Result<()> {
    let n = 400;
    let a = build_cov(&CovSpec::toeplitz(0.5, 1.0, n))?;
    let beta_bar = sample_beta_bar(0, n);
    let profile = spectral_profile(&a, &beta_bar, RANK_CUTOFF)?;
    let opts = SolveOptions::default();

    // Over-parameterized point (n/m = 2): minimum-norm and ridge.
    let m = n / 2;
    let noise_a = build_cov(&CovSpec::toeplitz(0.4, 1.0, m))?;
    let noise = NoiseProfile::build(&noise_a, None, 1.0)?;
    let alpha = 0.5;
    show("minimum-norm interpolator (alpha = 0.5)",
        &characterize(Regime::MinNorm, &profile, &noise, alpha, 0.0, &opts)?);
    show("ridge, lambda = 0.5",
        &characterize(Regime::Ridge, &profile, &noise, alpha, 0.5, &opts)?);

    // Under-parameterized point (n/m = 0.5): least squares.
    let m2 = 2 * n;
    let noise2 = NoiseProfile::build(
        &build_cov(&CovSpec::toeplitz(0.4, 1.0, m2))?, None, 1.0)?;
    show("least squares (alpha = 2)",
        &characterize(Regime::LeastSquares, &profile, &noise2, 2.0, 0.0, &opts)?);

    // Same ridge point with row-correlated features.
    let rowcov = build_cov(&CovSpec::toeplitz(0.7, 1.0, m))?;
    let noise_rc = NoiseProfile::build(&noise_a, Some(&rowcov), 1.0)?;
    show("ridge, lambda = 0.5, row-correlated (q_y = 0.7)",
        &characterize(Regime::Ridge, &profile, &noise_rc, alpha, 0.5, &opts)?);
    Ok(())
}
