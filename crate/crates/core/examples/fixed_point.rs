//! Solve the scalar gamma equations for each estimator and inspect the
//! residual certificates.

use ridge_risk::fixed_point::{
    gls_equation, solve_gls_gamma, solve_ridge_gamma, solve_rowcorr_gamma, SolveOptions,
};

fn main() -> ridge_risk::Result<()> {
    let opts = SolveOptions::default();
    let s: Vec<f64> = (0..200).map(|i| 0.5 + 1.5 * i as f64 / 200.0).collect();

    let gls = solve_gls_gamma(&s, 0.5, &opts)?;
    println!(
        "interpolator: gamma_hat = {:.12}, residual = {:+.3e}, {} bisection steps",
        gls.gamma_hat, gls.residual, gls.iterations
    );
    // Sign witness around the root: the equation is increasing in gamma.
    let d = 1e-8;
    println!(
        "  F(gamma - d) = {:+.3e}, F(gamma + d) = {:+.3e}",
        gls_equation(&s, 0.5, gls.gamma_hat - d),
        gls_equation(&s, 0.5, gls.gamma_hat + d)
    );

    let ridge = solve_ridge_gamma(&s, 0.5, 0.3, &opts)?;
    println!(
        "ridge (lambda 0.3): gamma_hat = {:.12}, residual = {:+.3e}",
        ridge.gamma_hat, ridge.residual
    );

    // Isotropic, lambda = 1, alpha = 1: the fixed point is the golden ratio
    // conjugate (sqrt(5) - 1)/2.
    let iso = vec![1.0; 100];
    let golden = solve_ridge_gamma(&iso, 1.0, 1.0, &opts)?;
    println!("golden-ratio point: gamma_hat = {:.15}", golden.gamma_hat);

    let os: Vec<f64> = (0..100).map(|j| 0.8 + 0.4 * j as f64 / 100.0).collect();
    let rc = solve_rowcorr_gamma(&s, &os, 0.5, 0.3, &opts)?;
    println!(
        "row-correlated ridge: gamma_hat = {:.12}, residual = {:+.3e}",
        rc.gamma_hat, rc.residual
    );
    Ok(())
}
