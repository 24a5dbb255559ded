//! Construct covariance roots and reduce them to the spectral quantities the
//! closed forms consume.

use nalgebra::DMatrix;
use ridge_risk::covariance::{
    build_cov, q_profile, sigma_bar, sigma_bar_rowcorr, spectral_profile, CovSpec, NoiseProfile,
    RANK_CUTOFF,
};
use ridge_risk::simulate::sample_beta_bar;

fn main() -> ridge_risk::Result<()> {
    let n = 8;
    let a = build_cov(&CovSpec::toeplitz(0.5, 1.0, n))?;
    println!("feature covariance root, I + q^|i-j| with q = 0.5:");
    for i in 0..3 {
        let row: Vec<String> = (0..3).map(|j| format!("{:5.3}", a[(i, j)])).collect();
        println!("  {}", row.join(" "));
    }

    let beta_bar = sample_beta_bar(0, n);
    let p = spectral_profile(&a, &beta_bar, RANK_CUTOFF)?;
    println!("\nsingular values s: {:?}", p.s.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>());
    println!("rank fraction kappa: {}", p.kappa);
    println!("signal energy ||c||^2: {:.6} (== ||beta_bar||^2)", p.signal_norm_sq());

    let m = 6;
    let noise_a = build_cov(&CovSpec::toeplitz(0.4, 1.0, m))?;
    println!("\nsigma_bar (uncorrelated rows): {:.6}", sigma_bar(&noise_a, 1.0)?);

    let rowcov = build_cov(&CovSpec::toeplitz(0.7, 1.0, m))?;
    println!("sigma_bar (row-correlated):    {:.6}", sigma_bar_rowcorr(&noise_a, &rowcov, 1.0)?);
    println!("q profile: {:?}", q_profile(&noise_a, &rowcov)?.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>());

    // Identity row covariance reduces to the uncorrelated quantities.
    let eye = DMatrix::identity(m, m);
    let np = NoiseProfile::build(&noise_a, Some(&eye), 1.0)?;
    println!("\nidentity rowcov reduces sigma_bar to {:.6}", np.sigma_bar);
    Ok(())
}
