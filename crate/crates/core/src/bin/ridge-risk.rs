//! Thin command line front end over the library. The examples/ directory is
//! the richer entry point; this binary only wires flags to library calls.

use clap::{Args, Parser, Subcommand};
use ridge_risk::covariance::{
    build_cov, spectral_profile, CovSpec, NoiseProfile, RANK_CUTOFF,
};
use ridge_risk::error::Result;
use ridge_risk::fixed_point::SolveOptions;
use ridge_risk::plot::{write_gnuplot_dat, write_svg};
use ridge_risk::simulate::{
    run_monte_carlo, sample_beta_bar, write_trials_csv, Dist, SimConfig,
};
use ridge_risk::sweep::{compare_report, max_abs_z, run_sweep, write_csv, SweepSpec};
use ridge_risk::theory::{characterize, Regime, TheoryOutput};

#[derive(Parser)]
#[command(
    name = "ridge-risk",
    about = "Asymptotic risk of ridge, minimum-norm and least-squares regression \
             under correlated designs, with Monte Carlo verification"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ModelArgs {
    /// Feature dimension n.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Overparametrization ratio n/m.
    #[arg(long, default_value_t = 2.0)]
    overparam_ratio: f64,
    /// Ridge penalty; 0 selects minimum-norm or least squares by ratio.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Estimator: min_norm, ridge or least_squares. Derived from lambda and
    /// the ratio when omitted.
    #[arg(long)]
    regime: Option<Regime>,
    /// Noise level sigma.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Toeplitz decay of the feature covariance root.
    #[arg(long, default_value_t = 0.5)]
    feature_q: f64,
    #[arg(long, default_value_t = 1.0)]
    feature_scale: f64,
    /// Toeplitz decay of the noise covariance root; omitted means identity.
    #[arg(long)]
    noise_q: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    /// Toeplitz decay of the row covariance root; omitted means no row
    /// correlation.
    #[arg(long)]
    row_q: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    row_scale: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the closed-form characterization at one parameter point.
    Theory(ModelArgs),
    /// Run Monte Carlo trials at one point and report both sides.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// gaussian, rademacher or uniform_scaled.
        #[arg(long, default_value = "gaussian")]
        design_dist: Dist,
        #[arg(long, default_value = "gaussian")]
        noise_dist: Dist,
        /// Write per-trial metrics here.
        #[arg(long)]
        out_csv: Option<String>,
    },
    /// Run a sweep described by a TOML spec.
    Sweep {
        /// Path to the sweep spec.
        spec: String,
        #[arg(long)]
        out_csv: Option<String>,
        /// SVG output path; a gnuplot .dat file is written next to it.
        #[arg(long)]
        out_plot: Option<String>,
        /// Skip Monte Carlo, closed forms only.
        #[arg(long)]
        no_mc: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Estimator override: min_norm, ridge, least_squares, auto, or
        /// "all" (lambda-0 pass plus a ridge pass).
        #[arg(long)]
        regime: Option<String>,
        /// Penalty override for ridge points.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Run a sweep with Monte Carlo and exit nonzero if any z-score
    /// exceeds 5.
    Compare {
        spec: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
    },
}

struct Model {
    a: nalgebra::DMatrix<f64>,
    noise_a: nalgebra::DMatrix<f64>,
    rowcov_a: Option<nalgebra::DMatrix<f64>>,
    m: usize,
    alpha: f64,
    lambda: f64,
    regime: Regime,
    sigma: f64,
}

fn build_model(args: &ModelArgs) -> Result<Model> {
    let n = args.n;
    let m = ((n as f64 / args.overparam_ratio).round() as usize).max(1);
    let regime = args.regime.unwrap_or(if args.lambda > 0.0 {
        Regime::Ridge
    } else if m < n {
        Regime::MinNorm
    } else {
        Regime::LeastSquares
    });
    let lambda = match regime {
        Regime::Ridge => args.lambda,
        _ => 0.0,
    };
    let a = build_cov(&CovSpec::toeplitz(args.feature_q, args.feature_scale, n))?;
    let noise_a = match args.noise_q {
        Some(q) => build_cov(&CovSpec::toeplitz(q, args.noise_scale, m))?,
        None => nalgebra::DMatrix::identity(m, m) * args.noise_scale,
    };
    let rowcov_a = match args.row_q {
        Some(q) => Some(build_cov(&CovSpec::toeplitz(q, args.row_scale, m))?),
        None => None,
    };
    Ok(Model {
        a,
        noise_a,
        rowcov_a,
        m,
        alpha: m as f64 / n as f64,
        lambda,
        regime,
        sigma: args.sigma,
    })
}

fn theory_for(model: &Model, seed: u64) -> Result<TheoryOutput> {
    let beta_bar = sample_beta_bar(seed, model.a.ncols());
    let profile = spectral_profile(&model.a, &beta_bar, RANK_CUTOFF)?;
    let noise = NoiseProfile::build(&model.noise_a, model.rowcov_a.as_ref(), model.sigma)?;
    characterize(
        model.regime,
        &profile,
        &noise,
        model.alpha,
        model.lambda,
        &SolveOptions::default(),
    )
}

fn print_theory(t: &TheoryOutput) {
    println!("gamma_hat    {:.12}", t.gamma_hat);
    println!("risk         {:.12}", t.risk);
    println!("  bias       {:.12}", t.bias_part);
    println!("  variance   {:.12}", t.variance_part);
    println!("objective    {:.12}", t.objective);
    println!("residual     {:.12}", t.residual);
    println!("beta_norm_sq {:.12}", t.beta_norm_sq);
    println!("nu1          {:.12}", t.nu1);
}

fn run_with_regime(
    spec: &mut SweepSpec,
    regime: Option<&str>,
    lambda: Option<f64>,
) -> Result<Vec<ridge_risk::sweep::SweepRow>> {
    if let Some(l) = lambda {
        spec.lambda = Some(l);
    }
    match regime {
        Some("all") => {
            let ridge_lambda = spec.lambda.filter(|&l| l > 0.0).unwrap_or(0.5);
            ridge_risk::sweep::run_sweep_all(spec, ridge_lambda)
        }
        Some("auto") | None => run_sweep(spec),
        Some(r) => {
            spec.regime = Some(r.parse()?);
            run_sweep(spec)
        }
    }
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Theory(args) => {
            let model = build_model(&args)?;
            println!(
                "regime {} | n {} m {} alpha {:.6} lambda {}",
                model.regime,
                model.a.ncols(),
                model.m,
                model.alpha,
                model.lambda
            );
            print_theory(&theory_for(&model, 0)?);
            Ok(0)
        }
        Cmd::Simulate {
            model: args,
            trials,
            seed,
            design_dist,
            noise_dist,
            out_csv,
        } => {
            let model = build_model(&args)?;
            let t = theory_for(&model, seed)?;
            let cfg = SimConfig {
                regime: model.regime,
                lambda: model.lambda,
                sigma: model.sigma,
                trials,
                seed,
                design_dist,
                noise_dist,
            };
            let (summary, per_trial) =
                run_monte_carlo(&cfg, model.m, &model.a, &model.noise_a, model.rowcov_a.as_ref())?;
            if let Some(path) = out_csv {
                write_trials_csv(&path, &per_trial)?;
            }
            println!("regime {} | trials {} seed {}", model.regime, trials, seed);
            println!("{:<13}{:>16}{:>16}{:>12}", "metric", "theory", "mc_mean", "mc_se");
            for (name, th, s) in [
                ("risk", t.risk, summary.risk),
                ("objective", t.objective, summary.objective),
                ("residual", t.residual, summary.residual),
                ("beta_norm_sq", t.beta_norm_sq, summary.beta_norm_sq),
                ("nu1", t.nu1, summary.nu1),
            ] {
                println!("{name:<13}{th:>16.8}{:>16.8}{:>12.2e}", s.mean, s.stderr);
            }
            Ok(0)
        }
        Cmd::Sweep {
            spec,
            out_csv,
            out_plot,
            no_mc,
            seed,
            trials,
            regime,
            lambda,
        } => {
            let mut spec = SweepSpec::from_file(&spec)?;
            if no_mc {
                spec.no_mc = true;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(t) = trials {
                spec.trials = t;
            }
            let rows = run_with_regime(&mut spec, regime.as_deref(), lambda)?;
            if let Some(path) = out_csv {
                write_csv(&path, &rows)?;
                println!("wrote {path}");
            }
            if let Some(path) = out_plot {
                write_svg(&path, &rows)?;
                let dat = format!("{}.dat", path.trim_end_matches(".svg"));
                write_gnuplot_dat(&dat, &rows)?;
                println!("wrote {path} and {dat}");
            }
            for r in &rows {
                let status = if r.feasible { "ok" } else { "infeasible" };
                match &r.theory {
                    Some(t) => println!(
                        "{} = {:<10.4} {status:<10} risk {:.6}",
                        r.axis, r.value, t.risk
                    ),
                    None => println!("{} = {:<10.4} {status}", r.axis, r.value),
                }
            }
            Ok(0)
        }
        Cmd::Compare {
            spec,
            seed,
            trials,
            regime,
            lambda,
        } => {
            let mut spec = SweepSpec::from_file(&spec)?;
            spec.no_mc = false;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(t) = trials {
                spec.trials = t;
            }
            let rows = run_with_regime(&mut spec, regime.as_deref(), lambda)?;
            let report = compare_report(&rows);
            println!(
                "{:<12}{:<12}{:>16}{:>16}{:>12}{:>9}",
                "value", "metric", "theory", "mc_mean", "mc_se", "z"
            );
            for e in &report {
                println!(
                    "{:<12.4}{:<12}{:>16.8}{:>16.8}{:>12.2e}{:>9.2}",
                    e.value, e.metric, e.theory, e.mc_mean, e.mc_stderr, e.z
                );
            }
            let worst = max_abs_z(&report);
            println!("max |z| = {worst:.2}");
            Ok(if worst > 5.0 { 1 } else { 0 })
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
