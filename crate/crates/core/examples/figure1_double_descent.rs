//! Risk vs over-parametrization ratio, all three estimators: the double
//! descent curve. Desk-scale version of specs/figure1.toml (smaller n and
//! fewer trials so it finishes in seconds); outputs land in ./out.

use ridge_risk::plot::{write_gnuplot_dat, write_svg};
use ridge_risk::sweep::{run_sweep_all, write_csv, SweepSpec};

fn main() -> ridge_risk::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/specs/figure1.toml");
    let mut spec = SweepSpec::from_file(path)?;
    spec.n = 200;
    spec.trials = 30;

    let rows = run_sweep_all(&spec, 0.5)?;
    std::fs::create_dir_all("out")?;
    write_csv("out/figure1.csv", &rows)?;
    write_svg("out/figure1.svg", &rows)?;
    write_gnuplot_dat("out/figure1.dat", &rows)?;

    println!("{:<14}{:<14}{:>12}{:>12}", "ratio n/m", "regime", "theory", "mc");
    for r in &rows {
        match (&r.theory, &r.mc) {
            (Some(t), Some(mc)) => println!(
                "{:<14.3}{:<14}{:>12.4}{:>12.4}",
                r.value, r.regime.to_string(), t.risk, mc.risk.mean
            ),
            _ => println!("{:<14.3}{:<14}{:>12}{:>12}", r.value, "-", "infeasible", "-"),
        }
    }
    println!("\nwrote out/figure1.{{csv,svg,dat}}");
    Ok(())
}
