//! Minimum-norm risk as a function of the row-correlation strength q_y.
//! Desk-scale version of specs/figure3_qy.toml; outputs land in ./out.
//!
//! Note the curve need not be monotone: stronger intra-sample correlation
//! does not always raise the interpolator's risk.

use ridge_risk::plot::write_svg;
use ridge_risk::sweep::{run_sweep, write_csv, SweepSpec};

fn main() -> ridge_risk::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/specs/figure3_qy.toml");
    let mut spec = SweepSpec::from_file(path)?;
    spec.n = 200;
    spec.trials = 30;

    let rows = run_sweep(&spec)?;
    std::fs::create_dir_all("out")?;
    write_csv("out/figure3.csv", &rows)?;
    write_svg("out/figure3.svg", &rows)?;

    println!("{:<8}{:>12}{:>12}{:>12}", "q_y", "theory", "mc", "mc_se");
    for r in &rows {
        let t = r.theory.unwrap();
        let mc = r.mc.unwrap();
        println!(
            "{:<8.2}{:>12.4}{:>12.4}{:>12.4}",
            r.value, t.risk, mc.risk.mean, mc.risk.stderr
        );
    }
    println!("\nwrote out/figure3.{{csv,svg}}");
    Ok(())
}
