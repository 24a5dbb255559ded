//! Minimal SVG and gnuplot output for sweep results.
//!
//! The SVG draws the closed-form risk as a line and Monte Carlo means as
//! markers with error bars; when the sweep axis is the overparametrization
//! ratio a dashed vertical rule marks the interpolation threshold at 1.

use std::io::Write;

use crate::error::Result;
use crate::sweep::{Axis, SweepRow};

const W: f64 = 800.0;
const H: f64 = 560.0;
const ML: f64 = 70.0;
const MR: f64 = 25.0;
const MT: f64 = 30.0;
const MB: f64 = 55.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        ML + (x - self.x0) / (self.x1 - self.x0) * (W - ML - MR)
    }
    fn py(&self, y: f64) -> f64 {
        H - MB - (y - self.y0) / (self.y1 - self.y0) * (H - MT - MB)
    }
}

fn finite(v: f64) -> bool {
    v.is_finite()
}

/// Render the sweep to a standalone SVG.
pub fn render_svg(rows: &[SweepRow]) -> String {
    let pts: Vec<&SweepRow> = rows.iter().filter(|r| r.theory.is_some()).collect();
    let mut xs: Vec<f64> = rows.iter().map(|r| r.value).filter(|v| finite(*v)).collect();
    let mut ys: Vec<f64> = pts
        .iter()
        .filter_map(|r| r.theory.map(|t| t.risk))
        .chain(pts.iter().filter_map(|r| r.mc.map(|s| s.risk.mean)))
        .filter(|v| finite(*v))
        .collect();
    if xs.is_empty() {
        xs = vec![0.0, 1.0];
    }
    if ys.is_empty() {
        ys = vec![0.0, 1.0];
    }
    let (xmin, xmax) = bounds(&xs);
    let (ymin, ymax) = bounds(&ys);
    let f = Frame {
        x0: xmin,
        x1: xmax,
        y0: (ymin - 0.05 * (ymax - ymin)).min(0.0),
        y1: ymax + 0.05 * (ymax - ymin),
    };

    let axis_label = rows.first().map(|r| r.axis.to_string()).unwrap_or_default();
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    // Axes.
    s.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR
    ));
    s.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB
    ));
    for k in 0..=5 {
        let xv = f.x0 + (f.x1 - f.x0) * k as f64 / 5.0;
        let yv = f.y0 + (f.y1 - f.y0) * k as f64 / 5.0;
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{:.3}</text>\n",
            f.px(xv),
            H - MB + 16.0,
            xv
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{:.3}</text>\n",
            ML - 6.0,
            f.py(yv) + 4.0,
            yv
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">{axis_label}</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.1})\">risk</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    ));

    // Interpolation threshold marker.
    if rows.first().map(|r| r.axis) == Some(Axis::OverparamRatio)
        && f.x0 < 1.0
        && f.x1 > 1.0
    {
        s.push_str(&format!(
            "<line x1=\"{0:.1}\" y1=\"{MT}\" x2=\"{0:.1}\" y2=\"{1}\" stroke=\"gray\" \
             stroke-dasharray=\"5,4\"/>\n",
            f.px(1.0),
            H - MB
        ));
    }

    // Theory polyline, broken at infeasible points.
    let mut seg: Vec<String> = Vec::new();
    let flush = |seg: &mut Vec<String>, s: &mut String| {
        if seg.len() >= 2 {
            s.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.6\"/>\n",
                seg.join(" ")
            ));
        }
        seg.clear();
    };
    let mut prev_regime = None;
    for r in rows {
        if prev_regime.is_some() && prev_regime != Some(r.regime) {
            flush(&mut seg, &mut s);
        }
        prev_regime = Some(r.regime);
        match r.theory {
            Some(t) if finite(t.risk) => {
                seg.push(format!("{:.2},{:.2}", f.px(r.value), f.py(t.risk)))
            }
            _ => flush(&mut seg, &mut s),
        }
    }
    flush(&mut seg, &mut s);

    // Monte Carlo markers with error bars.
    for r in rows {
        let Some(mc) = r.mc else { continue };
        if !finite(mc.risk.mean) {
            continue;
        }
        let x = f.px(r.value);
        let y = f.py(mc.risk.mean);
        if finite(mc.risk.stderr) {
            let lo = f.py(mc.risk.mean - mc.risk.stderr);
            let hi = f.py(mc.risk.mean + mc.risk.stderr);
            s.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{lo:.2}\" x2=\"{x:.2}\" y2=\"{hi:.2}\" \
                 stroke=\"#d62728\"/>\n"
            ));
        }
        s.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.2\" fill=\"#d62728\"/>\n"
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Columnar data file consumable by gnuplot: value, theory risk, mc risk,
/// mc stderr. Missing fields are written as "nan".
pub fn render_gnuplot_dat(rows: &[SweepRow]) -> String {
    let mut s = String::from("# value theory_risk mc_risk mc_risk_se\n");
    for r in rows {
        let t = r.theory.map(|t| t.risk).unwrap_or(f64::NAN);
        let (m, se) = r
            .mc
            .map(|s| (s.risk.mean, s.risk.stderr))
            .unwrap_or((f64::NAN, f64::NAN));
        s.push_str(&format!("{:.16e} {:.16e} {:.16e} {:.16e}\n", r.value, t, m, se));
    }
    s
}

pub fn write_svg(path: &str, rows: &[SweepRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(render_svg(rows).as_bytes())?;
    Ok(())
}

pub fn write_gnuplot_dat(path: &str, rows: &[SweepRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(render_gnuplot_dat(rows).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{run_sweep, SweepSpec};

    fn rows() -> Vec<SweepRow> {
        let spec = SweepSpec::from_toml(
            r#"
            axis = "overparam_ratio"
            values = [0.5, 1.0, 2.0, 4.0]
            n = 24
            sigma = 0.5
            trials = 3
            feature_cov = { kind = "identity" }
            noise_cov = { kind = "identity" }
            "#,
        )
        .unwrap();
        run_sweep(&spec).unwrap()
    }

    #[test]
    fn svg_has_threshold_marker_and_points() {
        let svg = render_svg(&rows());
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("<circle"));
        assert!(svg.contains("<polyline"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn dat_has_one_line_per_point() {
        let r = rows();
        let dat = render_gnuplot_dat(&r);
        assert_eq!(dat.lines().count(), r.len() + 1);
        // Infeasible point carries NaN columns but stays on the grid.
        assert!(dat.lines().nth(2).unwrap().to_lowercase().contains("nan"));
    }

    #[test]
    fn svg_deterministic() {
        let r = rows();
        assert_eq!(render_svg(&r), render_svg(&r));
    }
}
