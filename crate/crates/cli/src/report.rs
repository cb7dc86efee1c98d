//! Machine-readable outputs: CSV tables, the JSON report record, and
//! dependency-free SVG line plots.
//!
//! CSV: UTF-8, comma separators, one header row, LF line endings, `.`
//! decimal point. Floating-point values carry 17 significant digits
//! (`{:.16e}`), enough to round-trip any f64 bit-exactly.

use serde::{Deserialize, Serialize};

use randwave_core::experiments::{SoggeRow, SweepOutcome, TailReport, UniformReport, WeylRow};
use randwave_core::spectral::KernelProfile;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Format a float with 17 significant digits (bit-faithful round trip).
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// The JSON report: schema version, config echo, provenance, result rows.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportRecord {
    pub schema_version: u32,
    pub experiment: String,
    pub config: RunConfig,
    pub provenance: Provenance,
    pub rows: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub code_version: String,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

pub fn weyl_csv(rows: &[WeylRow]) -> String {
    let mut out = String::from("lambda,n_modes,remainder,sup_pointwise,remainder_over_lambda\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(r.lambda),
            r.dimension,
            fmt(r.remainder),
            fmt(r.sup_pointwise),
            fmt(r.remainder_over_lambda)
        ));
    }
    out
}

pub fn sweep_csv(rows: &[SweepOutcome]) -> String {
    let mut out = String::from(
        "status,lambda,width,radius,n_modes,e_closed,e_mc,target,var_exact,var_mc,var_large_n,var_ratio\n",
    );
    for row in rows {
        match row {
            SweepOutcome::Row(r) => out.push_str(&format!(
                "ok,{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt(r.lambda),
                fmt(r.width),
                fmt(r.radius),
                r.dimension,
                fmt(r.e_closed),
                fmt(r.e_mc),
                fmt(r.target),
                fmt(r.var_exact),
                fmt(r.var_mc),
                fmt(r.var_large_n),
                fmt(r.var_ratio)
            )),
            SweepOutcome::EmptyWindow { lambda, width } => out.push_str(&format!(
                "empty_window,{},{},,,,,,,,,\n",
                fmt(*lambda),
                fmt(*width)
            )),
        }
    }
    out
}

pub fn tail_csv(report: &TailReport) -> String {
    let mut out = String::from("t,empirical,levy_bound,n_samples\n");
    for ((t, e), b) in report
        .thresholds
        .iter()
        .zip(&report.empirical)
        .zip(&report.levy_bound)
    {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(*t),
            fmt(*e),
            fmt(*b),
            report.n_samples
        ));
    }
    out
}

/// Per-ball rows including the centers (the centers come from the cover).
pub fn uniform_csv_with_centers(
    reports: &[(UniformReport, Vec<randwave_core::manifold::Point>)],
) -> String {
    let mut out = String::from("lambda,ball_index,center_a,center_b,deviation_rate\n");
    for (rep, centers) in reports {
        for (i, (rate, c)) in rep.per_ball_rates.iter().zip(centers).enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt(rep.lambda),
                i,
                fmt(c.a),
                fmt(c.b),
                fmt(*rate)
            ));
        }
    }
    out
}

pub fn profile_csv(p: &KernelProfile) -> String {
    let mut out = String::from("separation,value,envelope\n");
    for ((s, v), b) in p.separations.iter().zip(&p.values).zip(&p.bound_values) {
        out.push_str(&format!("{},{},{}\n", fmt(*s), fmt(*v), fmt(*b)));
    }
    out
}

pub fn sogge_csv(rows: &[SoggeRow]) -> String {
    let mut out = String::from("radius,lambda_max,ratio,n_modes\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt(r.radius),
            fmt(r.lambda_max),
            fmt(r.ratio),
            r.dimension
        ));
    }
    out
}

/// Minimal SVG line plot: axes, tick labels, one polyline per series, and a
/// text legend. Log axes take base-10 logs of the (positive) data.
pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<(&'a str, Vec<(f64, f64)>)>,
}

const PLOT_COLORS: [&str; 4] = ["#1f6fb2", "#c44e52", "#55a868", "#8172b2"];

pub fn svg_plot(spec: &PlotSpec) -> String {
    let (w, h) = (800.0, 560.0);
    let (ml, mr, mt, mb) = (80.0, 30.0, 50.0, 70.0);
    let transform = |v: f64, log: bool| -> Option<f64> {
        if log {
            if v > 0.0 {
                Some(v.log10())
            } else {
                None
            }
        } else {
            Some(v)
        }
    };

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (_, pts) in &spec.series {
        for &(x, y) in pts {
            if let (Some(tx), Some(ty)) = (transform(x, spec.log_x), transform(y, spec.log_y)) {
                xs.push(tx);
                ys.push(ty);
            }
        }
    }
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let sx = |v: f64| ml + (v - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |v: f64| h - mb - (v - y0) / (y1 - y0) * (h - mt - mb);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"monospace\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        w / 2.0,
        escape(spec.title)
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb
    ));
    // ticks
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let label_x = if spec.log_x { pow10(fx) } else { fx };
        let label_y = if spec.log_y { pow10(fy) } else { fy };
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n\
             <text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
            sx(fx),
            h - mb,
            h - mb + 6.0,
            h - mb + 22.0,
            format_tick(label_x)
        ));
        svg.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>\n\
             <text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{5}</text>\n",
            sy(fy),
            ml - 6.0,
            ml,
            ml - 10.0,
            sy(fy) + 4.0,
            format_tick(label_y)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (ml + w - mr) / 2.0,
        h - 18.0,
        escape(spec.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>\n",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0,
        escape(spec.y_label)
    ));
    // series
    for (si, (name, pts)) in spec.series.iter().enumerate() {
        let color = PLOT_COLORS[si % PLOT_COLORS.len()];
        let mut path = String::new();
        for &(x, y) in pts {
            if let (Some(tx), Some(ty)) = (transform(x, spec.log_x), transform(y, spec.log_y)) {
                path.push_str(&format!("{:.2},{:.2} ", sx(tx), sy(ty)));
            }
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.trim_end()
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            w - mr - 220.0,
            mt + 18.0 * (si as f64 + 1.0),
            escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn span(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn pow10(x: f64) -> f64 {
    10f64.powf(x)
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 0.01 && v.abs() < 10000.0 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips_bit_exactly() {
        for &x in &[
            0.1,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            -4.9e-324,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let spec = PlotSpec {
            title: "test",
            x_label: "x",
            y_label: "y",
            log_x: true,
            log_y: true,
            series: vec![("a", vec![(1.0, 1.0), (10.0, 0.1), (100.0, 0.01)])],
        };
        let svg = svg_plot(&spec);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("polyline"));
        assert_eq!(svg.matches('<').count(), svg.matches('>').count());
    }
}
