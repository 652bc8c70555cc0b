//! Log-log SVG plots of `C1` against `1/h`.

use std::f64::consts::LN_10;
use std::fmt::Write as _;
use std::path::Path;

use korn::scaling::{PowerLawFit, SweepRow};

use crate::config::Stamp;
use crate::error::{CliError, Result};
use crate::output::write_text;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 610.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 370.0;

/// Theory slope drawn as a dashed guide through the centroid of the data.
#[derive(Clone, Debug, PartialEq)]
pub struct Guide {
    pub slope: f64,
    pub label: String,
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (RIGHT - LEFT)
    }

    fn py(&self, y: f64) -> f64 {
        BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (BOTTOM - TOP)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.08 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn label_inverse_h(x: f64) -> String {
    let v = 10f64.powf(x);
    if (v - v.round()).abs() < 1e-6 * v {
        format!("{}", v.round())
    } else {
        format!("{v:.3}")
    }
}

fn half_width(fit: &PowerLawFit) -> String {
    let w = 0.5 * (fit.slope_ci.1 - fit.slope_ci.0);
    if w.is_finite() {
        format!("{w:.3}")
    } else {
        "inf".into()
    }
}

/// SVG text of the plot. Identical inputs give identical bytes.
pub fn render_svg(rows: &[SweepRow], fit: &PowerLawFit, guide: Option<&Guide>, title: &str, stamp: &Stamp) -> Result<String> {
    if rows.len() < 2 {
        return Err(CliError::check(format!("plot needs at least 2 rows, got {}", rows.len())));
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((1.0 / r.h).log10(), r.c1.log10())).collect();
    if pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(CliError::check("plot needs positive h and C1"));
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        pts.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x_lo, x_hi) = fold(|p| p.0);
    let (y_lo, y_hi) = fold(|p| p.1);
    let fit_at = |x: f64| fit.intercept / LN_10 + fit.slope * x;
    let y_lo = y_lo.min(fit_at(x_lo)).min(fit_at(x_hi));
    let y_hi = y_hi.max(fit_at(x_lo)).max(fit_at(x_hi));
    let axes = Axes { x: padded(x_lo, x_hi), y: padded(y_lo, y_hi) };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<!-- config_hash={} seed={} -->", stamp.config_hash, stamp.seed);
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="area"><rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}"/></clipPath></defs>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#, (LEFT + RIGHT) / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );

    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    for x in xs {
        let px = axes.px(x);
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{BOTTOM}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, BOTTOM + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, BOTTOM + 19.0, label_inverse_h(x));
    }
    let mut decades: Vec<i32> = (axes.y.0.ceil() as i32..=axes.y.1.floor() as i32).collect();
    if decades.is_empty() {
        decades.push(((axes.y.0 + axes.y.1) / 2.0).round() as i32);
    }
    for k in decades {
        let py = axes.py(k as f64);
        if !(TOP..=BOTTOM).contains(&py) {
            continue;
        }
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{k}</text>"#, LEFT - 8.0, py + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">1/h</text>"#, (LEFT + RIGHT) / 2.0, BOTTOM + 38.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">C1</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    );

    let _ = writeln!(s, r#"<g clip-path="url(#area)">"#);
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f77b4" stroke-width="2"/>"##,
        axes.px(x_lo),
        axes.py(fit_at(x_lo)),
        axes.px(x_hi),
        axes.py(fit_at(x_hi))
    );
    if let Some(g) = guide {
        let n = pts.len() as f64;
        let (cx, cy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
        let (gx0, gx1) = axes.x;
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
            axes.px(gx0),
            axes.py(cy + g.slope * (gx0 - cx)),
            axes.px(gx1),
            axes.py(cy + g.slope * (gx1 - cx))
        );
    }
    for &(x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#, axes.px(x), axes.py(y));
    }
    let _ = writeln!(s, "</g>");

    let ly = TOP + 18.0;
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f77b4" stroke-width="2"/>"##,
        LEFT + 10.0,
        ly - 4.0,
        LEFT + 34.0,
        ly - 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{ly:.2}">fit slope {:.3} ± {} (95% CI), R² = {:.4}, n = {}</text>"#,
        LEFT + 40.0,
        fit.slope,
        half_width(fit),
        fit.r_squared,
        fit.points
    );
    if let Some(g) = guide {
        let ly = ly + 18.0;
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
            LEFT + 10.0,
            ly - 4.0,
            LEFT + 34.0,
            ly - 4.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">theory slope {}</text>"#, LEFT + 40.0, escape(&g.label));
    }
    let _ = writeln!(
        s,
        r##"<text x="{WIDTH}" y="{:.2}" dx="-8" text-anchor="end" font-size="9" fill="#555">config {} seed {}</text>"##,
        HEIGHT - 8.0,
        stamp.config_hash,
        stamp.seed
    );
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

/// Writes [`render_svg`] to `path`.
pub fn emit_plot(
    rows: &[SweepRow],
    fit: &PowerLawFit,
    guide: Option<&Guide>,
    title: &str,
    stamp: &Stamp,
    path: &Path,
) -> Result<()> {
    let svg = render_svg(rows, fit, guide, title, stamp)?;
    write_text(path, &svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use korn::geometry::BcMode;
    use korn::scaling::{fit_rows, Regime, RowSource};

    fn row(h: f64, c1: f64) -> SweepRow {
        SweepRow {
            h,
            epsilon: 1.0,
            c1,
            source: RowSource::Ansatz,
            bc_mode: BcMode::DirichletThinEdge,
            patch: "cylinder".into(),
            regime: Regime::Regime2,
            residual: 0.0,
            wall_seconds: 0.0,
            metadata: String::new(),
            resolved: true,
        }
    }

    #[test]
    fn two_points_give_one_segment_and_stable_bytes() {
        let rows = [row(0.5, 2.0), row(0.25, 5.0)];
        let fit = fit_rows(&rows.iter().collect::<Vec<_>>()).unwrap();
        let stamp = Stamp { config_hash: "h".into(), seed: 1 };
        let a = render_svg(&rows, &fit, None, "t", &stamp).unwrap();
        let b = render_svg(&rows, &fit, None, "t", &stamp).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("stroke-width=\"2\"").count(), 2);
        assert!(a.contains("± inf"));
        assert!(a.contains("config_hash=h seed=1"));
    }

    #[test]
    fn empty_rows_are_rejected() {
        let fit = PowerLawFit { slope: 1.0, intercept: 0.0, r_squared: 1.0, slope_ci: (1.0, 1.0), points: 0 };
        let stamp = Stamp { config_hash: "h".into(), seed: 1 };
        assert!(render_svg(&[], &fit, None, "t", &stamp).is_err());
    }

    #[test]
    fn guide_is_dashed_and_labeled() {
        let rows: Vec<SweepRow> = (4..8).map(|k| row(0.5f64.powi(k), 2f64.powf(1.5 * k as f64))).collect();
        let fit = fit_rows(&rows.iter().collect::<Vec<_>>()).unwrap();
        let stamp = Stamp { config_hash: "h".into(), seed: 1 };
        let g = Guide { slope: 1.5, label: "3/2".into() };
        let svg = render_svg(&rows, &fit, Some(&g), "t", &stamp).unwrap();
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("theory slope 3/2"));
        assert!(svg.contains("fit slope 1.500"));
    }
}
