//! Regime classification, theory exponents and log-log power-law fits.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, KornError, Result};
use crate::geometry::{BcMode, CurvatureClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Regime1,
    Regime2,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Regime1 => "regime1",
            Regime::Regime2 => "regime2",
        })
    }
}

/// `Regime1` iff `epsilon <= sqrt(h)`; the boundary belongs to `Regime1`.
pub fn classify_regime(h: f64, epsilon: f64) -> Result<Regime> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("must be positive, got {h}")));
    }
    if !(epsilon >= h && epsilon <= 1.0) {
        return Err(invalid("epsilon", format!("must lie in [h, 1] = [{h}, 1], got {epsilon}")));
    }
    Ok(if epsilon <= h.sqrt() { Regime::Regime1 } else { Regime::Regime2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    pub num: i32,
    pub den: i32,
}

impl Rational {
    pub const fn new(num: i32, den: i32) -> Self {
        Rational { num, den }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// `C1 ~ h^(d_log_h) epsilon^(d_log_eps)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoryExponents {
    pub d_log_h: Rational,
    pub d_log_eps: Rational,
    pub regime: Regime,
    pub class: CurvatureClass,
}

impl TheoryExponents {
    /// Predicted slope of `log C1` against `log(1/h)` along `epsilon = c h^alpha`.
    pub fn slope_along(&self, alpha: f64) -> f64 {
        -self.d_log_h.value() - alpha * self.d_log_eps.value()
    }

    pub fn evaluate(&self, h: f64, epsilon: f64) -> f64 {
        h.powf(self.d_log_h.value()) * epsilon.powf(self.d_log_eps.value())
    }
}

pub fn theory_exponents(class: CurvatureClass, regime: Regime) -> Result<TheoryExponents> {
    let (dh, de) = match (class, regime) {
        (CurvatureClass::Mixed, _) => {
            return Err(KornError::WrongCurvatureClass { required: "elliptic, hyperbolic or parabolic", found: class.to_string() })
        }
        (_, Regime::Regime1) => (Rational::new(-2, 1), Rational::new(2, 1)),
        (CurvatureClass::Elliptic, Regime::Regime2) => (Rational::new(-1, 1), Rational::new(0, 1)),
        (CurvatureClass::Hyperbolic, Regime::Regime2) => (Rational::new(-4, 3), Rational::new(2, 3)),
        (CurvatureClass::Parabolic, Regime::Regime2) => (Rational::new(-3, 2), Rational::new(1, 1)),
    };
    Ok(TheoryExponents { d_log_h: dh, d_log_eps: de, regime, class })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowSource {
    Solver,
    Ansatz,
}

impl fmt::Display for RowSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSource::Solver => "solver",
            RowSource::Ansatz => "ansatz",
        })
    }
}

/// One row of a sweep; `metadata` carries basis and quadrature sizes and is
/// not part of the CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    pub epsilon: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub source: RowSource,
    pub bc_mode: BcMode,
    pub patch: String,
    pub regime: Regime,
    pub residual: f64,
    pub wall_seconds: f64,
    #[serde(skip)]
    pub metadata: String,
    /// Whether the row passed the resolution and quadrature gates.
    #[serde(skip, default = "yes")]
    pub resolved: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitPath {
    FixedEps(f64),
    EpsPower(f64),
}

impl FitPath {
    fn contains(&self, h: f64, epsilon: f64) -> bool {
        match *self {
            FitPath::FixedEps(e0) => (epsilon - e0).abs() <= 1e-9 * e0.abs(),
            FitPath::EpsPower(alpha) => (epsilon.ln() - alpha * h.ln()).abs() <= 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_ci: (f64, f64),
    pub points: usize,
}

/// Least-squares line through `(x, y)` with a 95% confidence interval on the
/// slope. Needs at least three points; with exactly two the interval is
/// unbounded.
pub fn fit_line(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    let n = points.len();
    if n < 2 {
        return Err(KornError::Fit(format!("need at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(KornError::Fit("abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let slope_ci = if n > 2 {
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0).map_err(|e| KornError::Fit(e.to_string()))?.inverse_cdf(0.975);
        (slope - t * se, slope + t * se)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    Ok(PowerLawFit { slope, intercept, r_squared, slope_ci, points: n })
}

/// Fit of `log C1` against `log(1/h)` over the resolved rows on `path`.
pub fn fit_power_law(rows: &[SweepRow], path: FitPath) -> Result<PowerLawFit> {
    let on_path: Vec<&SweepRow> = rows.iter().filter(|r| r.resolved && path.contains(r.h, r.epsilon)).collect();
    if on_path.len() < 4 {
        return Err(KornError::Fit(format!("need at least 4 resolved rows on the path, got {}", on_path.len())));
    }
    check_single_regime(&on_path)?;
    fit_rows(&on_path)
}

/// Same fit without the minimum-size requirement, for short desk-scale sweeps.
pub fn fit_rows(rows: &[&SweepRow]) -> Result<PowerLawFit> {
    for r in rows {
        if !(r.c1 > 0.0 && r.c1.is_finite()) {
            return Err(KornError::Fit(format!("non-positive C1 {} at h = {}", r.c1, r.h)));
        }
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((1.0 / r.h).ln(), r.c1.ln())).collect();
    fit_line(&pts)
}

fn check_single_regime(rows: &[&SweepRow]) -> Result<()> {
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.regime != first.regime) {
            return Err(KornError::Fit("rows mix regime1 and regime2".into()));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    /// `beta` with the break at `epsilon ~ h^beta`.
    pub breakpoint_exponent: f64,
    pub breakpoint_epsilon: f64,
    /// Slopes of `log C1` against `log epsilon` below and above the break.
    pub slope_below: f64,
    pub slope_above: f64,
    pub rss: f64,
}

/// Continuous two-segment fit of `log C1` against `log epsilon` along rows of
/// a single `h`.
pub fn regime_crossover_report(rows: &[SweepRow]) -> Result<CrossoverReport> {
    let rows: Vec<&SweepRow> = rows.iter().filter(|r| r.resolved).collect();
    if rows.len() < 4 {
        return Err(KornError::Fit(format!("need at least 4 rows, got {}", rows.len())));
    }
    let h = rows[0].h;
    if rows.iter().any(|r| (r.h - h).abs() > 1e-12 * h) {
        return Err(KornError::Fit("crossover rows must share one thickness".into()));
    }
    let below = rows.iter().filter(|r| r.regime == Regime::Regime1).count();
    if below < 2 || rows.len() - below < 2 {
        return Err(KornError::Fit("insufficient span: need two rows in each regime".into()));
    }
    let mut pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon.ln(), r.c1.ln())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = pts[1].0;
    let hi = pts[pts.len() - 2].0;
    let mut best = (f64::INFINITY, lo);
    let scans = 400;
    for k in 0..=scans {
        let x = lo + (hi - lo) * k as f64 / scans as f64;
        let r = hinge_fit(&pts, x).3;
        if r < best.0 {
            best = (r, x);
        }
    }
    let step = (hi - lo) / scans as f64;
    let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if hinge_fit(&pts, c).3 < hinge_fit(&pts, d).3 {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    let (_, s1, s2, rss) = hinge_fit(&pts, x);
    Ok(CrossoverReport {
        breakpoint_exponent: x / h.ln(),
        breakpoint_epsilon: x.exp(),
        slope_below: s1,
        slope_above: s2,
        rss,
    })
}

/// Least squares for `y = c + s1 min(x - x0, 0) + s2 max(x - x0, 0)`.
fn hinge_fit(pts: &[(f64, f64)], x0: f64) -> (f64, f64, f64, f64) {
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut aty = nalgebra::Vector3::<f64>::zeros();
    for &(x, y) in pts {
        let row = nalgebra::Vector3::new(1.0, (x - x0).min(0.0), (x - x0).max(0.0));
        ata += row * row.transpose();
        aty += row * y;
    }
    let Some(sol) = ata.cholesky().map(|c| c.solve(&aty)) else {
        return (0.0, 0.0, 0.0, f64::INFINITY);
    };
    let rss = pts
        .iter()
        .map(|&(x, y)| (y - sol[0] - sol[1] * (x - x0).min(0.0) - sol[2] * (x - x0).max(0.0)).powi(2))
        .sum();
    (sol[0], sol[1], sol[2], rss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(h: f64, epsilon: f64, c1: f64) -> SweepRow {
        SweepRow {
            h,
            epsilon,
            c1,
            source: RowSource::Solver,
            bc_mode: BcMode::DirichletThinEdge,
            patch: "synthetic".into(),
            regime: classify_regime(h, epsilon).unwrap(),
            residual: 0.0,
            wall_seconds: 0.0,
            metadata: String::new(),
            resolved: true,
        }
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(1e-4, 1e-2).unwrap(), Regime::Regime1);
        assert_eq!(classify_regime(1e-4, 0.5).unwrap(), Regime::Regime2);
        assert!(classify_regime(1e-4, 1e-5).is_err());
        assert!(classify_regime(1e-4, 1.5).is_err());
    }

    #[test]
    fn exponent_table() {
        let p = theory_exponents(CurvatureClass::Parabolic, Regime::Regime2).unwrap();
        assert_eq!((p.d_log_h, p.d_log_eps), (Rational::new(-3, 2), Rational::new(1, 1)));
        let e = theory_exponents(CurvatureClass::Elliptic, Regime::Regime2).unwrap();
        assert_eq!((e.d_log_h.value(), e.d_log_eps.value()), (-1.0, 0.0));
        let y = theory_exponents(CurvatureClass::Hyperbolic, Regime::Regime1).unwrap();
        assert_eq!((y.d_log_h.value(), y.d_log_eps.value()), (-2.0, 2.0));
        assert!(theory_exponents(CurvatureClass::Mixed, Regime::Regime1).is_err());
        assert!((y.slope_along(0.75) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_power_laws() {
        let rows: Vec<_> = (4..9).map(|k| 0.5f64.powi(k)).map(|h| row(h, 1.0, h.powi(-2))).collect();
        let fit = fit_power_law(&rows, FitPath::FixedEps(1.0)).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let rows: Vec<_> = (4..9)
            .map(|k| 0.5f64.powi(k))
            .map(|h| {
                let e = h.powf(0.75);
                row(h, e, e * e / (h * h))
            })
            .collect();
        let fit = fit_power_law(&rows, FitPath::EpsPower(0.75)).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-10);
    }

    #[test]
    fn fit_rejects_short_or_mixed_input() {
        let rows: Vec<_> = (4..7).map(|k| 0.5f64.powi(k)).map(|h| row(h, 1.0, 1.0 / h)).collect();
        assert!(fit_power_law(&rows, FitPath::FixedEps(1.0)).is_err());
        let h = 1e-4;
        let rows: Vec<_> = [1e-3, 5e-3, 0.05, 0.5].iter().map(|&e| row(h, e, 1.0 / e)).collect();
        assert!(fit_power_law(&rows, FitPath::FixedEps(1e-3)).is_err());
    }

    #[test]
    fn crossover_of_two_branches() {
        let h = 2f64.powi(-10);
        let rows: Vec<_> = (1..=9)
            .map(|k| h.powf(k as f64 / 10.0))
            .map(|e| row(h, e, (e * e / (h * h)).min(e / h.powf(1.5))))
            .collect();
        let r = regime_crossover_report(&rows).unwrap();
        assert!((r.breakpoint_exponent - 0.5).abs() < 1e-6, "{r:?}");
        assert!((r.slope_below - 2.0).abs() < 1e-6 && (r.slope_above - 1.0).abs() < 1e-6);
        let one: Vec<_> = rows.into_iter().filter(|r| r.regime == Regime::Regime2).collect();
        assert!(regime_crossover_report(&one).is_err());
    }
}
