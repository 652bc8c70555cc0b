use korn::geometry::{BcMode, CurvatureClass};
use korn::scaling::{
    classify_regime, fit_line, fit_power_law, fit_rows, regime_crossover_report, theory_exponents, FitPath, Regime,
    RowSource, SweepRow,
};
use proptest::prelude::*;

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

const CLASSES: [CurvatureClass; 3] = [CurvatureClass::Elliptic, CurvatureClass::Hyperbolic, CurvatureClass::Parabolic];

proptest! {
    #[test]
    fn fixed_width_fit_recovers_exponent(s in -3.0f64..3.0, k in 0.01f64..100.0, n in 4usize..9, eps in 0.3f64..1.0) {
        let rows: Vec<_> = (0..n).map(|j| 2f64.powi(-(4 + j as i32))).map(|h| row(h, eps, k * h.powf(-s))).collect();
        let fit = fit_power_law(&rows, FitPath::FixedEps(eps)).unwrap();
        prop_assert!((fit.slope - s).abs() < 1e-10);
        prop_assert!((fit.intercept - k.ln()).abs() < 1e-9);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-12 || s.abs() < 1e-6);
        prop_assert!(fit.slope_ci.0 <= fit.slope && fit.slope <= fit.slope_ci.1);
    }

    #[test]
    fn power_path_fit_matches_theory(alpha in 0.5f64..1.0, class in 0usize..3) {
        // every h in the list keeps epsilon = h^alpha inside regime1
        let rows: Vec<_> = (0..6)
            .map(|j| 2f64.powi(-(6 + j)))
            .map(|h| {
                let e = h.powf(alpha);
                let t = theory_exponents(CLASSES[class], classify_regime(h, e).unwrap()).unwrap();
                row(h, e, 3.0 * t.evaluate(h, e))
            })
            .collect();
        let regime = rows[0].regime;
        let t = theory_exponents(CLASSES[class], regime).unwrap();
        let fit = fit_power_law(&rows, FitPath::EpsPower(alpha)).unwrap();
        prop_assert!((fit.slope - t.slope_along(alpha)).abs() < 1e-10);
    }

    #[test]
    fn exponents_match_numeric_log_derivatives(lh in -12.0f64..-1.0, frac in 0.0f64..1.0, class in 0usize..3) {
        let h = lh.exp();
        let eps = h.powf(frac);
        prop_assume!(eps >= h && eps <= 1.0);
        let regime = classify_regime(h, eps).unwrap();
        let t = theory_exponents(CLASSES[class], regime).unwrap();
        let d = 0.1f64;
        let dh = (t.evaluate(h * d.exp(), eps).ln() - t.evaluate(h / d.exp(), eps).ln()) / (2.0 * d);
        let de = (t.evaluate(h, eps * d.exp()).ln() - t.evaluate(h, eps / d.exp()).ln()) / (2.0 * d);
        prop_assert!((dh - t.d_log_h.value()).abs() < 1e-12, "{dh}");
        prop_assert!((de - t.d_log_eps.value()).abs() < 1e-12, "{de}");
    }

    #[test]
    fn regime_is_monotone_in_width(lh in -14.0f64..-1.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let h = lh.exp();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (e1, e2) = (h.powf(hi), h.powf(lo));
        let rank = |r: Regime| matches!(r, Regime::Regime2) as u8;
        prop_assert!(rank(classify_regime(h, e1).unwrap()) <= rank(classify_regime(h, e2).unwrap()));
    }

    #[test]
    fn fits_are_shift_invariant(shift in -5.0f64..5.0, seed in prop::collection::vec(-1.0f64..1.0, 5)) {
        let pts: Vec<(f64, f64)> = seed.iter().enumerate().map(|(i, y)| (i as f64, *y)).collect();
        let moved: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, y + shift)).collect();
        let (a, b) = (fit_line(&pts).unwrap(), fit_line(&moved).unwrap());
        prop_assert!((a.slope - b.slope).abs() < 1e-12);
        prop_assert!((a.intercept + shift - b.intercept).abs() < 1e-12);
    }
}

#[test]
fn theory_is_continuous_at_the_crossover() {
    for class in CLASSES {
        let one = theory_exponents(class, Regime::Regime1).unwrap();
        let two = theory_exponents(class, Regime::Regime2).unwrap();
        for k in 4..16 {
            let h = 2f64.powi(-k);
            let e = h.sqrt();
            assert!((one.evaluate(h, e) / two.evaluate(h, e) - 1.0).abs() < 1e-12, "{class:?} at h = {h}");
        }
    }
}

#[test]
fn short_fits_and_boundary_cases() {
    let rows: Vec<_> = (4..7).map(|k| 2f64.powi(-k)).map(|h| row(h, 1.0, h.powf(-1.5))).collect();
    assert!(fit_power_law(&rows, FitPath::FixedEps(1.0)).is_err());
    let refs: Vec<&SweepRow> = rows.iter().collect();
    let fit = fit_rows(&refs).unwrap();
    assert!((fit.slope - 1.5).abs() < 1e-12 && fit.points == 3);
    let two = fit_rows(&refs[..2]).unwrap();
    assert!(two.slope_ci.0.is_infinite() && two.slope_ci.1.is_infinite());
    let mut bad = rows[0].clone();
    bad.c1 = 0.0;
    assert!(fit_rows(&[&bad, &rows[1]]).is_err());
    assert_eq!(classify_regime(0.01, 0.1).unwrap(), Regime::Regime1);
}

#[test]
fn crossover_locates_a_shifted_break() {
    let h = 2f64.powi(-12);
    let beta = 0.4;
    let rows: Vec<_> = (1..=11)
        .map(|k| h.powf(k as f64 / 12.0))
        .map(|e| {
            let knee = h.powf(beta);
            let c = if e <= knee { (e / knee).powi(2) } else { e / knee };
            row(h, e, 7.0 * c)
        })
        .collect();
    let r = regime_crossover_report(&rows).unwrap();
    assert!((r.breakpoint_exponent - beta).abs() < 1e-6, "{r:?}");
    assert!((r.slope_below - 2.0).abs() < 1e-6 && (r.slope_above - 1.0).abs() < 1e-6);
    assert!(r.rss < 1e-18);
}
