use std::f64::consts::TAU;
use std::sync::Arc;

use korn::ansatz::{
    ansatz_report, build_ansatz, developable_pde_residual, hyperbolic_field, max_phase_bracket, max_transport_residual, solve_transport,
    AnsatzKind, Branch, BumpShape, KirchhoffField, TransportPhase,
};
use korn::geometry::{
    make_cylinder, make_developable_with_base, make_torus_band_with_span, Profile, ShellDomain, TorusSide,
};
use korn::kinematics::{
    check_thin_edge_dirichlet, default_grid, field_integrals, gradient_at, midsurface_strain_entries,
};
use proptest::prelude::*;

fn cylinder(h: f64) -> ShellDomain {
    ShellDomain::new(make_cylinder(1.0, 1.0).unwrap(), h).unwrap()
}

fn non_proportional(h: f64) -> ShellDomain {
    let patch = make_developable_with_base(
        Profile::constant(1.0),
        Profile::linear(0.0, 1.0),
        Profile::constant(1.0),
        Profile::linear(0.0, 1.0),
        1.0,
        1.0,
    )
    .unwrap();
    ShellDomain::new(patch, h).unwrap()
}

fn torus(side: TorusSide, span: f64, h: f64) -> ShellDomain {
    ShellDomain::new(make_torus_band_with_span(2.0, 1.0, side, 1.0, span).unwrap(), h).unwrap()
}

fn all_kinds(h: f64) -> Vec<(ShellDomain, AnsatzKind)> {
    vec![
        (cylinder(h), AnsatzKind::Regime1),
        (torus(TorusSide::Inner, TAU, h), AnsatzKind::Hyperbolic),
        (cylinder(h), AnsatzKind::DevelopableCase1),
        (non_proportional(h), AnsatzKind::DevelopableCase2),
    ]
}

fn field(shell: &ShellDomain, kind: AnsatzKind) -> KirchhoffField {
    build_ansatz(shell, kind, kind.default_shape()).unwrap()
}

#[test]
fn trial_fields_vanish_on_the_thin_edge() {
    for (shell, kind) in all_kinds(2f64.powi(-8)) {
        check_thin_edge_dirichlet(&shell, &field(&shell, kind)).unwrap_or_else(|e| panic!("{kind}: {e}"));
    }
}

#[test]
fn normal_strain_row_vanishes_on_the_mid_surface() {
    for (shell, kind) in all_kinds(2f64.powi(-8)) {
        let f = field(&shell, kind);
        for &(theta, s) in &[(0.31, 0.42), (0.5, 0.5), (0.66, 0.27)] {
            let (z1, z2) = shell.patch.domain.z_range(theta);
            let m = gradient_at(&shell, &f, (0.0, theta, z1 + s * (z2 - z1))).unwrap().sym();
            let row = (0..3).map(|j| m.get(0, j).abs()).fold(0.0, f64::max);
            assert!(row <= 1e-10 * m.frobenius().max(1.0), "{kind}: {row:e}");
        }
    }
}

/// Centered difference of `g` in `theta` or `z`.
fn diff(g: impl Fn(f64, f64) -> f64, theta: f64, z: f64, along_z: bool) -> f64 {
    let d = 1e-6;
    if along_z {
        (g(theta, z + d) - g(theta, z - d)) / (2.0 * d)
    } else {
        (g(theta + d, z) - g(theta - d, z)) / (2.0 * d)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn developable_fields_solve_the_in_plane_equation(theta in 0.05f64..0.95, s in 0.05f64..0.95, case2 in any::<bool>()) {
        let h = 2f64.powi(-8);
        let (shell, kind) = if case2 {
            (non_proportional(h), AnsatzKind::DevelopableCase2)
        } else {
            (cylinder(h), AnsatzKind::DevelopableCase1)
        };
        let f = field(&shell, kind);
        let (z1, z2) = shell.patch.domain.z_range(theta);
        let z = z1 + s * (z2 - z1);
        let jets = f.generating_jets(theta, z);
        let (at, az) = shell.patch.metric_at(theta, z);
        let a = shell.patch.developable().unwrap().a.value(theta);
        // oracle: same equation with derivatives by differences of the values
        let vz = diff(|t, z| f.generating_jets(t, z).v.value(), theta, z, true);
        let st = diff(|t, z| f.generating_jets(t, z).s.value(), theta, z, false);
        let scale = (at * vz).abs() + (az * st).abs() + (az * a * jets.v.value()).abs();
        prop_assume!(scale > 1e-8);
        let oracle = -at * vz - az * (st - a * jets.v.value());
        let r = developable_pde_residual(&shell, &f, theta, z).unwrap();
        prop_assert!(r.abs() <= 1e-10 * scale, "residual {r:e} scale {scale:e}");
        prop_assert!(oracle.abs() <= 1e-6 * scale, "oracle {oracle:e} scale {scale:e}");
        prop_assert!((jets.v.d_z() - vz).abs() <= 1e-6 * (1.0 + vz.abs()));
    }

    #[test]
    fn transport_phase_derivatives_match_differences(theta in 0.05f64..0.95, s in 0.05f64..0.95) {
        let shell = torus(TorusSide::Inner, TAU, 2f64.powi(-8));
        let phase = solve_transport(&shell.patch, Branch::Positive).unwrap();
        let z = s * shell.epsilon();
        let p = phase.eval(theta, z).unwrap();
        let fth = diff(|t, z| phase.eval(t, z).unwrap()[0], theta, z, false);
        let fz = diff(|t, z| phase.eval(t, z).unwrap()[0], theta, z, true);
        prop_assert!((p[1] - fth).abs() < 1e-6 * (1.0 + fth.abs()), "{} vs {fth}", p[1]);
        prop_assert!((p[2] - fz).abs() < 1e-6 * (1.0 + fz.abs()), "{} vs {fz}", p[2]);
        let ftz = diff(|t, z| phase.eval(t, z).unwrap()[1], theta, z, true);
        prop_assert!((p[4] - ftz).abs() < 1e-5 * (1.0 + ftz.abs()), "{} vs {ftz}", p[4]);
    }
}

#[test]
fn transport_phase_annihilates_the_bracket() {
    let shell = torus(TorusSide::Inner, TAU, 2f64.powi(-8));
    for branch in [Branch::Positive, Branch::Negative] {
        let phase = solve_transport(&shell.patch, branch).unwrap();
        assert!(max_transport_residual(&shell.patch, &phase, 40).unwrap() < 1e-8);
        assert!(max_phase_bracket(&shell.patch, &phase, (0.0, 1.0), 40).unwrap() < 1e-8);
    }
    let naive = TransportPhase::affine(1.0, 1.0);
    assert!(max_phase_bracket(&shell.patch, &naive, (0.0, 1.0), 40).unwrap() > 1e-2);
}

#[test]
fn naive_phase_inflates_the_shear_strain() {
    let shell = torus(TorusSide::Inner, TAU, 2f64.powi(-8));
    let shape = AnsatzKind::Hyperbolic.default_shape();
    let good = field(&shell, AnsatzKind::Hyperbolic);
    let bad = hyperbolic_field(&shell, shape, Arc::new(TransportPhase::affine(1.0, 1.0))).unwrap();
    // mid-surface shear relative to the gradient norm over the shell
    let shear = |f: &KirchhoffField| {
        let grid = default_grid(&shell, f);
        let i = field_integrals(&shell, f, &grid).unwrap();
        let mid = midsurface_strain_entries(&shell, f, &grid).unwrap();
        ((mid[5] / i.grad).sqrt(), (i.strain_entries[5] / i.grad).sqrt())
    };
    let (g, b) = (shear(&good), shear(&bad));
    assert!(b.0 > 10.0 * g.0, "transport {:e}, affine {:e}", g.0, b.0);
    assert!(b.1 > g.1);
}

#[test]
fn ratio_is_robust_to_the_envelope() {
    let shell = cylinder(2f64.powi(-8));
    let mut ratios = Vec::new();
    for shape in [BumpShape::SinePower(2), BumpShape::SinePower(4), BumpShape::Polynomial, BumpShape::Exponential] {
        let f = build_ansatz(&shell, AnsatzKind::Regime1, shape).unwrap();
        ratios.push(ansatz_report(&shell, &f, &default_grid(&shell, &f)).unwrap().ratio);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi < 10.0 * lo, "{ratios:?}");
}

#[test]
fn ratios_decrease_with_thickness() {
    for kind in [AnsatzKind::DevelopableCase1, AnsatzKind::Regime1] {
        let ratio = |h: f64| {
            let shell = cylinder(h);
            let f = field(&shell, kind);
            ansatz_report(&shell, &f, &default_grid(&shell, &f)).unwrap().ratio
        };
        let (a, b) = (ratio(2f64.powi(-6)), ratio(2f64.powi(-8)));
        assert!(b < a, "{kind}: {a} -> {b}");
    }
}

#[test]
fn kinds_reject_wrong_geometry() {
    let h = 2f64.powi(-8);
    let shape = BumpShape::SinePower(2);
    assert!(build_ansatz(&cylinder(h), AnsatzKind::Hyperbolic, shape).is_err());
    assert!(build_ansatz(&torus(TorusSide::Outer, 1.0 / 3.0, h), AnsatzKind::DevelopableCase1, shape).is_err());
    // the cylinder has a = 0, so the case 2 construction does not apply
    assert!(build_ansatz(&cylinder(h), AnsatzKind::DevelopableCase2, shape).is_err());
}
