use korn::geometry::{make_cylinder, make_flat, ShellDomain};
use korn::quadrature::{gauss_legendre, integrate_shell, integrate_shell_gated, AxisRule, QuadratureGrid, GATE_TOLERANCE};
use korn::KornError;
use proptest::prelude::*;

proptest! {
    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1(n in 1usize..24) {
        let (x, w) = gauss_legendre(n);
        prop_assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        prop_assert!(x.windows(2).all(|p| p[0] < p[1]));
        for k in 0..2 * n {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            prop_assert!((q - exact).abs() < 1e-13, "n={n} k={k}: {q} vs {exact}");
        }
    }

    #[test]
    fn composite_rule_integrates_exponential(panels in 1usize..8, order in 7usize..12) {
        let (x, w) = AxisRule::new(panels, order).unit_nodes();
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).exp()).sum();
        prop_assert!((q - (3f64.exp() - 1.0) / 3.0).abs() < 1e-9);
    }

    #[test]
    fn slab_volume_and_moments(h in 1e-3f64..0.1, eps in 0.1f64..1.0) {
        let shell = ShellDomain::new(make_flat(eps).unwrap(), h).unwrap();
        let grid = QuadratureGrid::new(4, 4, 4);
        let vol = integrate_shell(&shell, |_, _, _| 1.0, &grid).unwrap();
        prop_assert!((vol - 2.0 * h * eps).abs() < 1e-14);
        let second = integrate_shell(&shell, |t, _, _| t * t, &grid).unwrap();
        prop_assert!((second - 2.0 * h.powi(3) * eps / 3.0).abs() < 1e-15);
        let mixed = integrate_shell(&shell, |_, theta, z| theta * z * z, &grid).unwrap();
        prop_assert!((mixed - h * eps.powi(3) / 3.0).abs() < 1e-14);
    }
}

#[test]
fn cylinder_slab_matches_surface_area() {
    let radius = 2.0;
    let shell = ShellDomain::new(make_cylinder(radius, 0.5).unwrap(), 0.01).unwrap();
    let vol = integrate_shell(&shell, |_, _, _| 1.0, &QuadratureGrid::new(4, 4, 4)).unwrap();
    // theta is arclength on [0, 1]
    let g = shell.patch.sample(0.3, 0.2);
    assert_eq!((g.a_theta.value, g.a_z.value), (1.0, 1.0));
    assert!((g.kappa_theta.value - 1.0 / radius).abs() < 1e-15);
    let area = 0.5;
    assert!((vol - 2.0 * 0.01 * area).abs() < 1e-12 * area, "{vol}");
}

#[test]
fn gate_rejects_underresolved_oscillation() {
    let shell = ShellDomain::new(make_flat(1.0).unwrap(), 0.01).unwrap();
    let f = |_: f64, theta: f64, _: f64| (40.0 * theta).sin().powi(2);
    let err = integrate_shell_gated(&shell, f, &QuadratureGrid::new(2, 4, 4), GATE_TOLERANCE).unwrap_err();
    assert!(matches!(err, KornError::QuadratureUnderresolved { .. }));
    let fine = QuadratureGrid { theta: AxisRule::new(40, 8), ..QuadratureGrid::new(2, 4, 4) };
    let v = integrate_shell_gated(&shell, f, &fine, GATE_TOLERANCE).unwrap();
    let exact = 2.0 * 0.01 * (0.5 - (80f64).sin() / 160.0);
    assert!((v - exact).abs() < 1e-12);
}
