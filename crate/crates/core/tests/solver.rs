use korn::ansatz::{build_ansatz, AnsatzKind};
use korn::geometry::{make_cylinder, make_flat, make_torus_band, BcMode, ShellDomain, TorusSide};
use korn::kinematics::field_integrals;
use korn::quadrature::{AxisRule, QuadratureGrid};
use korn::solver::{
    assemble, deflation_excess, korn_estimate, min_rayleigh, refine_basis, required_n_theta, trial_lower_bound,
    AssembledForms, BandMatrix, DiscreteField, ElementQuadrature, SolverConfig, TensorBasis,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Smallest eigenvalue of `S x = lambda G x` by dense Cholesky reduction.
fn dense_min(n: usize, s: &[f64], g: &[f64]) -> f64 {
    let l = DMatrix::from_row_slice(n, n, g).cholesky().unwrap().l();
    let li = l.try_inverse().unwrap();
    let c = &li * DMatrix::from_row_slice(n, n, s) * li.transpose();
    SymmetricEigen::new(c).eigenvalues.min()
}

/// Random symmetric band matrix, made positive definite by diagonal dominance.
fn band_spd(n: usize, bw: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut a = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..(i + bw + 1).min(n) {
            let v = rng.gen_range(-1.0..1.0);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[i * n + j].abs()).sum();
        a[i * n + i] = off + rng.gen_range(0.1..2.0);
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rayleigh_minimum_matches_dense_oracle(n in 8usize..70, bw in 1usize..4, seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = band_spd(n, bw, &mut rng);
        let g = band_spd(n, bw, &mut rng);
        let forms = AssembledForms::from_matrices(BandMatrix::from_dense(n, &s), BandMatrix::from_dense(n, &g)).unwrap();
        let sol = min_rayleigh(&forms, 1e-10, 2000, seed).unwrap();
        let exact = dense_min(n, &s, &g);
        prop_assert!(sol.converged);
        prop_assert!((sol.lambda - exact).abs() <= 1e-9 * exact, "{} vs {exact}", sol.lambda);
        // the eigenvector attains the quotient
        let q = forms.s_quadratic(&sol.eigvec) / forms.g_quadratic(&sol.eigvec);
        prop_assert!((q - sol.lambda).abs() <= 1e-9 * exact);
    }

    #[test]
    fn band_cholesky_solves(n in 4usize..50, bw in 1usize..5, seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = band_spd(n, bw, &mut rng);
        let m = BandMatrix::from_dense(n, &a);
        let b = random_vector(n, seed + 1);
        let mut x = b.clone();
        m.cholesky().unwrap().solve_in_place(&mut x);
        let dense = DMatrix::from_row_slice(n, n, &a).lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..n {
            prop_assert!((x[i] - dense[i]).abs() <= 1e-10 * (1.0 + dense[i].abs()));
        }
    }
}

fn small_cylinder(bc: BcMode) -> ShellDomain {
    ShellDomain::new(make_cylinder(1.0, 1.0).unwrap(), 1.0 / 16.0).unwrap().with_bc(bc)
}

#[test]
fn assembled_forms_match_field_integrals() {
    let shells = [
        small_cylinder(BcMode::DirichletThinEdge),
        ShellDomain::new(make_torus_band(2.0, 1.0, TorusSide::Outer, 0.25).unwrap(), 0.02).unwrap(),
        small_cylinder(BcMode::Free),
    ];
    for shell in &shells {
        let basis = TensorBasis::new(2, 10, 6, shell.bc).unwrap();
        let quad = ElementQuadrature::for_basis(&basis);
        let forms = assemble(shell, &basis, quad).unwrap();
        for seed in 0..3 {
            let x = random_vector(basis.dimension(), seed);
            let field = DiscreteField::new(shell, basis, x.clone()).unwrap();
            let grid = QuadratureGrid {
                t: AxisRule::new(1, quad.t),
                theta: AxisRule::new(basis.theta.elements, quad.theta),
                z: AxisRule::new(basis.z.elements, quad.z),
            };
            let i = field_integrals(shell, &field, &grid).unwrap();
            let (s, g) = (forms.s.quadratic(&x), forms.g.quadratic(&x));
            assert!((s - i.strain).abs() <= 1e-10 * i.strain, "{}: S {s} vs {}", shell.patch.id, i.strain);
            assert!((g - i.grad).abs() <= 1e-10 * i.grad, "{}: G {g} vs {}", shell.patch.id, i.grad);
            assert!(s <= g * (1.0 + 1e-12));
        }
    }
}

#[test]
fn gradient_form_is_positive_definite() {
    let shell = small_cylinder(BcMode::DirichletThinEdge);
    let basis = TensorBasis::new(2, 8, 6, shell.bc).unwrap();
    let forms = assemble(&shell, &basis, ElementQuadrature::for_basis(&basis)).unwrap();
    assert!(forms.g.cholesky().is_ok());
    let mass = forms.mass.as_ref().unwrap();
    assert!(mass.cholesky().is_ok());
    for seed in 0..10 {
        let x = random_vector(basis.dimension(), seed);
        assert!(forms.g.quadratic(&x) > 0.0 && forms.s.quadratic(&x) > 0.0);
    }
}

/// Clamped uniform knots and the Greville abscissae of the full space.
fn greville(axis: korn::solver::SplineAxis) -> Vec<f64> {
    let p = axis.degree as isize;
    let knot = |i: isize| ((i - p).max(0) as f64 / axis.elements as f64).min(1.0);
    (0..axis.full_count() as isize).map(|i| (1..=p).map(|j| knot(i + j)).sum::<f64>() / p as f64).collect()
}

#[test]
fn deflation_removes_infinitesimal_rotations() {
    let h = 0.05;
    let shell = ShellDomain::new(make_flat(0.5).unwrap(), h).unwrap().with_bc(BcMode::Free);
    let basis = TensorBasis::new(1, 7, 6, BcMode::Free).unwrap();
    let forms = assemble(&shell, &basis, ElementQuadrature::for_basis(&basis)).unwrap();
    let (gt, gz) = (greville(basis.theta), greville(basis.z));
    // u = M (t, theta, z) with M skew, represented exactly by the basis
    for (a, b, w) in [(0usize, 1usize, 1.0), (0, 2, -0.7), (1, 2, 0.4)] {
        let mut m = [[0.0f64; 3]; 3];
        m[a][b] = w;
        m[b][a] = -w;
        let mut x = vec![0.0; basis.dimension()];
        for (it, th) in gt.iter().enumerate() {
            for (iz, s) in gz.iter().enumerate() {
                let z = 0.5 * s;
                for c in 0..3 {
                    x[basis.index(it, iz, c, 0)] = m[c][1] * th + m[c][2] * z + 0.3;
                    x[basis.index(it, iz, c, 1)] = m[c][0] * h;
                }
            }
        }
        let g = forms.g.quadratic(&x);
        assert!(g > 1e-3);
        assert!(forms.s_quadratic(&x) < 1e-12 * g, "strain {:e} of {g:e}", forms.s_quadratic(&x));
        assert!(forms.g_quadratic(&x).abs() < 1e-8 * g, "deflated {:e} of {g:e}", forms.g_quadratic(&x));
    }
    let vectors: Vec<Vec<f64>> = (0..20).map(|s| random_vector(basis.dimension(), s)).collect();
    assert!(deflation_excess(&forms, &vectors) <= 1e-12);
}

#[test]
fn estimate_is_deterministic_and_seed_independent() {
    let shell = small_cylinder(BcMode::DirichletThinEdge);
    let config = SolverConfig { n_theta: 16, n_z: 8, ..SolverConfig::default() };
    let a = korn_estimate(&shell, &config).unwrap();
    let b = korn_estimate(&shell, &config).unwrap();
    assert_eq!(a.c1.to_bits(), b.c1.to_bits());
    assert_eq!(a.eigvec, b.eigvec);
    let c = korn_estimate(&shell, &SolverConfig { seed: 99, ..config }).unwrap();
    assert!((a.c1 - c.c1).abs() <= 1e-8 * a.c1, "{} vs {}", a.c1, c.c1);
    assert!(a.converged && a.residual < 1e-6);
    assert!(a.quadrature_change < 1e-6);
    assert_eq!(a.required_n_theta, required_n_theta(&shell));
    assert_eq!(a.required_n_theta, 16);
    assert!(a.resolved);
}

#[test]
fn trial_bound_and_refinement_bracket_the_constant() {
    let shell = small_cylinder(BcMode::DirichletThinEdge);
    let config = SolverConfig { n_theta: 16, n_z: 8, ..SolverConfig::default() };
    let basis = config.basis(shell.bc).unwrap();
    let forms = assemble(&shell, &basis, ElementQuadrature::for_basis(&basis)).unwrap();
    let est = korn::solver::estimate_from_forms(&shell, &forms, &config).unwrap();
    for kind in [AnsatzKind::Regime1, AnsatzKind::DevelopableCase1] {
        let field = build_ansatz(&shell, kind, kind.default_shape()).unwrap();
        match trial_lower_bound(&shell, &forms, &field) {
            Ok(t) => assert!(t.value <= est.c1 * (1.0 + 1e-9), "{kind}: {} > {}", t.value, est.c1),
            Err(korn::KornError::ProjectionResidual { .. }) => {}
            Err(e) => panic!("{kind}: {e}"),
        }
    }
    let fine = refine_basis(&basis);
    let fine_forms = assemble(&shell, &fine, ElementQuadrature::for_basis(&fine)).unwrap();
    let refined = korn::solver::estimate_from_forms(&shell, &fine_forms, &config).unwrap();
    assert!(refined.c1 >= est.c1 * (1.0 - 1e-9), "{} < {}", refined.c1, est.c1);
}
