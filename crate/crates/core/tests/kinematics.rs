use korn::geometry::{make_cylinder, make_torus_band, ShellDomain, SurfacePatch, TorusSide};
use korn::kinematics::{
    gradient_at, rigid_motion, rigid_motion_generators, CartesianField, Combination, DisplacementField, FieldValue,
    PolynomialBumpField,
};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn wavy(x: Vector3<f64>) -> Vector3<f64> {
    Vector3::new((x[0] + 2.0 * x[1]).sin(), x[0] * x[2] * x[2], x[1].cos() * x[2] + 0.3 * x[0] * x[1])
}

fn wavy_jacobian(x: Vector3<f64>) -> Matrix3<f64> {
    let c = (x[0] + 2.0 * x[1]).cos();
    Matrix3::new(
        c,
        2.0 * c,
        0.0,
        x[2] * x[2],
        0.0,
        2.0 * x[0] * x[2],
        0.3 * x[1],
        -x[1].sin() * x[2] + 0.3 * x[0],
        x[1].cos(),
    )
}

/// `Q^T DU Q` with `DU` from central differences of the Cartesian map.
fn cartesian_oracle(patch: &SurfacePatch, t: f64, theta: f64, z: f64) -> Matrix3<f64> {
    let f = patch.frame(theta, z).unwrap();
    let x = f.point(t);
    let step = 1e-5;
    let mut du = Matrix3::zeros();
    for k in 0..3 {
        let mut e = Vector3::zeros();
        e[k] = step;
        du.set_column(k, &((wavy(x + e) - wavy(x - e)) / (2.0 * step)));
    }
    let q = Matrix3::from_columns(&f.axes());
    q.transpose() * du * q
}

/// Frame components of the Cartesian map with partials by differences in
/// `(t, theta, z)`, using only the embedding.
struct DifferencedField(SurfacePatch);

impl DifferencedField {
    fn components(&self, t: f64, theta: f64, z: f64) -> [f64; 3] {
        let f = self.0.frame(theta, z).unwrap();
        let u = wavy(f.point(t));
        f.axes().map(|a| u.dot(&a))
    }
}

impl DisplacementField for DifferencedField {
    fn eval(&self, t: f64, theta: f64, z: f64) -> FieldValue {
        let step = 1e-6;
        let mut out = FieldValue { u: self.components(t, theta, z), ..Default::default() };
        for j in 0..3 {
            let mut p = [t, theta, z];
            let mut m = [t, theta, z];
            p[j] += step;
            m[j] -= step;
            let up = self.components(p[0], p[1], p[2]);
            let um = self.components(m[0], m[1], m[2]);
            for i in 0..3 {
                out.du[i][j] = (up[i] - um[i]) / (2.0 * step);
            }
        }
        out
    }
}

fn torus_shell(side: TorusSide) -> ShellDomain {
    ShellDomain::new(make_torus_band(2.0, 1.0, side, 0.4).unwrap(), 0.05).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_cartesian_oracle(theta in 0.02f64..0.98, s in 0.02f64..0.98, r in -1.0f64..1.0, inner in any::<bool>()) {
        let shell = torus_shell(if inner { TorusSide::Inner } else { TorusSide::Outer });
        let z = 0.4 * s;
        let t = r * shell.h;
        let oracle = cartesian_oracle(&shell.patch, t, theta, z);
        let analytic = CartesianField::new(&shell.patch, |x| (wavy(x), wavy_jacobian(x))).unwrap();
        let m = gradient_at(&shell, &analytic, (t, theta, z)).unwrap();
        let d = gradient_at(&shell, &DifferencedField(shell.patch.clone()), (t, theta, z)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((m.get(i, j) - oracle[(i, j)]).abs() < 1e-7, "analytic ({i},{j})");
                prop_assert!((d.get(i, j) - oracle[(i, j)]).abs() < 1e-6, "differenced ({i},{j})");
            }
        }
    }

    #[test]
    fn rigid_motions_have_no_strain(
        c in prop::array::uniform3(-1.0f64..1.0),
        w in prop::array::uniform3(-1.0f64..1.0),
        theta in 0.0f64..1.0,
        s in 0.0f64..1.0,
        r in -1.0f64..1.0,
    ) {
        let shell = torus_shell(TorusSide::Inner);
        let u = rigid_motion(&shell.patch, Vector3::from(c), Vector3::from(w)).unwrap();
        let m = gradient_at(&shell, &u, (r * shell.h, theta, 0.4 * s)).unwrap();
        prop_assert!(m.sym().frobenius() <= 1e-12 * m.frobenius().max(1e-300) + 1e-14);
    }

    #[test]
    fn gradient_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, seed in 0u64..1000) {
        let shell = ShellDomain::new(make_cylinder(1.0, 0.3).unwrap(), 0.02).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = PolynomialBumpField::random(&shell, &mut rng).unwrap();
        let v = PolynomialBumpField::random(&shell, &mut rng).unwrap();
        let p = (0.01, 0.37, 0.11);
        let gu = gradient_at(&shell, &u, p).unwrap();
        let gv = gradient_at(&shell, &v, p).unwrap();
        let combo = Combination { alpha, u: &u, beta, v: &v };
        let g = gradient_at(&shell, &combo, p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = alpha * gu.get(i, j) + beta * gv.get(i, j);
                prop_assert!((g.get(i, j) - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
            }
        }
    }
}

#[test]
fn rotation_generators_are_skew_in_the_frame() {
    let shell = torus_shell(TorusSide::Outer);
    for (k, g) in rigid_motion_generators(&shell.patch).unwrap().iter().enumerate() {
        let m = gradient_at(&shell, g, (0.5 * shell.h, 0.4, 0.2)).unwrap();
        assert!(m.sym().frobenius() < 1e-12, "generator {k}");
        if k < 3 {
            assert!(m.frobenius() < 1e-12, "translation {k} has a gradient");
        } else {
            assert!((m.frobenius() - 2f64.sqrt()).abs() < 1e-12, "rotation {k}");
        }
    }
}
