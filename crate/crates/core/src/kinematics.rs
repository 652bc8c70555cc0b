//! Shell gradient, simplified gradient and weighted norms of displacement fields.
//!
//! Displacements are given by their frame components `(u_t, u_theta, u_z)`
//! in the frame `(n, e_theta, e_z)` with first partials in `(t, theta, z)`.
//! Matrices are indexed `(component, direction)` in the same order.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, KornError, Result};
use crate::geometry::{frame_derivatives, PrincipalSample, ShellDomain, SurfacePatch};
use crate::quadrature::{gated, integrate_columns, integrate_surface, relative_change, Oscillation, QuadratureGrid};

/// Frame components and their partials at a point: `du[i][j] = d u_i / d x_j`
/// with `x = (t, theta, z)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldValue {
    pub u: [f64; 3],
    pub du: [[f64; 3]; 3],
}

impl FieldValue {
    pub fn scale(&self, s: f64) -> Self {
        FieldValue { u: self.u.map(|x| x * s), du: self.du.map(|r| r.map(|x| x * s)) }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..3 {
            out.u[i] += other.u[i];
            for j in 0..3 {
                out.du[i][j] += other.du[i][j];
            }
        }
        out
    }

    pub fn magnitude(&self) -> f64 {
        self.u.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// A displacement field with analytic first derivatives.
pub trait DisplacementField: Send + Sync {
    fn eval(&self, t: f64, theta: f64, z: f64) -> FieldValue;

    /// Evaluates a column of normal offsets at one surface point.
    fn eval_column(&self, theta: f64, z: f64, ts: &[f64], out: &mut Vec<FieldValue>) {
        out.clear();
        out.extend(ts.iter().map(|&t| self.eval(t, theta, z)));
    }

    /// Declared oscillation scale, used to choose quadrature panels.
    fn oscillation(&self) -> Oscillation {
        Oscillation::default()
    }
}

impl<T: DisplacementField + ?Sized> DisplacementField for &T {
    fn eval(&self, t: f64, theta: f64, z: f64) -> FieldValue {
        (**self).eval(t, theta, z)
    }
    fn eval_column(&self, theta: f64, z: f64, ts: &[f64], out: &mut Vec<FieldValue>) {
        (**self).eval_column(theta, z, ts, out)
    }
    fn oscillation(&self) -> Oscillation {
        (**self).oscillation()
    }
}

impl<T: DisplacementField + ?Sized> DisplacementField for Box<T> {
    fn eval(&self, t: f64, theta: f64, z: f64) -> FieldValue {
        (**self).eval(t, theta, z)
    }
    fn eval_column(&self, theta: f64, z: f64, ts: &[f64], out: &mut Vec<FieldValue>) {
        (**self).eval_column(theta, z, ts, out)
    }
    fn oscillation(&self) -> Oscillation {
        (**self).oscillation()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroField;

impl DisplacementField for ZeroField {
    fn eval(&self, _t: f64, _theta: f64, _z: f64) -> FieldValue {
        FieldValue::default()
    }
}

/// `alpha u + beta v`.
pub struct Combination<A, B> {
    pub alpha: f64,
    pub u: A,
    pub beta: f64,
    pub v: B,
}

impl<A: DisplacementField, B: DisplacementField> DisplacementField for Combination<A, B> {
    fn eval(&self, t: f64, theta: f64, z: f64) -> FieldValue {
        self.u.eval(t, theta, z).scale(self.alpha).add(&self.v.eval(t, theta, z).scale(self.beta))
    }
    fn oscillation(&self) -> Oscillation {
        let (a, b) = (self.u.oscillation(), self.v.oscillation());
        Oscillation { theta: a.theta.max(b.theta), z: a.z.max(b.z) }
    }
}

/// A 3x3 matrix in the `(n, e_theta, e_z)` frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameMatrix(pub Matrix3<f64>);

impl FrameMatrix {
    pub fn zeros() -> Self {
        FrameMatrix(Matrix3::zeros())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn sym(&self) -> Self {
        FrameMatrix((self.0 + self.0.transpose()) * 0.5)
    }

    pub fn transpose(&self) -> Self {
        FrameMatrix(self.0.transpose())
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }
}

impl Add for FrameMatrix {
    type Output = FrameMatrix;
    fn add(self, rhs: FrameMatrix) -> FrameMatrix {
        FrameMatrix(self.0 + rhs.0)
    }
}

impl Sub for FrameMatrix {
    type Output = FrameMatrix;
    fn sub(self, rhs: FrameMatrix) -> FrameMatrix {
        FrameMatrix(self.0 - rhs.0)
    }
}

impl Mul<f64> for FrameMatrix {
    type Output = FrameMatrix;
    fn mul(self, rhs: f64) -> FrameMatrix {
        FrameMatrix(self.0 * rhs)
    }
}

/// Shift factors `(1 + t kappa_theta, 1 + t kappa_z)`, rejecting degenerate values.
#[inline]
pub fn shift_factors(g: &PrincipalSample, t: f64) -> Result<(f64, f64)> {
    let s1 = 1.0 + t * g.kappa_theta.value;
    let s2 = 1.0 + t * g.kappa_z.value;
    for s in [s1, s2] {
        if s.abs() < 1e-12 {
            return Err(KornError::DegenerateShift { t, value: s });
        }
    }
    Ok((s1, s2))
}

/// The simplified matrix `B`: the shell gradient without the shift factors.
#[inline]
pub fn simplified_b_from(v: &FieldValue, g: &PrincipalSample) -> FrameMatrix {
    let at = g.a_theta.value;
    let az = g.a_z.value;
    let kt = g.kappa_theta.value;
    let kz = g.kappa_z.value;
    let at_z = g.a_theta.d_z;
    let az_t = g.a_z.d_theta;
    let [ut, uth, uz] = v.u;
    let d = &v.du;
    let aa = at * az;
    FrameMatrix(Matrix3::new(
        d[0][0],
        (d[0][1] - at * kt * uth) / at,
        (d[0][2] - az * kz * uz) / az,
        d[1][0],
        (az * d[1][1] + aa * kt * ut + at_z * uz) / aa,
        (at * d[1][2] - az_t * uz) / aa,
        d[2][0],
        (az * d[2][1] - at_z * uth) / aa,
        (at * d[2][2] + aa * kz * ut + az_t * uth) / aa,
    ))
}

/// The shell gradient at normal offset `t`.
#[inline]
pub fn gradient_from(v: &FieldValue, g: &PrincipalSample, t: f64) -> Result<FrameMatrix> {
    let (s1, s2) = shift_factors(g, t)?;
    let mut m = simplified_b_from(v, g).0;
    for i in 0..3 {
        m[(i, 1)] /= s1;
        m[(i, 2)] /= s2;
    }
    Ok(FrameMatrix(m))
}

pub fn gradient_at(shell: &ShellDomain, field: &dyn DisplacementField, point: (f64, f64, f64)) -> Result<FrameMatrix> {
    let (t, theta, z) = point;
    let g = shell.patch.sample(theta, z);
    gradient_from(&field.eval(t, theta, z), &g, t)
}

pub fn simplified_b_at(shell: &ShellDomain, field: &dyn DisplacementField, point: (f64, f64, f64)) -> Result<FrameMatrix> {
    let (t, theta, z) = point;
    let g = shell.patch.sample(theta, z);
    shift_factors(&g, t)?;
    Ok(simplified_b_from(&field.eval(t, theta, z), &g))
}

/// Frame components of a Cartesian displacement `U(x)` given with its
/// Jacobian `DU(x)`. Requires an embedded patch.
pub struct CartesianField<F> {
    patch: SurfacePatch,
    map: F,
}

impl<F> CartesianField<F>
where
    F: Fn(Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) + Send + Sync,
{
    pub fn new(patch: &SurfacePatch, map: F) -> Result<Self> {
        patch.frame(0.5, patch.domain.z_range(0.5).0)?;
        Ok(CartesianField { patch: patch.clone(), map })
    }
}

impl<F> DisplacementField for CartesianField<F>
where
    F: Fn(Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) + Send + Sync,
{
    fn eval(&self, t: f64, theta: f64, z: f64) -> FieldValue {
        let frame = self.patch.frame(theta, z).expect("embedding checked at construction");
        let g = self.patch.sample(theta, z);
        let (d_theta, d_z) = frame_derivatives(&frame, &g);
        let (u, du) = (self.map)(frame.point(t));
        let dx = [
            frame.n,
            frame.e_theta * (g.a_theta.value * (1.0 + t * g.kappa_theta.value)),
            frame.e_z * (g.a_z.value * (1.0 + t * g.kappa_z.value)),
        ];
        let axes = frame.axes();
        let mut out = FieldValue::default();
        for i in 0..3 {
            out.u[i] = u.dot(&axes[i]);
            for j in 0..3 {
                out.du[i][j] = (du * dx[j]).dot(&axes[i]);
            }
            out.du[i][1] += u.dot(&d_theta[i]);
            out.du[i][2] += u.dot(&d_z[i]);
        }
        out
    }
}

/// Cartesian rigid motion `c + omega x X`.
pub fn rigid_motion(
    patch: &SurfacePatch,
    translation: Vector3<f64>,
    rotation: Vector3<f64>,
) -> Result<CartesianField<impl Fn(Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) + Send + Sync>> {
    let skew = rotation.cross_matrix();
    CartesianField::new(patch, move |x: Vector3<f64>| (translation + rotation.cross(&x), skew))
}

/// The six generators: three translations, then three rotations about the axes.
pub fn rigid_motion_generators(
    patch: &SurfacePatch,
) -> Result<Vec<CartesianField<impl Fn(Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) + Send + Sync>>> {
    let mut out = Vec::with_capacity(6);
    for k in 0..6 {
        let mut c = Vector3::zeros();
        let mut w = Vector3::zeros();
        if k < 3 {
            c[k] = 1.0;
        } else {
            w[k - 3] = 1.0;
        }
        out.push(rigid_motion(patch, c, w)?);
    }
    Ok(out)
}

/// `x^2 (1-x)^2 (p + q x)`: vanishes with its first derivative at 0 and 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuinticBump {
    pub p: f64,
    pub q: f64,
}

impl QuinticBump {
    /// Value and first derivative.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let b = x * x * (1.0 - x) * (1.0 - x);
        let db = 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
        let l = self.p + self.q * x;
        (b * l, db * l + b * self.q)
    }
}

/// Random Dirichlet field: each component is
/// `P_i(theta) Q_i((z - z1)/(z2 - z1)) (1 + c_i t / h)` with quintic bumps.
#[derive(Clone, Debug)]
pub struct PolynomialBumpField {
    z1: f64,
    width: f64,
    h: f64,
    theta_bumps: [QuinticBump; 3],
    z_bumps: [QuinticBump; 3],
    t_slopes: [f64; 3],
    amplitudes: [f64; 3],
}

impl PolynomialBumpField {
    pub fn random(shell: &ShellDomain, rng: &mut impl Rng) -> Result<Self> {
        let (z1, z2) = shell
            .patch
            .domain
            .rectangle()
            .ok_or_else(|| invalid("patch", "bump fields need constant z-limits"))?;
        fn bump(rng: &mut impl Rng) -> QuinticBump {
            QuinticBump { p: rng.gen_range(0.5..1.5), q: rng.gen_range(-1.0..1.0) }
        }
        let theta_bumps = [bump(rng), bump(rng), bump(rng)];
        let z_bumps = [bump(rng), bump(rng), bump(rng)];
        let t_slopes = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let amplitudes = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        Ok(PolynomialBumpField { z1, width: z2 - z1, h: shell.h, theta_bumps, z_bumps, t_slopes, amplitudes })
    }

    /// A copy whose `theta`-profiles do not vanish at `theta = 0`.
    pub fn with_edge_leak(mut self, component: usize) -> Self {
        self.theta_bumps[component] = QuinticBump { p: f64::NAN, q: 0.0 };
        self
    }
}

impl DisplacementField for PolynomialBumpField {
    fn eval(&self, t: f64, theta: f64, z: f64) -> FieldValue {
        let s = (z - self.z1) / self.width;
        let mut out = FieldValue::default();
        for i in 0..3 {
            let (p, dp) = if self.theta_bumps[i].p.is_nan() {
                // (1 - theta)^2: nonzero on the theta = 0 edge
                ((1.0 - theta) * (1.0 - theta), -2.0 * (1.0 - theta))
            } else {
                self.theta_bumps[i].eval(theta)
            };
            let (q, dq) = self.z_bumps[i].eval(s);
            let lin = 1.0 + self.t_slopes[i] * t / self.h;
            let a = self.amplitudes[i];
            out.u[i] = a * p * q * lin;
            out.du[i] = [a * p * q * self.t_slopes[i] / self.h, a * dp * q * lin, a * p * dq / self.width * lin];
        }
        out
    }
}

/// Largest `|u|` over the thin edge, sampled at `samples` points per edge and
/// three normal offsets.
pub fn thin_edge_magnitude(shell: &ShellDomain, field: &dyn DisplacementField, samples: usize) -> (f64, f64, f64) {
    let mut worst = (0.0, 0.0, 0.0);
    let mut check = |theta: f64, z: f64| {
        let (lo, hi) = shell.t_range(theta, z);
        for t in [lo, 0.0, hi] {
            let m = field.eval(t, theta, z).magnitude();
            if m > worst.0 {
                worst = (m, theta, z);
            }
        }
    };
    let n = samples.max(2);
    for k in 0..n {
        let s = k as f64 / (n - 1) as f64;
        for theta in [0.0, 1.0] {
            let (z1, z2) = shell.patch.domain.z_range(theta);
            check(theta, z1 + s * (z2 - z1));
        }
        let (z1, z2) = shell.patch.domain.z_range(s);
        check(s, z1);
        check(s, z2);
    }
    worst
}

/// Fails with [`KornError::BoundaryViolation`] when the field does not vanish
/// on the thin edge to `1e-12`.
pub fn check_thin_edge_dirichlet(shell: &ShellDomain, field: &dyn DisplacementField) -> Result<()> {
    let (magnitude, theta, z) = thin_edge_magnitude(shell, field, 65);
    if magnitude > 1e-12 {
        return Err(KornError::BoundaryViolation { theta, z, magnitude });
    }
    Ok(())
}

const N_INTEGRALS: usize = 14;

/// Squared weighted norms of a field over the shell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldIntegrals {
    pub grad: f64,
    pub strain: f64,
    pub u: f64,
    pub ut: f64,
    pub b: f64,
    pub b_sym: f64,
    /// `e_00, e_11, e_22, e_01, e_02, e_12`, each squared and integrated.
    pub strain_entries: [f64; 6],
    /// `|grad u - B|^2`.
    pub grad_minus_b: f64,
    /// `|e(u) - B_sym|^2`.
    pub strain_minus_b_sym: f64,
}

impl FieldIntegrals {
    fn from_array(a: [f64; N_INTEGRALS]) -> Self {
        FieldIntegrals {
            grad: a[0],
            strain: a[1],
            u: a[2],
            ut: a[3],
            b: a[4],
            b_sym: a[5],
            strain_entries: [a[6], a[7], a[8], a[9], a[10], a[11]],
            grad_minus_b: a[12],
            strain_minus_b_sym: a[13],
        }
    }

    /// `|e(u)|^2 / |grad u|^2`.
    pub fn ratio(&self) -> Result<f64> {
        if !(self.grad > 0.0) {
            return Err(KornError::UndefinedRatio("gradient norm vanishes".into()));
        }
        Ok(self.strain / self.grad)
    }
}

const ENTRY_INDEX: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn integrals_on(shell: &ShellDomain, field: &dyn DisplacementField, grid: &QuadratureGrid) -> Result<[f64; N_INTEGRALS]> {
    integrate_columns(shell, grid, |col| {
        let mut values = Vec::with_capacity(col.t.len());
        field.eval_column(col.theta, col.z, col.t, &mut values);
        let mut acc = [0.0; N_INTEGRALS];
        for (k, (&t, &w)) in col.t.iter().zip(col.wt).enumerate() {
            let v = &values[k];
            let b = simplified_b_from(v, &col.geo);
            let m = gradient_from(v, &col.geo, t)?;
            let e = m.sym();
            let bs = b.sym();
            let mut row = [0.0; N_INTEGRALS];
            row[0] = m.frobenius_sq();
            row[1] = e.frobenius_sq();
            row[2] = v.u.iter().map(|x| x * x).sum();
            row[3] = v.u[0] * v.u[0];
            row[4] = b.frobenius_sq();
            row[5] = bs.frobenius_sq();
            for (slot, &(i, j)) in ENTRY_INDEX.iter().enumerate() {
                row[6 + slot] = e.get(i, j).powi(2);
            }
            row[12] = (m - b).frobenius_sq();
            row[13] = (e - bs).frobenius_sq();
            for i in 0..N_INTEGRALS {
                acc[i] += w * row[i];
            }
        }
        Ok(acc.map(|a| a * col.area))
    })
}

/// Integrals on a fixed rule, without the refinement gate.
pub fn field_integrals(shell: &ShellDomain, field: &dyn DisplacementField, grid: &QuadratureGrid) -> Result<FieldIntegrals> {
    integrals_on(shell, field, grid).map(FieldIntegrals::from_array)
}

/// Integrals with the refinement gate: the rule and its refinement must agree
/// to `tol` relative on every component.
pub fn field_integrals_gated(
    shell: &ShellDomain,
    field: &dyn DisplacementField,
    grid: &QuadratureGrid,
    tol: f64,
) -> Result<FieldIntegrals> {
    gated(grid, tol, |g| integrals_on(shell, field, g)).map(FieldIntegrals::from_array)
}

/// Integrals on the refined rule together with the relative change from
/// `grid`, without failing.
pub fn field_integrals_with_change(
    shell: &ShellDomain,
    field: &dyn DisplacementField,
    grid: &QuadratureGrid,
) -> Result<(FieldIntegrals, f64)> {
    let coarse = integrals_on(shell, field, grid)?;
    let fine = integrals_on(shell, field, &grid.refine())?;
    Ok((FieldIntegrals::from_array(fine), relative_change(&coarse, &fine)))
}

/// Squared strain entries on the mid-surface `t = 0`, in the order of
/// [`FieldIntegrals::strain_entries`], with the measure `A_theta A_z dtheta dz`
/// and the refinement gate.
pub fn midsurface_strain_entries(
    shell: &ShellDomain,
    field: &dyn DisplacementField,
    grid: &QuadratureGrid,
) -> Result<[f64; 6]> {
    gated(grid, crate::quadrature::GATE_TOLERANCE, |g| {
        integrate_surface(&shell.patch, g, |theta, z, geo| {
            let v = field.eval(0.0, theta, z);
            let area = geo.a_theta.value * geo.a_z.value;
            // t = 0 has unit shift factors, so this cannot fail
            let e = gradient_from(&v, geo, 0.0).map(|m| m.sym()).unwrap_or_else(|_| FrameMatrix::zeros());
            ENTRY_INDEX.map(|(i, j)| area * e.get(i, j).powi(2))
        })
    })
}

/// Rule chosen from the field's declared oscillation and the patch width.
pub fn default_grid(shell: &ShellDomain, field: &dyn DisplacementField) -> QuadratureGrid {
    let (z1, z2) = shell.patch.domain.z_range(0.5);
    QuadratureGrid::for_oscillation(field.oscillation(), z2 - z1)
}

/// Weighted `L^2` norms of `grad u`, `e(u)`, `u` and `u_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellNorms {
    pub norm_grad: f64,
    pub norm_strain: f64,
    pub norm_u: f64,
    pub norm_ut: f64,
}

pub fn shell_norms(shell: &ShellDomain, field: &dyn DisplacementField, grid: &QuadratureGrid) -> Result<ShellNorms> {
    let i = field_integrals_gated(shell, field, grid, crate::quadrature::GATE_TOLERANCE)?;
    Ok(ShellNorms { norm_grad: i.grad.sqrt(), norm_strain: i.strain.sqrt(), norm_u: i.u.sqrt(), norm_ut: i.ut.sqrt() })
}

/// Both sides of the interpolation inequality
/// `|B|^2 <= C (|u_t| |B_sym| / h + |u|^2 + |B_sym|^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationGap {
    pub lhs: f64,
    pub rhs_terms: [f64; 3],
    pub ratio: f64,
}

pub fn interpolation_gap(shell: &ShellDomain, field: &dyn DisplacementField, grid: &QuadratureGrid) -> Result<InterpolationGap> {
    check_thin_edge_dirichlet(shell, field)?;
    let i = field_integrals_gated(shell, field, grid, crate::quadrature::GATE_TOLERANCE)?;
    let rhs_terms = [i.ut.sqrt() * i.b_sym.sqrt() / shell.h, i.u, i.b_sym];
    let rhs: f64 = rhs_terms.iter().sum();
    let ratio = if i.b == 0.0 && rhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        return Err(KornError::UndefinedRatio("right-hand side vanishes".into()));
    } else {
        i.b / rhs
    };
    Ok(InterpolationGap { lhs: i.b, rhs_terms, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_cylinder, make_flat, make_torus_band, TorusSide};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Smooth;

    impl DisplacementField for Smooth {
        fn eval(&self, t: f64, th: f64, z: f64) -> FieldValue {
            FieldValue {
                u: [th * z + t, (th + t).sin(), z * z * t],
                du: [[1.0, z, th], [(th + t).cos(), (th + t).cos(), 0.0], [z * z, 0.0, 2.0 * z * t]],
            }
        }
    }

    #[test]
    fn flat_gradient_is_plain_partials() {
        let shell = ShellDomain::new(make_flat(0.5).unwrap(), 0.01).unwrap();
        let m = gradient_at(&shell, &Smooth, (0.005, 0.3, 0.2)).unwrap();
        let v = Smooth.eval(0.005, 0.3, 0.2);
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - v.du[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn b_equals_gradient_at_midsurface() {
        let shell = ShellDomain::new(make_torus_band(2.0, 1.0, TorusSide::Outer, 0.3).unwrap(), 0.01).unwrap();
        let m = gradient_at(&shell, &Smooth, (0.0, 0.4, 0.1)).unwrap();
        let b = simplified_b_at(&shell, &Smooth, (0.0, 0.4, 0.1)).unwrap();
        assert_eq!(m, b);
    }

    #[test]
    fn degenerate_shift_is_rejected() {
        let patch = make_cylinder(0.01, 0.1).unwrap();
        let shell = ShellDomain::new(patch, 0.02).unwrap();
        let err = gradient_at(&shell, &Smooth, (-0.01, 0.5, 0.05)).unwrap_err();
        assert!(matches!(err, KornError::DegenerateShift { .. }));
    }

    #[test]
    fn bump_fields_vanish_on_thin_edge() {
        let shell = ShellDomain::new(make_cylinder(1.0, 0.2).unwrap(), 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = PolynomialBumpField::random(&shell, &mut rng).unwrap();
        assert!(check_thin_edge_dirichlet(&shell, &f).is_ok());
        let leaky = f.with_edge_leak(1);
        assert!(matches!(check_thin_edge_dirichlet(&shell, &leaky), Err(KornError::BoundaryViolation { .. })));
    }

    #[test]
    fn bump_field_partials_match_differences() {
        let shell = ShellDomain::new(make_cylinder(1.0, 0.2).unwrap(), 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = PolynomialBumpField::random(&shell, &mut rng).unwrap();
        let (t, th, z) = (0.003, 0.37, 0.13);
        let v = f.eval(t, th, z);
        let e = 1e-6;
        for i in 0..3 {
            let d = [
                (f.eval(t + e, th, z).u[i] - f.eval(t - e, th, z).u[i]) / (2.0 * e),
                (f.eval(t, th + e, z).u[i] - f.eval(t, th - e, z).u[i]) / (2.0 * e),
                (f.eval(t, th, z + e).u[i] - f.eval(t, th, z - e).u[i]) / (2.0 * e),
            ];
            for j in 0..3 {
                assert!((d[j] - v.du[i][j]).abs() < 1e-6 * (1.0 + v.du[i][j].abs()));
            }
        }
    }

    #[test]
    fn zero_field_interpolation_ratio_is_zero() {
        let shell = ShellDomain::new(make_cylinder(1.0, 0.2).unwrap(), 0.01).unwrap();
        let gap = interpolation_gap(&shell, &ZeroField, &QuadratureGrid::new(2, 4, 4)).unwrap();
        assert_eq!(gap.ratio, 0.0);
    }
}
