//! Numerical checks of the analytic identities and inequalities behind the
//! lower bounds: the key identity for the quadratic form `F`, the Carleman
//! weighted coercivity of `F` on hyperbolic patches, and the harmonic-strip
//! inequality.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, KornError, Result};
use crate::geometry::{CurvatureClass, PrincipalSample, ShellDomain};
use crate::kinematics::{check_thin_edge_dirichlet, simplified_b_from, DisplacementField};
use crate::quadrature::{gated, integrate_surface, QuadratureGrid, GATE_TOLERANCE};

/// The exponential weight `e^(lambda z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlemanWeight {
    pub lambda: f64,
}

impl CarlemanWeight {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("must be positive and finite, got {lambda}")));
        }
        Ok(CarlemanWeight { lambda })
    }

    /// `lambda = c / epsilon`.
    pub fn for_width(c: f64, epsilon: f64) -> Result<Self> {
        Self::new(c / epsilon)
    }

    pub fn at(&self, z: f64) -> f64 {
        (self.lambda * z).exp()
    }
}

/// Both sides of the key identity on the mid-surface and their relative gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyIdentity {
    /// The quadratic form `F(u_theta, u_z)`.
    pub form: f64,
    /// `(B22, e kappa_z u_z) - (B33, e kappa_theta u_z) + 2 (B23, e kappa_z u_theta)`.
    pub pairing: f64,
    pub residual: f64,
}

/// Integrands of the key identity at one surface point with `t = 0`.
fn key_identity_terms(field: &dyn DisplacementField, w: CarlemanWeight, theta: f64, z: f64, g: &PrincipalSample) -> [f64; 2] {
    let v = field.eval(0.0, theta, z);
    let b = simplified_b_from(&v, g).sym();
    let (ut, uz) = (v.u[1], v.u[2]);
    let e = w.at(z);
    let lam = w.lambda;
    let (at, az, kt, kz) = (g.a_theta, g.a_z, g.kappa_theta, g.kappa_z);
    // d/dz (e kappa_z A_theta), d/dz (e A_theta kappa_theta), d/dtheta (e A_z kappa_z)
    let dz_kz_at = e * (lam * kz.value * at.value + kz.d_z * at.value + kz.value * at.d_z);
    let dz_at_kt = e * (lam * at.value * kt.value + at.d_z * kt.value + at.value * kt.d_z);
    let dt_az_kz = e * (az.d_theta * kz.value + az.value * kz.d_theta);
    let form = -(0.5 * dz_kz_at + e * kz.value * at.d_z) * ut * ut
        + (e * at.d_z * kz.value + 0.5 * dz_at_kt) * uz * uz
        - (e * az.d_theta * (kt.value + kz.value) + dt_az_kz) * ut * uz;
    let pairing = at.value
        * az.value
        * e
        * (b.get(1, 1) * kz.value * uz - b.get(2, 2) * kt.value * uz + 2.0 * b.get(1, 2) * kz.value * ut);
    [form, pairing]
}

/// Relative gap between the two sides of the key identity on the mid-surface
/// slice. Fields that do not vanish on the thin edge are rejected.
pub fn key_identity_residual(
    shell: &ShellDomain,
    field: &dyn DisplacementField,
    weight: CarlemanWeight,
    grid: &QuadratureGrid,
) -> Result<KeyIdentity> {
    check_thin_edge_dirichlet(shell, field)?;
    let [form, pairing] = gated(grid, GATE_TOLERANCE, |g| {
        integrate_surface(&shell.patch, g, |theta, z, geo| key_identity_terms(field, weight, theta, z, geo))
    })?;
    let scale = form.abs().max(pairing.abs());
    let residual = if scale == 0.0 { 0.0 } else { (form - pairing).abs() / scale };
    Ok(KeyIdentity { form, pairing, residual })
}

/// Weighted mid-surface norms `|e^(lambda z/2) u_theta|`, `|e^(lambda z/2) u_z|`
/// and `|e^(lambda z/2) B_sym|`.
pub fn carleman_norms(
    shell: &ShellDomain,
    field: &dyn DisplacementField,
    weight: CarlemanWeight,
    grid: &QuadratureGrid,
) -> Result<[f64; 3]> {
    let sq = gated(grid, GATE_TOLERANCE, |g| {
        integrate_surface(&shell.patch, g, |theta, z, geo| {
            let v = field.eval(0.0, theta, z);
            let b = simplified_b_from(&v, geo).sym();
            let m = geo.a_theta.value * geo.a_z.value * weight.at(z);
            [m * v.u[1] * v.u[1], m * v.u[2] * v.u[2], m * b.frobenius_sq()]
        })
    })?;
    Ok(sq.map(f64::sqrt))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarlemanMargin {
    /// `|e^(lambda z/2) u_theta| + |e^(lambda z/2) u_z|`.
    pub lhs: f64,
    /// `(C / lambda) |e^(lambda z/2) B_sym|`.
    pub rhs: f64,
    pub holds: bool,
}

fn require_hyperbolic(shell: &ShellDomain) -> Result<()> {
    let class = shell.patch.curvature_class();
    if class != CurvatureClass::Hyperbolic {
        return Err(KornError::WrongCurvatureClass { required: "hyperbolic", found: class.to_string() });
    }
    Ok(())
}

/// Carleman estimate `|e u_theta| + |e u_z| <= (C/lambda) |e B_sym|` with the
/// constant `C` supplied by the caller.
pub fn carleman_coercivity_margin(
    shell: &ShellDomain,
    field: &dyn DisplacementField,
    weight: CarlemanWeight,
    constant: f64,
    grid: &QuadratureGrid,
) -> Result<CarlemanMargin> {
    require_hyperbolic(shell)?;
    let [ut, uz, b] = carleman_norms(shell, field, weight, grid)?;
    let lhs = ut + uz;
    let rhs = constant / weight.lambda * b;
    Ok(CarlemanMargin { lhs, rhs, holds: lhs <= rhs })
}

/// `lambda (|e u_theta| + |e u_z|) / |e B_sym|`, the smallest constant for
/// which the Carleman estimate holds for this field; zero for a zero field.
pub fn carleman_ratio(
    shell: &ShellDomain,
    field: &dyn DisplacementField,
    weight: CarlemanWeight,
    grid: &QuadratureGrid,
) -> Result<f64> {
    require_hyperbolic(shell)?;
    let [ut, uz, b] = carleman_norms(shell, field, weight, grid)?;
    if ut + uz == 0.0 {
        return Ok(0.0);
    }
    Ok(weight.lambda * (ut + uz) / b)
}

/// Twice the largest [`carleman_ratio`] over a calibration corpus.
pub fn calibrate_carleman_constant(
    shell: &ShellDomain,
    fields: &[&dyn DisplacementField],
    weight: CarlemanWeight,
    grid_for: impl Fn(&dyn DisplacementField) -> QuadratureGrid,
) -> Result<f64> {
    let mut worst = 0f64;
    for f in fields {
        worst = worst.max(carleman_ratio(shell, *f, weight, &grid_for(*f))?);
    }
    Ok(2.0 * worst)
}

/// Smallest `lambda` among `candidates` (scanned in the given order) for which
/// every field satisfies the Carleman estimate with constant `constant`.
pub fn smallest_working_lambda(
    shell: &ShellDomain,
    fields: &[&dyn DisplacementField],
    constant: f64,
    candidates: &[f64],
    grid_for: impl Fn(&dyn DisplacementField) -> QuadratureGrid,
) -> Result<Option<f64>> {
    for &lambda in candidates {
        let w = CarlemanWeight::new(lambda)?;
        let mut all = true;
        for f in fields {
            if !carleman_coercivity_margin(shell, *f, w, constant, &grid_for(*f))?.holds {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some(lambda));
        }
    }
    Ok(None)
}

/// `w = sin(k pi y / p) (a e^(alpha x) + b e^(-alpha x))` on `(0, h) x (0, p)`;
/// harmonic exactly when `alpha = k pi / p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripSample {
    pub k: u32,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
}

impl StripSample {
    pub fn harmonic(k: u32, a: f64, b: f64, p: f64) -> Self {
        StripSample { k, a, b, alpha: k as f64 * std::f64::consts::PI / p }
    }

    pub fn value(&self, x: f64, y: f64, p: f64) -> f64 {
        let beta = self.k as f64 * std::f64::consts::PI / p;
        (beta * y).sin() * (self.a * (self.alpha * x).exp() + self.b * (-self.alpha * x).exp())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripCheck {
    /// `|d_y w|^2`.
    pub lhs: f64,
    /// `(2 sqrt(3) / h) |d_x w| |w| + |d_x w|^2`.
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

/// `int_0^h (a e^(alpha x) + sign b e^(-alpha x))^2 dx` in closed form.
fn exp_profile_sq(a: f64, b: f64, alpha: f64, h: f64, sign: f64) -> f64 {
    let grow = if alpha == 0.0 { h } else { (2.0 * alpha * h).exp_m1() / (2.0 * alpha) };
    let decay = if alpha == 0.0 { h } else { -(-2.0 * alpha * h).exp_m1() / (2.0 * alpha) };
    a * a * grow + sign * 2.0 * a * b * h + b * b * decay
}

/// Harmonic-strip inequality `|d_y w|^2 <= (2 sqrt(3)/h) |d_x w| |w| + |d_x w|^2`
/// for a sample vanishing on `y = 0` and `y = p`, with closed-form norms.
pub fn harmonic_strip_check(h: f64, p: f64, sample: &StripSample) -> Result<StripCheck> {
    if !(h > 0.0 && p > 0.0) {
        return Err(invalid("strip", format!("need h > 0 and p > 0, got h = {h}, p = {p}")));
    }
    let beta = sample.k as f64 * std::f64::consts::PI / p;
    let laplacian = if beta == 0.0 { sample.alpha.abs() } else { (sample.alpha.powi(2) - beta * beta).abs() / (beta * beta) };
    if laplacian > 1e-8 {
        return Err(KornError::NotHarmonic(laplacian));
    }
    let half = 0.5 * p;
    let plus = exp_profile_sq(sample.a, sample.b, sample.alpha, h, 1.0);
    let minus = exp_profile_sq(sample.a, sample.b, sample.alpha, h, -1.0);
    let w_sq = half * plus;
    let dx_sq = half * sample.alpha * sample.alpha * minus;
    let lhs = half * beta * beta * plus;
    let rhs = 2.0 * 3f64.sqrt() / h * (dx_sq * w_sq).sqrt() + dx_sq;
    Ok(StripCheck { lhs, rhs, margin: rhs - lhs, holds: lhs <= rhs + 1e-9 })
}

/// One check outcome as emitted in JSON reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, inputs: &[(&str, f64)], lhs: f64, rhs: f64, residual: f64, pass: bool) -> Self {
        CheckRecord {
            name: name.into(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            lhs,
            rhs,
            residual,
            pass,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_examples() {
        let r = harmonic_strip_check(0.1, 1.0, &StripSample::harmonic(1, 1.0, 1.0, 1.0)).unwrap();
        assert!(r.holds && r.margin > 0.0);
        let r = harmonic_strip_check(0.01, 1.0, &StripSample::harmonic(3, 1.0, -1.0, 1.0)).unwrap();
        assert!(r.holds);
        let r = harmonic_strip_check(0.1, 1.0, &StripSample::harmonic(2, 0.0, 0.0, 1.0)).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.holds);
        let bad = StripSample { alpha: 2.0, ..StripSample::harmonic(1, 1.0, 1.0, 1.0) };
        assert!(matches!(harmonic_strip_check(0.1, 1.0, &bad), Err(KornError::NotHarmonic(_))));
    }

    #[test]
    fn weight_rejects_bad_lambda() {
        assert!(CarlemanWeight::new(0.0).is_err());
        assert!(CarlemanWeight::new(f64::NAN).is_err());
        assert!((CarlemanWeight::for_width(5.0, 0.25).unwrap().lambda - 20.0).abs() < 1e-15);
    }
}
