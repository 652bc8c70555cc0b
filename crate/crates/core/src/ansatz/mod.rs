//! Explicit trial fields realizing the optimal Korn scalings.
//!
//! Every construction is a Kirchhoff-type field
//! `u_t = w`, `u_theta = v - t (w_theta/A_theta - kappa_theta v)`,
//! `u_z = s - t (w_z/A_z - kappa_z s)`, for which the normal row of the
//! mid-surface strain vanishes; the constructions differ in the choice of
//! `(w, v, s)`.

mod bump;
mod transport;

pub use bump::{BumpProfile, BumpShape};
pub use transport::{
    max_phase_bracket, max_transport_residual, phase_bracket, phase_from_slope, solve_transport, Branch,
    PhaseValue, TransportPhase,
};

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, KornError, Result};
use crate::geometry::{CurvatureClass, Proportional, ShellDomain, SurfacePatch};
use crate::jet::Jet;
use crate::kinematics::{field_integrals_with_change, DisplacementField, FieldValue};
use crate::quadrature::{Oscillation, QuadratureGrid, GATE_TOLERANCE};
use crate::scaling::{classify_regime, theory_exponents};

/// The three generating functions of a Kirchhoff field as jets: `w` of order
/// at least 2, `v` and `s` of order at least 1.
#[derive(Clone, Copy, Debug)]
pub struct KirchhoffJets {
    pub w: Jet,
    pub v: Jet,
    pub s: Jet,
}

impl KirchhoffJets {
    pub fn zero() -> Self {
        KirchhoffJets { w: Jet::zero(2), v: Jet::zero(1), s: Jet::zero(1) }
    }
}

type Generator = Arc<dyn Fn(f64, f64) -> KirchhoffJets + Send + Sync>;

/// Field linear in `t` whose normal strain row vanishes on the mid-surface.
#[derive(Clone)]
pub struct KirchhoffField {
    patch: SurfacePatch,
    generator: Generator,
    oscillation: Oscillation,
}

impl fmt::Debug for KirchhoffField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KirchhoffField").field("patch", &self.patch.id).field("oscillation", &self.oscillation).finish()
    }
}

/// Lifts `(w, v, s)` to a displacement field; fails when the generator does
/// not supply the derivatives the lift needs.
pub fn kirchhoff_lift(
    patch: &SurfacePatch,
    generator: impl Fn(f64, f64) -> KirchhoffJets + Send + Sync + 'static,
    oscillation: Oscillation,
) -> Result<KirchhoffField> {
    let (z1, z2) = patch.domain.z_range(0.5);
    let probe = generator(0.5, 0.5 * (z1 + z2));
    if probe.w.order() < 2 || probe.v.order() < 1 || probe.s.order() < 1 {
        return Err(invalid("generator", "missing partials: need w to order 2, v and s to order 1"));
    }
    Ok(KirchhoffField { patch: patch.clone(), generator: Arc::new(generator), oscillation })
}

impl KirchhoffField {
    pub fn generating_jets(&self, theta: f64, z: f64) -> KirchhoffJets {
        (self.generator)(theta, z)
    }

    fn column(&self, theta: f64, z: f64, ts: &[f64], out: &mut Vec<FieldValue>) {
        let KirchhoffJets { w, v, s } = (self.generator)(theta, z);
        let g = self.patch.jets(theta, z, 1);
        let w1 = w.truncate(2);
        let p = w1.partial_theta() / g.a_theta - g.kappa_theta * v.truncate(1);
        let q = w1.partial_z() / g.a_z - g.kappa_z * s.truncate(1);
        out.clear();
        for &t in ts {
            out.push(FieldValue {
                u: [w.value(), v.value() - t * p.value(), s.value() - t * q.value()],
                du: [
                    [0.0, w.d_theta(), w.d_z()],
                    [-p.value(), v.d_theta() - t * p.d_theta(), v.d_z() - t * p.d_z()],
                    [-q.value(), s.d_theta() - t * q.d_theta(), s.d_z() - t * q.d_z()],
                ],
            });
        }
    }
}

impl DisplacementField for KirchhoffField {
    fn eval(&self, t: f64, theta: f64, z: f64) -> FieldValue {
        let mut out = Vec::with_capacity(1);
        self.column(theta, z, &[t], &mut out);
        out[0]
    }

    fn eval_column(&self, theta: f64, z: f64, ts: &[f64], out: &mut Vec<FieldValue>) {
        self.column(theta, z, ts, out)
    }

    fn oscillation(&self) -> Oscillation {
        self.oscillation
    }
}

fn default_profile(shell: &ShellDomain, shape: BumpShape) -> Result<BumpProfile> {
    let (z1, z2) = shell
        .patch
        .domain
        .rectangle()
        .ok_or_else(|| invalid("patch", "trial fields need constant z-limits"))?;
    Ok(BumpProfile::new(shape, (0.0, 1.0), (z1, z2)))
}

/// Regime `epsilon <= sqrt(h)`: `w = psi(theta) sin(theta/sqrt(h)) psi_z`, `v = s = 0`.
pub fn regime1_field(shell: &ShellDomain, shape: BumpShape) -> Result<KirchhoffField> {
    let profile = default_profile(shell, shape)?;
    let rate = 1.0 / shell.h.sqrt();
    kirchhoff_lift(
        &shell.patch,
        move |theta, z| {
            let th = Jet::theta(theta, 2);
            let w = profile.theta_factor(th) * (th * rate).sin() * profile.z_factor(Jet::z(z, 2));
            KirchhoffJets { w, v: Jet::zero(1), s: Jet::zero(1) }
        },
        Oscillation { theta: rate, z: 0.0 },
    )
}

/// Hyperbolic construction with `n = (epsilon h)^(-1/3)`:
/// `w = n W sin(n f)`, `v = A_theta kappa_theta W cos(n f) / f_theta`,
/// `s = A_z kappa_z W cos(n f) / f_z`, where `f` is the given phase rescaled
/// to advance by `2 pi` per unit length at the center of the patch.
pub fn hyperbolic_field(shell: &ShellDomain, shape: BumpShape, phase: Arc<TransportPhase>) -> Result<KirchhoffField> {
    let patch = &shell.patch;
    if patch.curvature_class() != CurvatureClass::Hyperbolic {
        return Err(KornError::WrongCurvatureClass { required: "hyperbolic", found: patch.curvature_class().to_string() });
    }
    let profile = default_profile(shell, shape)?;
    let (z1, z2) = profile.z_support;
    let zc = 0.5 * (z1 + z2);
    let center = phase.eval(0.5, zc)?;
    let gc = patch.sample(0.5, zc);
    let unit = (center[1] / gc.a_theta.value).hypot(center[2] / gc.a_z.value);
    if !(unit > 0.0 && unit.is_finite()) {
        return Err(invalid("phase", "degenerate gradient at the patch center"));
    }
    // phase advances by 2 pi per unit length at the center of the patch
    let n = 2.0 * PI / unit * (shell.epsilon() * shell.h).powf(-1.0 / 3.0);
    let mut rate_theta = 0f64;
    let mut rate_z = 0f64;
    for i in 1..40 {
        let theta = i as f64 / 40.0;
        for j in 1..20 {
            let z = z1 + (z2 - z1) * j as f64 / 20.0;
            let p = phase.eval(theta, z)?;
            if p[1].abs() < 1e-12 || p[2].abs() < 1e-12 {
                return Err(invalid("phase", format!("vanishing f_theta or f_z at ({theta}, {z})")));
            }
            rate_theta = rate_theta.max(n * p[1].abs());
            rate_z = rate_z.max(n * p[2].abs());
        }
    }
    let data_patch = patch.clone();
    kirchhoff_lift(
        patch,
        move |theta, z| {
            let big_w = profile.jet(theta, z, 2);
            if big_w.value() == 0.0 && big_w.d_theta() == 0.0 && big_w.d_z() == 0.0 {
                return KirchhoffJets::zero();
            }
            let f = phase.jet(theta, z).expect("phase validated on construction");
            let g = data_patch.jets(theta, z, 1);
            let arg = f * n;
            let (sin, cos) = (arg.sin(), arg.cos());
            let w = big_w * sin * n;
            let wc = big_w.truncate(1) * cos.truncate(1);
            let v = g.a_theta * g.kappa_theta * wc / f.partial_theta();
            let s = g.a_z * g.kappa_z * wc / f.partial_z();
            KirchhoffJets { w, v, s }
        },
        Oscillation { theta: rate_theta, z: rate_z },
    )
}

/// Harmonic of the 1-periodic profile `Phi(x) = sin(2 pi HARMONIC x)` used by
/// the developable constructions.
const HARMONIC: f64 = 2.0;

/// Oscillation number `epsilon^(-1/2) h^(-1/4)` of the developable constructions.
pub fn developable_wavenumber(shell: &ShellDomain) -> f64 {
    shell.epsilon().powf(-0.5) * shell.h.powf(-0.25)
}

fn developable_parts(shell: &ShellDomain) -> Result<&crate::geometry::DevelopableProfiles> {
    let patch = &shell.patch;
    patch.developable().ok_or_else(|| KornError::WrongCurvatureClass {
        required: "parabolic (developable)",
        found: patch.curvature_class().to_string(),
    })
}

/// Lifts `(v_theta, v_z)` solving the in-plane equation through
/// `v_t = -(v_theta,theta + a v_z)/c` into a Kirchhoff field.
fn developable_lift(v_theta: Jet, v_z: Jet, a: Jet, c: Jet) -> KirchhoffJets {
    let order = v_theta.order() - 1;
    let v_t = -(v_theta.partial_theta() + a.truncate(order) * v_z.truncate(order)) / c.truncate(order);
    KirchhoffJets { w: v_t, v: v_theta, s: v_z }
}

/// Case 1 (`A_z/A_theta = H(theta)/G(z)`): `v_z = A_theta G H phi_z`,
/// `v_theta = -A_theta H^2 phi_theta` with
/// `phi = eta(theta) sin(2 pi n theta) psi_z(z)`, `n = epsilon^(-1/2) h^(-1/4)`.
pub fn developable_field_case1(shell: &ShellDomain, shape: BumpShape) -> Result<KirchhoffField> {
    let parts = developable_parts(shell)?.clone();
    let prop = parts.proportionality().ok_or(KornError::NoFactorization)?;
    check_c(&parts)?;
    let profile = default_profile(shell, shape)?;
    let n = developable_wavenumber(shell);
    const ORDER: usize = 4;
    kirchhoff_lift(
        &shell.patch,
        move |theta, z| {
            let th = Jet::theta(theta, ORDER);
            let zj = Jet::z(z, ORDER);
            let phi = profile.theta_factor(th) * (th * (2.0 * PI * HARMONIC * n)).sin() * profile.z_factor(zj);
            let a = parts.a.theta_jet(theta, ORDER);
            let b = parts.b.theta_jet(theta, ORDER);
            let c = parts.c.theta_jet(theta, ORDER);
            let big_b = parts.big_b.z_jet(z, ORDER);
            let b_prime = parts.big_b.z_jet_of_derivative(z, ORDER);
            let a_theta = a * big_b + b;
            let (h, g) = match prop {
                Proportional::BOverA(l) => (a.recip(), (big_b + l) / b_prime),
                Proportional::AOverB(l) => (b.recip(), (big_b * l + 1.0) / b_prime),
            };
            let v_z = a_theta * g * h * phi.partial_z();
            let v_theta = -(a_theta * h * h).truncate(ORDER - 1) * phi.partial_theta();
            developable_lift(v_theta, v_z, a, c)
        },
        Oscillation { theta: 2.0 * PI * HARMONIC * n, z: 0.0 },
    )
}

/// Case 2 (`a != 0`, `rho' != 0` on `I`, `rho = b/a`):
/// `v_theta = (1/a) d/dtheta (phi_theta / rho')`,
/// `v_z = [B' phi_theta + rho' phi_z - (B + rho) phi_theta_z] / (B' rho')`,
/// with `phi = eta(theta) sin(2 pi n theta) psi_z(z)` and `eta` a bump on `I`.
pub fn developable_field_case2(shell: &ShellDomain, shape: BumpShape, interval: (f64, f64)) -> Result<KirchhoffField> {
    let parts = developable_parts(shell)?.clone();
    check_c(&parts)?;
    let (i0, i1) = interval;
    if !(0.0 <= i0 && i0 < i1 && i1 <= 1.0) {
        return Err(invalid("interval", format!("need 0 <= a < b <= 1, got ({i0}, {i1})")));
    }
    for k in 0..=200 {
        let theta = i0 + (i1 - i0) * k as f64 / 200.0;
        let a = parts.a.theta_jet(theta, 2);
        let rho_prime = (parts.b.theta_jet(theta, 2) / a).d_theta();
        if a.value().abs() < 1e-12 {
            return Err(invalid("a", format!("a vanishes at theta = {theta} inside the interval")));
        }
        if !(rho_prime.abs() > 1e-12) {
            return Err(invalid("rho", format!("rho' vanishes at theta = {theta} inside the interval")));
        }
    }
    let base = default_profile(shell, shape)?;
    let profile = BumpProfile::new(shape, interval, base.z_support);
    let n = developable_wavenumber(shell);
    const ORDER: usize = 5;
    kirchhoff_lift(
        &shell.patch,
        move |theta, z| {
            let th = Jet::theta(theta, ORDER);
            let zj = Jet::z(z, ORDER);
            let phi = profile.theta_factor(th) * (th * (2.0 * PI * HARMONIC * n)).sin() * profile.z_factor(zj);
            let a = parts.a.theta_jet(theta, ORDER);
            let b = parts.b.theta_jet(theta, ORDER);
            let c = parts.c.theta_jet(theta, ORDER);
            let rho = b / a;
            let rho_p = rho.partial_theta();
            let big_b = parts.big_b.z_jet(z, ORDER - 1);
            let b_prime = parts.big_b.z_jet_of_derivative(z, ORDER - 1);
            let phi_t = phi.partial_theta();
            let phi_z = phi.partial_z();
            let phi_tz = phi_t.partial_z();
            let v_theta = (phi_t / rho_p).partial_theta() / a.truncate(ORDER - 2);
            let num = b_prime.truncate(ORDER - 2) * phi_t.truncate(ORDER - 2)
                + rho_p.truncate(ORDER - 2) * phi_z.truncate(ORDER - 2)
                - (big_b + rho.truncate(ORDER - 1)).truncate(ORDER - 2) * phi_tz;
            let v_z = num / (b_prime * rho_p).truncate(ORDER - 2);
            developable_lift(v_theta, v_z, a, c)
        },
        Oscillation { theta: 2.0 * PI * HARMONIC * n, z: 0.0 },
    )
}

fn check_c(parts: &crate::geometry::DevelopableProfiles) -> Result<()> {
    for k in 0..=200 {
        let theta = k as f64 / 200.0;
        if !(parts.c.value(theta).abs() > 1e-12) {
            return Err(invalid("c", format!("curvature profile vanishes at theta = {theta}")));
        }
    }
    Ok(())
}

/// Residual `-A_theta v_theta,z - A_z (v_z,theta - a v_theta)` of the in-plane
/// equation for a developable field, evaluated from its generating jets.
pub fn developable_pde_residual(shell: &ShellDomain, field: &KirchhoffField, theta: f64, z: f64) -> Result<f64> {
    let parts = developable_parts(shell)?;
    let jets = field.generating_jets(theta, z);
    let g = shell.patch.jets(theta, z, 1);
    let a = parts.a.value(theta);
    Ok(-g.a_theta.value() * jets.v.d_z() - g.a_z.value() * (jets.s.d_theta() - a * jets.v.value()))
}

/// The trial fields by curvature class and regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzKind {
    Regime1,
    Hyperbolic,
    DevelopableCase1,
    DevelopableCase2,
}

impl AnsatzKind {
    /// Lowest power `sin^k(pi x)` envelope whose lift still vanishes on the
    /// thin edge: the lift differentiates the envelope once for the regime-1
    /// and hyperbolic fields, three times for case 1 and four times for case 2.
    pub fn default_shape(self) -> BumpShape {
        match self {
            AnsatzKind::Regime1 | AnsatzKind::Hyperbolic => BumpShape::SinePower(2),
            AnsatzKind::DevelopableCase1 => BumpShape::SinePower(4),
            AnsatzKind::DevelopableCase2 => BumpShape::SinePower(5),
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnsatzKind::Regime1 => "regime1",
            AnsatzKind::Hyperbolic => "hyperbolic",
            AnsatzKind::DevelopableCase1 => "developable_case1",
            AnsatzKind::DevelopableCase2 => "developable_case2",
        })
    }
}

/// Builds the trial field of the given kind with the positive phase branch
/// and `I = [0, 1]`.
pub fn build_ansatz(shell: &ShellDomain, kind: AnsatzKind, shape: BumpShape) -> Result<KirchhoffField> {
    match kind {
        AnsatzKind::Regime1 => regime1_field(shell, shape),
        AnsatzKind::Hyperbolic => {
            let phase = Arc::new(solve_transport(&shell.patch, Branch::Positive)?);
            hyperbolic_field(shell, shape, phase)
        }
        AnsatzKind::DevelopableCase1 => developable_field_case1(shell, shape),
        AnsatzKind::DevelopableCase2 => developable_field_case2(shell, shape, (0.0, 1.0)),
    }
}

/// Strain-to-gradient ratio of a trial field with the theory prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzReport {
    pub norm_strain_sq: f64,
    pub norm_grad_sq: f64,
    pub ratio: f64,
    /// `h^a epsilon^b` with the exponents of the predicted optimal ratio.
    pub predicted_ratio_scale: f64,
    pub quadrature: QuadratureGrid,
    /// Relative change of the integrals under refinement of the rule.
    pub quadrature_change: f64,
}

pub fn ansatz_report(shell: &ShellDomain, field: &dyn DisplacementField, grid: &QuadratureGrid) -> Result<AnsatzReport> {
    let (i, change) = field_integrals_with_change(shell, field, grid)?;
    if change > GATE_TOLERANCE {
        return Err(KornError::QuadratureUnderresolved { change, tolerance: GATE_TOLERANCE });
    }
    let ratio = i.ratio()?;
    let regime = classify_regime(shell.h, shell.epsilon())?;
    let predicted_ratio_scale = match theory_exponents(shell.patch.curvature_class(), regime) {
        Ok(e) => 1.0 / e.evaluate(shell.h, shell.epsilon()),
        Err(_) => f64::NAN,
    };
    Ok(AnsatzReport {
        norm_strain_sq: i.strain,
        norm_grad_sq: i.grad,
        ratio,
        predicted_ratio_scale,
        quadrature: grid.refine(),
        quadrature_change: change,
    })
}
