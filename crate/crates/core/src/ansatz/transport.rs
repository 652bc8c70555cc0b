//! Phase functions for oscillations along asymptotic directions.
//!
//! On a hyperbolic patch the phase `f` solves
//! `kappa_theta f_z^2 / A_z^2 + kappa_z f_theta^2 / A_theta^2 = 0`, i.e.
//! `f_z = sigma mu f_theta` with `mu = (A_z/A_theta) sqrt(-kappa_z/kappa_theta)`
//! and branch `sigma = +-1`, with data `f(theta, z1) = theta`. When `mu` does
//! not depend on `theta` the solution is `f = theta + sigma M(z)` with
//! `M' = mu`; otherwise `f` is transported along characteristics.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};
use crate::geometry::{CurvatureClass, PrincipalData, SampleGrid, SurfacePatch, ZBound};
use crate::jet::Jet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    #[default]
    Positive,
    Negative,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// `f` and its partials up to second order:
/// `[f, f_theta, f_z, f_theta_theta, f_theta_z, f_z_z]`.
pub type PhaseValue = [f64; 6];

/// The slope field `mu` as a jet of order 2.
fn mu_jet(data: &dyn PrincipalData, theta: f64, z: f64) -> Jet {
    let g = data.jets(theta, z, 2);
    (g.kappa_z / g.kappa_theta * -1.0).sqrt() * g.a_z / g.a_theta
}

enum Kind {
    /// `f = theta + sigma M(z)`, tabulated `M` and `mu` on a uniform grid.
    Separable { z0: f64, dz: f64, m: Vec<f64>, mu: Vec<f64>, dmu: Vec<f64> },
    Characteristic { data: Arc<dyn Fn(f64, f64) -> Jet + Send + Sync>, z_lower: ZBound },
    Affine { a: f64, b: f64 },
}

/// A solution of the transport equation.
pub struct TransportPhase {
    kind: Kind,
    branch: Branch,
}

impl TransportPhase {
    /// `f = a theta + b z`, used for the naive comparison phase.
    pub fn affine(a: f64, b: f64) -> Self {
        TransportPhase { kind: Kind::Affine { a, b }, branch: Branch::Positive }
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.kind, Kind::Separable { .. })
    }

    /// Phase value and partials up to second order at `(theta, z)`.
    pub fn eval(&self, theta: f64, z: f64) -> Result<PhaseValue> {
        let sigma = self.branch.sign();
        match &self.kind {
            Kind::Affine { a, b } => Ok([a * theta + b * z, *a, *b, 0.0, 0.0, 0.0]),
            Kind::Separable { z0, dz, m, mu, dmu } => {
                let x = (z - z0) / dz;
                let k = (x.floor() as isize).clamp(0, m.len() as isize - 2) as usize;
                let s = x - k as f64;
                let (h00, h10, h01, h11) = (
                    (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
                    s * (1.0 - s) * (1.0 - s),
                    s * s * (3.0 - 2.0 * s),
                    s * s * (s - 1.0),
                );
                let big_m = h00 * m[k] + h10 * dz * mu[k] + h01 * m[k + 1] + h11 * dz * mu[k + 1];
                let mu_z = h00 * mu[k] + h10 * dz * dmu[k] + h01 * mu[k + 1] + h11 * dz * dmu[k + 1];
                let (g00, g10, g01, g11) = (
                    6.0 * s * (s - 1.0) / dz,
                    (1.0 - s) * (1.0 - 3.0 * s),
                    -6.0 * s * (s - 1.0) / dz,
                    s * (3.0 * s - 2.0),
                );
                let dmu_z = g00 * mu[k] + g10 * dmu[k] + g01 * mu[k + 1] + g11 * dmu[k + 1];
                Ok([theta + sigma * big_m, 1.0, sigma * mu_z, 0.0, 0.0, sigma * dmu_z])
            }
            Kind::Characteristic { data, z_lower } => characteristic_phase(data.as_ref(), sigma, theta, z, z_lower),
        }
    }

    /// The phase as a jet of order 2.
    pub fn jet(&self, theta: f64, z: f64) -> Result<Jet> {
        let p = self.eval(theta, z)?;
        Ok(Jet::from_partials(2, |i, j| match (i, j) {
            (0, 0) => p[0],
            (1, 0) => p[1],
            (0, 1) => p[2],
            (2, 0) => p[3],
            (1, 1) => p[4],
            (0, 2) => p[5],
            _ => 0.0,
        }))
    }
}

fn check_mu(mu: f64, theta: f64) -> Result<()> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(KornError::Transport {
            theta,
            reason: format!("slope sqrt(-kappa_z/kappa_theta) A_z/A_theta undefined ({mu})"),
        });
    }
    Ok(())
}

/// Traces the characteristic through `(theta, z)` back to the initial curve,
/// carrying the first and second variations in `theta`.
fn characteristic_phase(
    mu: &(dyn Fn(f64, f64) -> Jet + Send + Sync),
    sigma: f64,
    theta: f64,
    z: f64,
    z_lower: &ZBound,
) -> Result<PhaseValue> {
    // state (theta, J, K) along s from z down to the initial curve
    let rhs = |s: f64, y: [f64; 3]| -> Result<[f64; 3]> {
        let m = mu(y[0], s);
        check_mu(m.value(), y[0])?;
        let (mt, mtt) = (m.d(1, 0), m.d(2, 0));
        Ok([-sigma * m.value(), -sigma * mt * y[1], -sigma * (mtt * y[1] * y[1] + mt * y[2])])
    };
    let rk4 = |s: f64, y: [f64; 3], h: f64| -> Result<[f64; 3]> {
        let add = |y: [f64; 3], k: [f64; 3], c: f64| [y[0] + c * k[0], y[1] + c * k[1], y[2] + c * k[2]];
        let k1 = rhs(s, y)?;
        let k2 = rhs(s + 0.5 * h, add(y, k1, 0.5 * h))?;
        let k3 = rhs(s + 0.5 * h, add(y, k2, 0.5 * h))?;
        let k4 = rhs(s + h, add(y, k3, h))?;
        Ok([0, 1, 2].map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
    };
    let mut y = [theta, 1.0, 0.0];
    let mut s = z;
    let tol = 1e-13;
    let mut h = -(z - z_lower.at(theta)).abs().max(1e-300) / 8.0;
    for _ in 0..100_000 {
        let target = z_lower.at(y[0]);
        let remaining = target - s;
        if remaining.abs() <= 1e-15 * (1.0 + s.abs()) {
            break;
        }
        if h.abs() > remaining.abs() || h.signum() != remaining.signum() {
            h = remaining;
        }
        let full = rk4(s, y, h)?;
        let half = rk4(s + 0.5 * h, rk4(s, y, 0.5 * h)?, 0.5 * h)?;
        let err = (0..3).map(|i| (full[i] - half[i]).abs() / (1.0 + half[i].abs())).fold(0.0, f64::max);
        if err <= tol {
            s += h;
            y = [0, 1, 2].map(|i| half[i] + (half[i] - full[i]) / 15.0);
            let grow = if err == 0.0 { 2.0 } else { (0.9 * (tol / err).powf(0.2)).min(2.0) };
            h *= grow;
        } else {
            h *= (0.9 * (tol / err).powf(0.2)).max(0.2);
        }
    }
    let f_theta = y[1];
    let f_tt = y[2];
    let m = mu(theta, z);
    check_mu(m.value(), theta)?;
    let f_z = sigma * m.value() * f_theta;
    let f_tz = sigma * (m.d(1, 0) * f_theta + m.value() * f_tt);
    let f_zz = sigma * (m.d(0, 1) * f_theta + m.value() * f_tz);
    Ok([y[0], f_theta, f_z, f_tt, f_tz, f_zz])
}

/// Builds the phase for a hyperbolic patch on the requested branch.
pub fn solve_transport(patch: &SurfacePatch, branch: Branch) -> Result<TransportPhase> {
    if patch.curvature_class() != CurvatureClass::Hyperbolic {
        return Err(KornError::WrongCurvatureClass {
            required: "hyperbolic",
            found: patch.curvature_class().to_string(),
        });
    }
    let data = patch.data();
    let grid = SampleGrid::new(41, 41);
    let mut mu_max = 0f64;
    let mut mu_theta_max = 0f64;
    for (theta, z) in grid.points(&patch.domain) {
        let m = mu_jet(data, theta, z);
        check_mu(m.value(), theta)?;
        mu_max = mu_max.max(m.value().abs());
        mu_theta_max = mu_theta_max.max(m.d(1, 0).abs()).max(m.d(2, 0).abs());
    }
    let z_lower = patch.domain.z_lower.clone();
    if let (true, Some((z1, z2))) = (mu_theta_max <= 1e-13 * mu_max, patch.domain.rectangle()) {
        return Ok(TransportPhase { kind: separable_table(data, z1, z2)?, branch });
    }
    let owned = patch.clone();
    let mu = Arc::new(move |theta: f64, z: f64| mu_jet(owned.data(), theta, z));
    Ok(TransportPhase { kind: Kind::Characteristic { data: mu, z_lower }, branch })
}

/// Characteristic phase for an explicit slope field `mu(theta, z)` given as a
/// jet of order 2, with initial curve `z = z1`.
pub fn phase_from_slope(
    mu: impl Fn(f64, f64) -> Jet + Send + Sync + 'static,
    z1: f64,
    branch: Branch,
) -> TransportPhase {
    TransportPhase {
        kind: Kind::Characteristic { data: Arc::new(mu), z_lower: ZBound::Constant(z1) },
        branch,
    }
}

fn separable_table(data: &dyn PrincipalData, z1: f64, z2: f64) -> Result<Kind> {
    const N: usize = 2048;
    let dz = (z2 - z1) / N as f64;
    let z0 = z1;
    // a few cells beyond both ends so evaluation slightly outside E stays smooth
    let pad = 8usize;
    let start = z0 - pad as f64 * dz;
    let count = N + 2 * pad + 1;
    let mut mu = Vec::with_capacity(count);
    let mut dmu = Vec::with_capacity(count);
    for k in 0..count {
        let m = mu_jet(data, 0.5, start + k as f64 * dz);
        check_mu(m.value(), 0.5)?;
        mu.push(m.value());
        dmu.push(m.d(0, 1));
    }
    // integrate mu cell by cell with a 6-point Gauss rule
    let (x, w) = crate::quadrature::gauss_legendre(6);
    let mut m = vec![0.0; count];
    for k in 1..count {
        let a = start + (k - 1) as f64 * dz;
        let cell: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| wi * 0.5 * dz * mu_jet(data, 0.5, a + 0.5 * dz * (xi + 1.0)).value())
            .sum();
        m[k] = m[k - 1] + cell;
    }
    let offset = m[pad];
    m.iter_mut().for_each(|v| *v -= offset);
    Ok(Kind::Separable { z0: start, dz, m, mu, dmu })
}

/// The bracket `f_z^2 A_theta^2 kappa_theta + f_theta^2 A_z^2 kappa_z` at a point.
pub fn phase_bracket(patch: &SurfacePatch, phase: &TransportPhase, theta: f64, z: f64) -> Result<f64> {
    let g = patch.sample(theta, z);
    let p = phase.eval(theta, z)?;
    Ok(p[2] * p[2] * g.a_theta.value.powi(2) * g.kappa_theta.value
        + p[1] * p[1] * g.a_z.value.powi(2) * g.kappa_z.value)
}

/// Largest bracket over a grid on the support of the bump profile.
pub fn max_phase_bracket(
    patch: &SurfacePatch,
    phase: &TransportPhase,
    theta_support: (f64, f64),
    n: usize,
) -> Result<f64> {
    let mut worst = 0f64;
    for i in 0..n {
        let theta = theta_support.0 + (theta_support.1 - theta_support.0) * (i as f64 + 0.5) / n as f64;
        let (z1, z2) = patch.domain.z_range(theta);
        for j in 0..n {
            let z = z1 + (z2 - z1) * (j as f64 + 0.5) / n as f64;
            worst = worst.max(phase_bracket(patch, phase, theta, z)?.abs());
        }
    }
    Ok(worst)
}

/// Largest residual of `kappa_theta f_z^2/A_z^2 + kappa_z f_theta^2/A_theta^2`.
pub fn max_transport_residual(patch: &SurfacePatch, phase: &TransportPhase, n: usize) -> Result<f64> {
    let mut worst = 0f64;
    for i in 0..n {
        let theta = (i as f64 + 0.5) / n as f64;
        let (z1, z2) = patch.domain.z_range(theta);
        for j in 0..n {
            let z = z1 + (z2 - z1) * (j as f64 + 0.5) / n as f64;
            let g = patch.sample(theta, z);
            let p = phase.eval(theta, z)?;
            let r = g.kappa_theta.value * p[2] * p[2] / g.a_z.value.powi(2)
                + g.kappa_z.value * p[1] * p[1] / g.a_theta.value.powi(2);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}
