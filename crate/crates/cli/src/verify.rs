//! Geometry and identity check suites behind `korn verify`.

use korn::geometry::{gauss_codazzi_residual, o1_parameters, CurvatureClass, SampleGrid, ShellDomain, SurfacePatch};
use korn::identities::{
    calibrate_carleman_constant, carleman_coercivity_margin, harmonic_strip_check, key_identity_residual, CarlemanWeight,
    CheckRecord, StripSample,
};
use korn::kinematics::{default_grid, DisplacementField, PolynomialBumpField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{RunConfig, Stamp};
use crate::error::Result;

pub const GAUSS_CODAZZI_TOL: f64 = 1e-8;
pub const DEVELOPABLE_TOL: f64 = 1e-12;
pub const KEY_IDENTITY_TOL: f64 = 1e-8;

pub fn geometry_checks(patch: &SurfacePatch) -> Vec<CheckRecord> {
    let grid = SampleGrid::new(41, 21);
    let residual = gauss_codazzi_residual(patch, grid);
    let (name, tol) = if patch.developable().is_some() {
        ("gauss_codazzi_developable", DEVELOPABLE_TOL)
    } else {
        ("gauss_codazzi", GAUSS_CODAZZI_TOL)
    };
    let eps = patch.epsilon();
    let mut out = vec![CheckRecord::new(format!("{name}:{}", patch.id), &[("epsilon", eps)], residual, tol, residual, residual < tol)];
    let o1 = o1_parameters(patch, grid);
    let (lhs, ok) = match &o1 {
        Ok(p) => (p.a, p.a > 0.0 && p.big_a.is_finite() && p.k.is_finite()),
        Err(_) => (f64::NAN, false),
    };
    out.push(CheckRecord::new(format!("metric_lower_bound:{}", patch.id), &[("epsilon", eps)], lhs, 0.0, 0.0, ok));
    out
}

/// Key identity for `fields` random Dirichlet fields at `lambda in {1, 5, 1/epsilon}`.
pub fn identity_checks(shell: &ShellDomain, fields: usize, rng: &mut impl Rng) -> Result<Vec<CheckRecord>> {
    let eps = shell.epsilon();
    let mut out = Vec::new();
    for i in 0..fields {
        let f = PolynomialBumpField::random(shell, rng)?;
        let grid = default_grid(shell, &f);
        for lambda in [1.0, 5.0, 1.0 / eps] {
            let r = key_identity_residual(shell, &f, CarlemanWeight::new(lambda)?, &grid)?;
            out.push(CheckRecord::new(
                format!("key_identity:{}", shell.patch.id),
                &[("field", i as f64), ("lambda", lambda), ("h", shell.h), ("epsilon", eps)],
                r.form,
                r.pairing,
                r.residual,
                r.residual < KEY_IDENTITY_TOL,
            ));
        }
    }
    Ok(out)
}

/// Harmonic-strip inequality over `h x p x k` = 3 x 3 x 5 with random `a, b`.
/// The residual is the violation `max(0, lhs - rhs)`.
pub fn strip_checks(rng: &mut impl Rng) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for h in [1e-3, 1e-2, 1e-1] {
        for p in [0.5, 1.0, 2.0] {
            for k in 1..=5u32 {
                let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let r = harmonic_strip_check(h, p, &StripSample::harmonic(k, a, b, p))?;
                out.push(CheckRecord::new(
                    "harmonic_strip",
                    &[("h", h), ("p", p), ("k", k as f64), ("a", a), ("b", b), ("margin", r.margin)],
                    r.lhs,
                    r.rhs,
                    (r.lhs - r.rhs).max(0.0),
                    r.holds,
                ));
            }
        }
    }
    Ok(out)
}

/// Carleman estimate at `lambda = 40/epsilon` on `tests` fields with the
/// constant calibrated as twice the worst ratio at `lambda = 20/epsilon` on a
/// disjoint set of `calibration` fields. Hyperbolic shells only.
pub fn carleman_checks(shell: &ShellDomain, calibration: usize, tests: usize, rng: &mut impl Rng) -> Result<Vec<CheckRecord>> {
    let eps = shell.epsilon();
    let held_out = (0..calibration).map(|_| PolynomialBumpField::random(shell, rng)).collect::<korn::Result<Vec<_>>>()?;
    let refs: Vec<&dyn DisplacementField> = held_out.iter().map(|f| f as &dyn DisplacementField).collect();
    let constant =
        calibrate_carleman_constant(shell, &refs, CarlemanWeight::for_width(20.0, eps)?, |f| default_grid(shell, f))?;
    let weight = CarlemanWeight::for_width(40.0, eps)?;
    let mut out = Vec::new();
    for i in 0..tests {
        let f = PolynomialBumpField::random(shell, rng)?;
        let m = carleman_coercivity_margin(shell, &f, weight, constant, &default_grid(shell, &f))?;
        out.push(CheckRecord::new(
            format!("carleman:{}", shell.patch.id),
            &[("field", i as f64), ("lambda", weight.lambda), ("constant", constant)],
            m.lhs,
            m.rhs,
            (m.lhs - m.rhs).max(0.0),
            m.holds,
        ));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub seed: u64,
    pub patch: String,
    pub class: CurvatureClass,
    pub h: f64,
    pub epsilon: f64,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckRecord>,
}

/// All suites on the configured patch at the first `(h, epsilon)` point.
pub fn run_verify(config: &RunConfig, stamp: &Stamp) -> Result<VerifyReport> {
    let (h, eps) = config.points()[0];
    let shell = config.shell(h, eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks = geometry_checks(&shell.patch);
    checks.extend(identity_checks(&shell, 10, &mut rng)?);
    checks.extend(strip_checks(&mut rng)?);
    if shell.patch.curvature_class() == CurvatureClass::Hyperbolic {
        checks.extend(carleman_checks(&shell, 10, 20, &mut rng)?);
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    Ok(VerifyReport {
        config_hash: stamp.config_hash.clone(),
        seed: stamp.seed,
        patch: config.patch.label(),
        class: shell.patch.curvature_class(),
        h,
        epsilon: eps,
        passed,
        failed: checks.len() - passed,
        checks,
    })
}
