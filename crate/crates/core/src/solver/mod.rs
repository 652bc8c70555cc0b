//! Galerkin discretization of the admissible displacements and the optimal
//! Korn constant as an extremal generalized Rayleigh quotient.

mod assemble;
mod band;
mod basis;
mod eigen;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use assemble::{assemble, AssembledForms, AssemblyInfo, Deflation, ElementQuadrature};
pub use band::{BandCholesky, BandMatrix};
pub use basis::{legendre, DiscreteField, SplineAxis, TensorBasis};
pub use eigen::{min_rayleigh, RayleighSolution};

use crate::error::{invalid, KornError, Result};
use crate::geometry::{BcMode, CurvatureClass, SampleGrid, ShellDomain};
use crate::kinematics::{field_integrals, DisplacementField};
use crate::quadrature::{AxisRule, QuadratureGrid, GATE_TOLERANCE};
use assemble::{load_vectors, Layout};

/// Discretization and eigensolver settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub p_t: usize,
    pub n_theta: usize,
    pub n_z: usize,
    pub spline_degree: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { p_t: 2, n_theta: 48, n_z: 12, spline_degree: 3, tol: 1e-8, max_iter: 3000, seed: 0 }
    }
}

impl SolverConfig {
    pub fn basis(&self, bc: BcMode) -> Result<TensorBasis> {
        TensorBasis::with_degree(self.p_t, self.n_theta, self.n_z, self.spline_degree, bc)
    }
}

/// Smallest `n_theta` meeting the resolution policy: four functions per
/// expected wavelength, `sqrt(h)` in general and `(eps h)^{1/3}` on
/// hyperbolic patches, over the longest `theta`-line.
pub fn required_n_theta(shell: &ShellDomain) -> usize {
    let length = SampleGrid::new(21, 11)
        .points(&shell.patch.domain)
        .into_iter()
        .map(|(theta, z)| shell.patch.metric_at(theta, z).0)
        .fold(0.0, f64::max);
    let wavelength = match shell.patch.curvature_class() {
        CurvatureClass::Hyperbolic => (shell.epsilon() * shell.h).cbrt(),
        _ => shell.h.sqrt(),
    };
    (4.0 * length / wavelength).ceil() as usize
}

/// The discrete optimal Korn constant and its certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KornEstimate {
    pub h: f64,
    pub epsilon: f64,
    /// `1 / lambda_min`.
    pub c1: f64,
    pub lambda_min: f64,
    pub eigvec: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub bc_mode: BcMode,
    pub converged: bool,
    /// Whether the basis meets [`required_n_theta`].
    pub resolved: bool,
    pub required_n_theta: usize,
    pub basis: TensorBasis,
    /// Relative change of the eigenvector's norms under quadrature refinement.
    pub quadrature_change: f64,
    pub assembly: AssemblyInfo,
    pub solve_seconds: f64,
}

/// Relative change between the assembled quadratic forms of `x` and the same
/// norms of the discrete field on a refined element-aligned rule.
pub fn quadrature_change(shell: &ShellDomain, forms: &AssembledForms, x: &[f64]) -> Result<f64> {
    let basis = forms.basis.ok_or_else(|| invalid("forms", "no basis attached"))?;
    let quad = forms.info.quadrature.unwrap_or_else(|| ElementQuadrature::for_basis(&basis)).refine();
    let field = DiscreteField::new(shell, basis, x.to_vec())?;
    let grid = QuadratureGrid {
        t: AxisRule::new(1, quad.t),
        theta: AxisRule::new(basis.theta.elements, quad.theta),
        z: AxisRule::new(basis.z.elements, quad.z),
    };
    let fine = field_integrals(shell, &field, &grid)?;
    let s = forms.s.quadratic(x);
    let g = forms.g.quadratic(x);
    Ok(((s - fine.strain).abs() / fine.strain).max((g - fine.grad).abs() / fine.grad))
}

/// Computes the discrete optimal constant of `shell` with the given settings.
/// Under-resolved bases are solved and flagged; a failed quadrature gate is
/// an error.
pub fn korn_estimate(shell: &ShellDomain, config: &SolverConfig) -> Result<KornEstimate> {
    let basis = config.basis(shell.bc)?;
    let forms = assemble(shell, &basis, ElementQuadrature::for_basis(&basis))?;
    estimate_from_forms(shell, &forms, config)
}

pub fn estimate_from_forms(shell: &ShellDomain, forms: &AssembledForms, config: &SolverConfig) -> Result<KornEstimate> {
    let basis = forms.basis.ok_or_else(|| invalid("forms", "no basis attached"))?;
    let started = Instant::now();
    let sol = min_rayleigh(forms, config.tol, config.max_iter, config.seed)?;
    let solve_seconds = started.elapsed().as_secs_f64();
    let change = quadrature_change(shell, forms, &sol.eigvec)?;
    if change > GATE_TOLERANCE {
        return Err(KornError::QuadratureUnderresolved { change, tolerance: GATE_TOLERANCE });
    }
    let required = required_n_theta(shell);
    Ok(KornEstimate {
        h: shell.h,
        epsilon: shell.epsilon(),
        c1: 1.0 / sol.lambda,
        lambda_min: sol.lambda,
        eigvec: sol.eigvec,
        residual: sol.residual,
        iterations: sol.iterations,
        bc_mode: shell.bc,
        converged: sol.converged,
        resolved: basis.n_theta() >= required,
        required_n_theta: required,
        basis,
        quadrature_change: change,
        assembly: forms.info.clone(),
        solve_seconds,
    })
}

/// Projection of a trial field onto the basis and its Rayleigh quotient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialBound {
    /// `|grad u_p|^2 / |e(u_p)|^2` of the projection `u_p`, deflated in free mode.
    pub value: f64,
    /// Relative `H^1` distance between the field and its projection.
    pub projection_residual: f64,
    pub coefficients: Vec<f64>,
}

/// `H^1` projection of `field` onto the basis of `forms`; the quotient of the
/// projection never exceeds the discrete constant of the same forms.
pub fn trial_lower_bound(shell: &ShellDomain, forms: &AssembledForms, field: &dyn DisplacementField) -> Result<TrialBound> {
    let basis = forms.basis.ok_or_else(|| invalid("forms", "no basis attached"))?;
    let mass = forms.mass.as_ref().ok_or_else(|| invalid("forms", "no mass form attached"))?;
    let quad = ElementQuadrature::for_basis(&basis).refine().refine();
    let layout = Layout::new(shell, basis, quad)?;
    let (rhs, u2, g2) = load_vectors(&layout, &[field], true)?.remove(0);
    let norm_sq = u2 + g2;
    if !(norm_sq > 0.0) {
        return Err(invalid("field", "degenerate projection of a vanishing field"));
    }
    let h1 = forms.g.add_scaled(1.0, mass);
    let mut x = rhs;
    h1.cholesky()?.solve_in_place(&mut x);
    let captured = h1.quadratic(&x);
    let projection_residual = ((norm_sq - captured).max(0.0) / norm_sq).sqrt();
    if projection_residual > 0.1 {
        return Err(KornError::ProjectionResidual { residual: projection_residual });
    }
    let s = forms.s_quadratic(&x);
    if !(s > 0.0) {
        return Err(KornError::UndefinedRatio("projected field has no strain".into()));
    }
    Ok(TrialBound { value: forms.g_quadratic(&x) / s, projection_residual, coefficients: x })
}

/// `x^T G' x <= x^T G x` check data for free mode: the largest value of
/// `(x^T G' x - x^T G x) / x^T G x` over the given vectors.
pub fn deflation_excess(forms: &AssembledForms, vectors: &[Vec<f64>]) -> f64 {
    vectors
        .iter()
        .map(|x| {
            let g = forms.g.quadratic(x);
            (forms.g_quadratic(x) - g) / g
        })
        .fold(f64::MIN, f64::max)
}

/// The same space with every element split in two, which contains the
/// original space.
pub fn refine_basis(basis: &TensorBasis) -> TensorBasis {
    let split = |a: SplineAxis| SplineAxis { elements: 2 * a.elements, ..a };
    TensorBasis { p_t: basis.p_t, theta: split(basis.theta), z: split(basis.z) }
}
