use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{BcMode, ShellDomain};
use crate::kinematics::{DisplacementField, FieldValue};
use crate::quadrature::Oscillation;

/// Clamped uniform B-splines of degree `degree` on `[0, 1]` with `elements`
/// knot spans; with `drop_ends` the two functions that do not vanish at the
/// end points are removed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplineAxis {
    pub degree: usize,
    pub elements: usize,
    pub drop_ends: bool,
}

impl SplineAxis {
    /// Axis with `count` retained functions.
    pub fn with_count(count: usize, degree: usize, drop_ends: bool) -> Result<Self> {
        let extra = if drop_ends { 2 } else { 0 };
        if degree < 1 || count + extra < degree + 1 {
            return Err(invalid("basis", format!("{count} functions of degree {degree} leave no elements")));
        }
        Ok(SplineAxis { degree, elements: count + extra - degree, drop_ends })
    }

    pub fn full_count(&self) -> usize {
        self.elements + self.degree
    }

    /// Number of retained functions.
    pub fn count(&self) -> usize {
        self.full_count() - if self.drop_ends { 2 } else { 0 }
    }

    fn knot(&self, i: isize) -> f64 {
        let p = self.degree as isize;
        ((i - p).max(0) as f64 / self.elements as f64).min(1.0)
    }

    /// Element containing `x`, clamped to the valid range.
    pub fn span(&self, x: f64) -> usize {
        ((x * self.elements as f64).floor().max(0.0) as usize).min(self.elements - 1)
    }

    /// Values and first derivatives of the `degree + 1` full-space functions
    /// active on element `span`, which are those with indices
    /// `span .. span + degree`.
    pub fn eval(&self, span: usize, x: f64, values: &mut [f64], derivs: &mut [f64]) {
        let p = self.degree;
        let k = (span + p) as isize;
        // triangular table of lower-degree values, as in the standard recurrence
        let mut n = [[0.0f64; 8]; 8];
        let mut left = [0.0f64; 8];
        let mut right = [0.0f64; 8];
        n[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - self.knot(k + 1 - j as isize);
            right[j] = self.knot(k + j as isize) - x;
            let mut saved = 0.0;
            for r in 0..j {
                n[j][r] = right[r + 1] + left[j - r];
                let temp = n[r][j - 1] / n[j][r];
                n[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j][j] = saved;
        }
        for j in 0..=p {
            values[j] = n[j][p];
        }
        // first derivative from the degree p-1 values
        for r in 0..=p {
            let mut d = 0.0;
            if r >= 1 {
                d += n[r - 1][p - 1] / n[p][r - 1];
            }
            if r < p {
                d -= n[r][p - 1] / n[p][r];
            }
            derivs[r] = d * p as f64;
        }
    }

    /// Retained index of full-space function `i`, if kept.
    pub fn retained(&self, i: usize) -> Option<usize> {
        if self.drop_ends {
            if i == 0 || i + 1 == self.full_count() {
                None
            } else {
                Some(i - 1)
            }
        } else {
            Some(i)
        }
    }
}

/// Legendre polynomials `P_0 .. P_degree` and their derivatives at `x`.
pub fn legendre(degree: usize, x: f64, values: &mut [f64], derivs: &mut [f64]) {
    values[0] = 1.0;
    derivs[0] = 0.0;
    if degree >= 1 {
        values[1] = x;
        derivs[1] = 1.0;
    }
    for k in 2..=degree {
        let kf = k as f64;
        values[k] = ((2.0 * kf - 1.0) * x * values[k - 1] - (kf - 1.0) * values[k - 2]) / kf;
        derivs[k] = derivs[k - 2] + (2.0 * kf - 1.0) * values[k - 1];
    }
}

/// Legendre polynomials in `t` times B-splines in `theta` and `z`, one copy
/// per displacement component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorBasis {
    pub p_t: usize,
    pub theta: SplineAxis,
    pub z: SplineAxis,
}

impl TensorBasis {
    /// Cubic splines with `n_theta` and `n_z` retained functions; boundary
    /// functions are dropped in Dirichlet mode.
    pub fn new(p_t: usize, n_theta: usize, n_z: usize, bc: BcMode) -> Result<Self> {
        Self::with_degree(p_t, n_theta, n_z, 3, bc)
    }

    pub fn with_degree(p_t: usize, n_theta: usize, n_z: usize, degree: usize, bc: BcMode) -> Result<Self> {
        if p_t > 6 || degree > 7 {
            return Err(invalid("basis", "t degree at most 6 and spline degree at most 7"));
        }
        let drop = bc == BcMode::DirichletThinEdge;
        Ok(TensorBasis {
            p_t,
            theta: SplineAxis::with_count(n_theta, degree, drop)?,
            z: SplineAxis::with_count(n_z, degree, drop)?,
        })
    }

    pub fn n_theta(&self) -> usize {
        self.theta.count()
    }

    pub fn n_z(&self) -> usize {
        self.z.count()
    }

    pub fn dimension(&self) -> usize {
        3 * (self.p_t + 1) * self.n_theta() * self.n_z()
    }

    /// Index of coefficient `(i_theta, i_z, component, k)` in retained numbering.
    pub fn index(&self, i_theta: usize, i_z: usize, component: usize, k: usize) -> usize {
        ((i_theta * self.n_z() + i_z) * 3 + component) * (self.p_t + 1) + k
    }

    /// Half bandwidth of the assembled matrices in this numbering.
    pub fn half_bandwidth(&self) -> usize {
        let block = 3 * (self.p_t + 1);
        ((self.theta.degree * self.n_z() + self.z.degree) * block + block - 1).min(self.dimension() - 1)
    }
}

/// Maps `t` in `(-g1, g2)` to the Legendre variable in `(-1, 1)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct NormalMap {
    pub g1: f64,
    pub g2: f64,
}

impl NormalMap {
    pub fn of(shell: &ShellDomain) -> Result<Self> {
        let (g1, g2) = shell
            .constant_barriers()
            .ok_or_else(|| invalid("barriers", "the solver supports constant barriers only"))?;
        Ok(NormalMap { g1, g2 })
    }

    pub fn tau(&self, t: f64) -> f64 {
        (2.0 * t - (self.g2 - self.g1)) / (self.g1 + self.g2)
    }

    pub fn scale(&self) -> f64 {
        2.0 / (self.g1 + self.g2)
    }
}

/// A displacement field given by coefficients in a [`TensorBasis`].
#[derive(Clone, Debug)]
pub struct DiscreteField {
    basis: TensorBasis,
    coefficients: Vec<f64>,
    map: NormalMap,
    z1: f64,
    width: f64,
}

impl DiscreteField {
    pub fn new(shell: &ShellDomain, basis: TensorBasis, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.dimension() {
            return Err(invalid(
                "coefficients",
                format!("expected {} coefficients, got {}", basis.dimension(), coefficients.len()),
            ));
        }
        let (z1, z2) = shell
            .patch
            .domain
            .rectangle()
            .ok_or_else(|| invalid("patch", "the solver needs constant z-limits"))?;
        Ok(DiscreteField { basis, coefficients, map: NormalMap::of(shell)?, z1, width: z2 - z1 })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }
}

impl DisplacementField for DiscreteField {
    fn eval(&self, t: f64, theta: f64, z: f64) -> FieldValue {
        let b = &self.basis;
        let x = (z - self.z1) / self.width;
        let (st, sz) = (b.theta.span(theta), b.z.span(x));
        let (mut nt, mut dnt, mut nz, mut dnz) = ([0.0; 8], [0.0; 8], [0.0; 8], [0.0; 8]);
        b.theta.eval(st, theta, &mut nt, &mut dnt);
        b.z.eval(sz, x, &mut nz, &mut dnz);
        let (mut l, mut dl) = ([0.0; 7], [0.0; 7]);
        legendre(b.p_t, self.map.tau(t), &mut l, &mut dl);
        let mut out = FieldValue::default();
        for a in 0..=b.theta.degree {
            let Some(ia) = b.theta.retained(st + a) else { continue };
            for c in 0..=b.z.degree {
                let Some(ic) = b.z.retained(sz + c) else { continue };
                let (n, n_th, n_z) = (nt[a] * nz[c], dnt[a] * nz[c], nt[a] * dnz[c] / self.width);
                for comp in 0..3 {
                    for k in 0..=b.p_t {
                        let x = self.coefficients[b.index(ia, ic, comp, k)];
                        if x == 0.0 {
                            continue;
                        }
                        out.u[comp] += x * n * l[k];
                        out.du[comp][0] += x * n * dl[k] * self.map.scale();
                        out.du[comp][1] += x * n_th * l[k];
                        out.du[comp][2] += x * n_z * l[k];
                    }
                }
            }
        }
        out
    }

    fn oscillation(&self) -> Oscillation {
        Oscillation { theta: self.basis.theta.elements as f64, z: self.basis.z.elements as f64 / self.width }
    }
}
