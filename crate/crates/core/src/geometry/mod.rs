//! Mid-surfaces in principal-curvature coordinates.
//!
//! A [`SurfacePatch`] carries the metric factors `A_theta`, `A_z` and the
//! principal curvatures `kappa_theta`, `kappa_z` over the parameter set
//! `E = {0 <= theta <= 1, z1(theta) <= z <= z2(theta)}`, optionally with an
//! explicit embedding into three-space.
//!
//! Sign convention: the frame `(n, e_theta, e_z)` is right-handed and
//! `d n / d theta = A_theta kappa_theta e_theta`, `d n / d z = A_z kappa_z e_z`,
//! so a cylinder with outward normal has `kappa_theta = 1 / radius > 0`.

mod canonical;
mod profile;

pub use canonical::{
    make_cylinder, make_developable, make_developable_with_base, make_flat, make_torus_band,
    make_torus_band_with_span, DevelopableProfiles, Proportional, TorusSide,
};
pub use profile::Profile;

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, KornError, Result};
use crate::jet::Jet;

/// Lower or upper z-limit of the parameter set as a function of `theta`.
#[derive(Clone)]
pub enum ZBound {
    Constant(f64),
    Varying(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ZBound {
    pub fn at(&self, theta: f64) -> f64 {
        match self {
            ZBound::Constant(c) => *c,
            ZBound::Varying(f) => f(theta),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            ZBound::Constant(c) => Some(*c),
            ZBound::Varying(_) => None,
        }
    }
}

impl fmt::Debug for ZBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZBound::Constant(c) => write!(f, "Constant({c})"),
            ZBound::Varying(_) => f.write_str("Varying(..)"),
        }
    }
}

/// The parameter set `E` with its width scale `epsilon`.
#[derive(Clone, Debug)]
pub struct PatchDomain {
    pub z_lower: ZBound,
    pub z_upper: ZBound,
    pub epsilon: f64,
    pub c3: f64,
}

impl PatchDomain {
    /// `theta in [0,1]`, `z in [z_lower, z_lower + epsilon]`.
    pub fn strip(z_lower: f64, epsilon: f64) -> Result<Self> {
        Self::new(ZBound::Constant(z_lower), ZBound::Constant(z_lower + epsilon), epsilon, 1.0)
    }

    pub fn new(z_lower: ZBound, z_upper: ZBound, epsilon: f64, c3: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", format!("must be positive, got {epsilon}")));
        }
        if !(c3 >= 1.0) {
            return Err(invalid("c3", format!("must be at least 1, got {c3}")));
        }
        let domain = PatchDomain { z_lower, z_upper, epsilon, c3 };
        let tol = 1e-12 * epsilon.max(1.0);
        for k in 0..=200 {
            let theta = k as f64 / 200.0;
            let (z1, z2) = domain.z_range(theta);
            if z1 < 0.0 {
                return Err(invalid("z_lower", format!("negative at theta = {theta}")));
            }
            let width = z2 - z1;
            if width < epsilon - tol || width > c3 * epsilon + tol {
                return Err(invalid(
                    "z_upper",
                    format!("width {width} at theta = {theta} outside [epsilon, c3*epsilon]"),
                ));
            }
        }
        Ok(domain)
    }

    #[inline]
    pub fn z_range(&self, theta: f64) -> (f64, f64) {
        (self.z_lower.at(theta), self.z_upper.at(theta))
    }

    /// Constant z-limits, if the domain is a rectangle.
    pub fn rectangle(&self) -> Option<(f64, f64)> {
        Some((self.z_lower.constant()?, self.z_upper.constant()?))
    }

    pub fn contains(&self, theta: f64, z: f64) -> bool {
        let (z1, z2) = self.z_range(theta);
        (0.0..=1.0).contains(&theta) && z >= z1 && z <= z2
    }
}

/// Value and first partials of a scalar on the surface.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Value1 {
    pub value: f64,
    pub d_theta: f64,
    pub d_z: f64,
}

impl From<&Jet> for Value1 {
    fn from(j: &Jet) -> Self {
        Value1 { value: j.value(), d_theta: j.d_theta(), d_z: j.d_z() }
    }
}

/// Principal data and first derivatives at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PrincipalSample {
    pub a_theta: Value1,
    pub a_z: Value1,
    pub kappa_theta: Value1,
    pub kappa_z: Value1,
}

impl PrincipalSample {
    pub fn gaussian_curvature(&self) -> f64 {
        self.kappa_theta.value * self.kappa_z.value
    }
}

/// Taylor jets of the four principal-data functions.
#[derive(Clone, Copy, Debug)]
pub struct GeometryJets {
    pub a_theta: Jet,
    pub a_z: Jet,
    pub kappa_theta: Jet,
    pub kappa_z: Jet,
}

impl GeometryJets {
    pub fn sample(&self) -> PrincipalSample {
        PrincipalSample {
            a_theta: (&self.a_theta).into(),
            a_z: (&self.a_z).into(),
            kappa_theta: (&self.kappa_theta).into(),
            kappa_z: (&self.kappa_z).into(),
        }
    }
}

/// Metric factors and principal curvatures with analytic derivatives.
pub trait PrincipalData: Send + Sync {
    /// Jets of order `order` (at most [`crate::jet::MAX_ORDER`]) at `(theta, z)`.
    fn jets(&self, theta: f64, z: f64, order: usize) -> GeometryJets;

    fn sample(&self, theta: f64, z: f64) -> PrincipalSample {
        self.jets(theta, z, 1).sample()
    }
}

/// Principal data given by a closure returning jets.
pub struct FnData<F>(pub F);

impl<F> PrincipalData for FnData<F>
where
    F: Fn(f64, f64, usize) -> GeometryJets + Send + Sync,
{
    fn jets(&self, theta: f64, z: f64, order: usize) -> GeometryJets {
        (self.0)(theta, z, order)
    }
}

/// Point and orthonormal principal frame of an embedded surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub r: Vector3<f64>,
    pub n: Vector3<f64>,
    pub e_theta: Vector3<f64>,
    pub e_z: Vector3<f64>,
}

impl Frame {
    /// Frame vectors in `(t, theta, z)` order.
    pub fn axes(&self) -> [Vector3<f64>; 3] {
        [self.n, self.e_theta, self.e_z]
    }

    /// Position of the shell point at normal offset `t`.
    pub fn point(&self, t: f64) -> Vector3<f64> {
        self.r + self.n * t
    }
}

pub trait Embedding: Send + Sync {
    fn frame(&self, theta: f64, z: f64) -> Frame;
}

/// Derivatives of the frame vectors predicted by the principal data:
/// returns `(d/dtheta, d/dz)` of `[n, e_theta, e_z]`.
pub fn frame_derivatives(frame: &Frame, g: &PrincipalSample) -> ([Vector3<f64>; 3], [Vector3<f64>; 3]) {
    let at = g.a_theta.value;
    let az = g.a_z.value;
    let kt = g.kappa_theta.value;
    let kz = g.kappa_z.value;
    let at_z = g.a_theta.d_z;
    let az_t = g.a_z.d_theta;
    let (n, et, ez) = (frame.n, frame.e_theta, frame.e_z);
    let d_theta = [
        et * (at * kt),
        -n * (at * kt) - ez * (at_z / az),
        et * (at_z / az),
    ];
    let d_z = [
        ez * (az * kz),
        ez * (az_t / at),
        -n * (az * kz) - et * (az_t / at),
    ];
    (d_theta, d_z)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureClass {
    Elliptic,
    Hyperbolic,
    Parabolic,
    Mixed,
}

impl fmt::Display for CurvatureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CurvatureClass::Elliptic => "elliptic",
            CurvatureClass::Hyperbolic => "hyperbolic",
            CurvatureClass::Parabolic => "parabolic",
            CurvatureClass::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

/// Uniform sample grid over `E`, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleGrid {
    pub n_theta: usize,
    pub n_z: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid { n_theta: 200, n_z: 200 }
    }
}

impl SampleGrid {
    pub fn new(n_theta: usize, n_z: usize) -> Self {
        SampleGrid { n_theta, n_z }
    }

    pub fn points(&self, domain: &PatchDomain) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.n_theta * self.n_z);
        let step = |k: usize, n: usize| if n <= 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
        for i in 0..self.n_theta {
            let theta = step(i, self.n_theta);
            let (z1, z2) = domain.z_range(theta);
            for j in 0..self.n_z {
                out.push((theta, z1 + (z2 - z1) * step(j, self.n_z)));
            }
        }
        out
    }
}

/// A mid-surface patch in principal coordinates.
#[derive(Clone)]
pub struct SurfacePatch {
    pub id: String,
    pub domain: PatchDomain,
    data: Arc<dyn PrincipalData>,
    embedding: Option<Arc<dyn Embedding>>,
    class: CurvatureClass,
    developable: Option<Arc<DevelopableProfiles>>,
}

impl fmt::Debug for SurfacePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfacePatch")
            .field("id", &self.id)
            .field("domain", &self.domain)
            .field("class", &self.class)
            .field("embedded", &self.embedding.is_some())
            .finish()
    }
}

impl SurfacePatch {
    /// Validates positivity of the metric on a sample grid and classifies
    /// the sign of the Gaussian curvature.
    pub fn new(
        id: impl Into<String>,
        domain: PatchDomain,
        data: Arc<dyn PrincipalData>,
        embedding: Option<Arc<dyn Embedding>>,
    ) -> Result<Self> {
        let grid = SampleGrid::new(41, 21);
        let mut positive = 0usize;
        let mut negative = 0usize;
        let mut kscale = 0f64;
        let samples: Vec<PrincipalSample> =
            grid.points(&domain).iter().map(|&(t, z)| data.sample(t, z)).collect();
        for (s, (theta, z)) in samples.iter().zip(grid.points(&domain)) {
            if !(s.a_theta.value > 0.0 && s.a_z.value > 0.0) {
                return Err(KornError::Geometry(format!(
                    "metric factor not positive at (theta, z) = ({theta}, {z}): A_theta = {}, A_z = {}",
                    s.a_theta.value, s.a_z.value
                )));
            }
            kscale = kscale.max(s.kappa_theta.value.abs()).max(s.kappa_z.value.abs());
        }
        let tol = 1e-12 * kscale.max(1e-300) * kscale.max(1.0);
        for s in &samples {
            let k = s.gaussian_curvature();
            if k > tol {
                positive += 1;
            } else if k < -tol {
                negative += 1;
            }
        }
        let n = samples.len();
        let class = if positive == n {
            CurvatureClass::Elliptic
        } else if negative == n {
            CurvatureClass::Hyperbolic
        } else if positive == 0 && negative == 0 {
            CurvatureClass::Parabolic
        } else {
            CurvatureClass::Mixed
        };
        Ok(SurfacePatch { id: id.into(), domain, data, embedding, class, developable: None })
    }

    pub(crate) fn with_developable(mut self, profiles: DevelopableProfiles) -> Self {
        self.developable = Some(Arc::new(profiles));
        self
    }

    pub fn with_embedding(mut self, embedding: Arc<dyn Embedding>) -> Self {
        self.embedding = Some(embedding);
        self
    }

    pub fn curvature_class(&self) -> CurvatureClass {
        self.class
    }

    pub fn data(&self) -> &dyn PrincipalData {
        self.data.as_ref()
    }

    pub fn embedding(&self) -> Option<&dyn Embedding> {
        self.embedding.as_deref()
    }

    pub fn developable(&self) -> Option<&DevelopableProfiles> {
        self.developable.as_deref()
    }

    pub fn epsilon(&self) -> f64 {
        self.domain.epsilon
    }

    pub fn sample(&self, theta: f64, z: f64) -> PrincipalSample {
        self.data.sample(theta, z)
    }

    pub fn jets(&self, theta: f64, z: f64, order: usize) -> GeometryJets {
        self.data.jets(theta, z, order)
    }

    /// `(kappa_theta, kappa_z)` at a point.
    pub fn curvature_at(&self, theta: f64, z: f64) -> (f64, f64) {
        let s = self.sample(theta, z);
        (s.kappa_theta.value, s.kappa_z.value)
    }

    /// `(A_theta, A_z)` at a point.
    pub fn metric_at(&self, theta: f64, z: f64) -> (f64, f64) {
        let s = self.sample(theta, z);
        (s.a_theta.value, s.a_z.value)
    }

    pub fn frame(&self, theta: f64, z: f64) -> Result<Frame> {
        self.embedding
            .as_ref()
            .map(|e| e.frame(theta, z))
            .ok_or_else(|| KornError::MissingEmbedding(format!("patch `{}` has no embedding", self.id)))
    }
}

/// Residuals of the three Gauss-Codazzi relations at one point.
pub fn gauss_codazzi_at(data: &dyn PrincipalData, theta: f64, z: f64) -> [f64; 3] {
    let g = data.jets(theta, z, 2);
    let (at, az, kt, kz) = (g.a_theta, g.a_z, g.kappa_theta, g.kappa_z);
    let r1 = kz.d_theta() - (kt.value() - kz.value()) * az.d_theta() / az.value();
    let r2 = kt.d_z() - (kz.value() - kt.value()) * at.d_z() / at.value();
    let p = at.partial_z() / az.truncate(1);
    let q = az.partial_theta() / at.truncate(1);
    let r3 = p.d_z() + q.d_theta() + az.value() * at.value() * kz.value() * kt.value();
    [r1, r2, r3]
}

/// Maximum absolute Gauss-Codazzi residual over the grid.
pub fn gauss_codazzi_residual(patch: &SurfacePatch, grid: SampleGrid) -> f64 {
    grid.points(&patch.domain)
        .into_iter()
        .map(|(theta, z)| {
            gauss_codazzi_at(patch.data(), theta, z)
                .iter()
                .fold(0f64, |m, r| m.max(r.abs()))
        })
        .fold(0.0, f64::max)
}

/// Size parameters of a patch: lower metric bound `a`, metric bound `big_a`
/// (values, first and second derivatives), curvature bound `k` (values and
/// first derivatives) and the curvature floor `big_k` relevant for the class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct O1Parameters {
    pub a: f64,
    pub big_a: f64,
    pub k: f64,
    pub big_k: f64,
}

pub fn o1_parameters(patch: &SurfacePatch, grid: SampleGrid) -> Result<O1Parameters> {
    let points = grid.points(&patch.domain);
    if points.is_empty() {
        return Err(invalid("grid", "empty sample grid"));
    }
    let mut out = O1Parameters { a: f64::INFINITY, big_a: 0.0, k: 0.0, big_k: f64::INFINITY };
    let mut min_kt = f64::INFINITY;
    let mut min_kz = f64::INFINITY;
    for (theta, z) in points {
        let g = patch.jets(theta, z, 2);
        out.a = out.a.min(g.a_theta.value()).min(g.a_z.value());
        for m in [&g.a_theta, &g.a_z] {
            for d in 0..=2 {
                for j in 0..=d {
                    out.big_a = out.big_a.max(m.d(d - j, j).abs());
                }
            }
        }
        for kappa in [&g.kappa_theta, &g.kappa_z] {
            for (i, j) in [(0, 0), (1, 0), (0, 1)] {
                out.k = out.k.max(kappa.d(i, j).abs());
            }
        }
        min_kt = min_kt.min(g.kappa_theta.value().abs());
        min_kz = min_kz.min(g.kappa_z.value().abs());
    }
    out.big_k = match patch.curvature_class() {
        CurvatureClass::Parabolic => min_kt.max(min_kz),
        _ => min_kt.min(min_kz),
    };
    Ok(out)
}

/// Boundary-condition mode on the thin edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcMode {
    DirichletThinEdge,
    Free,
}

impl fmt::Display for BcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcMode::DirichletThinEdge => "dirichlet_thin_edge",
            BcMode::Free => "free",
        })
    }
}

/// Barrier function `g(theta, z)` bounding the normal variable.
#[derive(Clone)]
pub enum Barrier {
    Constant(f64),
    /// Returns `[g, g_theta, g_z]`.
    Varying(Arc<dyn Fn(f64, f64) -> [f64; 3] + Send + Sync>),
}

impl Barrier {
    #[inline]
    pub fn at(&self, theta: f64, z: f64) -> f64 {
        match self {
            Barrier::Constant(c) => *c,
            Barrier::Varying(f) => f(theta, z)[0],
        }
    }

    pub fn gradient(&self, theta: f64, z: f64) -> [f64; 2] {
        match self {
            Barrier::Constant(_) => [0.0, 0.0],
            Barrier::Varying(f) => {
                let g = f(theta, z);
                [g[1], g[2]]
            }
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            Barrier::Constant(c) => Some(*c),
            Barrier::Varying(_) => None,
        }
    }
}

impl fmt::Debug for Barrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Barrier::Constant(c) => write!(f, "Constant({c})"),
            Barrier::Varying(_) => f.write_str("Varying(..)"),
        }
    }
}

/// The thin domain `{ -g1 < t < g2 }` over a patch.
#[derive(Clone, Debug)]
pub struct ShellDomain {
    pub patch: SurfacePatch,
    pub h: f64,
    pub g1: Barrier,
    pub g2: Barrier,
    pub c1: f64,
    pub c2: f64,
    pub bc: BcMode,
}

impl ShellDomain {
    /// Constant barriers `g1 = g2 = h`, Dirichlet thin edge.
    pub fn new(patch: SurfacePatch, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h", format!("thickness must be positive, got {h}")));
        }
        let eps = patch.epsilon();
        if eps < h {
            return Err(invalid("epsilon", format!("epsilon below thickness ({eps} < {h})")));
        }
        if eps > 1.0 {
            return Err(invalid("epsilon", format!("must not exceed 1, got {eps}")));
        }
        Ok(ShellDomain {
            patch,
            h,
            g1: Barrier::Constant(h),
            g2: Barrier::Constant(h),
            c1: 1.0,
            c2: 0.0,
            bc: BcMode::DirichletThinEdge,
        })
    }

    pub fn with_bc(mut self, bc: BcMode) -> Self {
        self.bc = bc;
        self
    }

    /// Replaces the barriers, checking `h <= g <= c1 h` and
    /// `|grad g1| + |grad g2| <= c2 h` on a sample grid.
    pub fn with_barriers(mut self, g1: Barrier, g2: Barrier, c1: f64, c2: f64) -> Result<Self> {
        let h = self.h;
        let tol = 1e-12 * h;
        for (theta, z) in SampleGrid::new(41, 21).points(&self.patch.domain) {
            for (name, g) in [("g1", &g1), ("g2", &g2)] {
                let v = g.at(theta, z);
                if v < h - tol || v > c1 * h + tol {
                    return Err(invalid(name, format!("{v} outside [h, c1*h] at ({theta}, {z})")));
                }
            }
            let grad = |g: &Barrier| {
                let d = g.gradient(theta, z);
                d[0].hypot(d[1])
            };
            if grad(&g1) + grad(&g2) > c2 * h + tol {
                return Err(invalid("c2", format!("barrier gradients exceed c2*h at ({theta}, {z})")));
            }
        }
        self.g1 = g1;
        self.g2 = g2;
        self.c1 = c1;
        self.c2 = c2;
        Ok(self)
    }

    pub fn epsilon(&self) -> f64 {
        self.patch.epsilon()
    }

    /// Normal-variable interval `(-g1, g2)` at a surface point.
    #[inline]
    pub fn t_range(&self, theta: f64, z: f64) -> (f64, f64) {
        (-self.g1.at(theta, z), self.g2.at(theta, z))
    }

    /// Constant barriers, if any.
    pub fn constant_barriers(&self) -> Option<(f64, f64)> {
        Some((self.g1.constant()?, self.g2.constant()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_rejects_width_outside_bounds() {
        assert!(PatchDomain::strip(0.0, 0.1).is_ok());
        let narrow = PatchDomain::new(ZBound::Constant(0.0), ZBound::Constant(0.05), 0.1, 1.0);
        assert!(narrow.is_err());
        let negative = PatchDomain::strip(-0.1, 0.1);
        assert!(negative.is_err());
    }

    #[test]
    fn shell_rejects_epsilon_below_thickness() {
        let patch = make_cylinder(1.0, 0.01).unwrap();
        let err = ShellDomain::new(patch, 0.1).unwrap_err();
        assert!(err.to_string().contains("epsilon below thickness"));
    }

    #[test]
    fn barrier_bounds_are_checked() {
        let patch = make_cylinder(1.0, 0.5).unwrap();
        let shell = ShellDomain::new(patch, 0.01).unwrap();
        let g = Barrier::Varying(Arc::new(|th: f64, _z: f64| [0.01 * (1.0 + 0.5 * th), 0.005, 0.0]));
        assert!(shell.clone().with_barriers(g.clone(), Barrier::Constant(0.01), 2.0, 1.0).is_ok());
        assert!(shell.clone().with_barriers(g.clone(), Barrier::Constant(0.01), 1.2, 1.0).is_err());
        assert!(shell.with_barriers(g, Barrier::Constant(0.01), 2.0, 0.1).is_err());
    }
}
