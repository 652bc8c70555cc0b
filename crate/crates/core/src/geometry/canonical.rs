use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Embedding, Frame, GeometryJets, PatchDomain, PrincipalData, Profile, SurfacePatch};
use crate::error::{invalid, KornError, Result};
use crate::jet::Jet;

/// The four profiles of a developable surface:
/// `A_z = B'(z)`, `A_theta = a(theta) B(z) + b(theta)`, `kappa_theta = c(theta) / A_theta`.
#[derive(Clone, Debug)]
pub struct DevelopableProfiles {
    pub a: Profile,
    pub b: Profile,
    pub c: Profile,
    pub big_b: Profile,
}

impl DevelopableProfiles {
    /// `lambda0` with `b = lambda0 a` (first) or `a = lambda0 b` (second),
    /// detected on a sample grid; `None` when `a` and `b` are independent.
    pub fn proportionality(&self) -> Option<Proportional> {
        let samples: Vec<(f64, f64)> = (0..=200)
            .map(|k| {
                let th = k as f64 / 200.0;
                (self.a.value(th), self.b.value(th))
            })
            .collect();
        let scale = samples.iter().fold(0f64, |m, &(a, b)| m.max(a.abs()).max(b.abs()));
        let tol = 1e-12 * scale.max(1e-300);
        let try_ratio = |num: &dyn Fn(&(f64, f64)) -> f64, den: &dyn Fn(&(f64, f64)) -> f64| {
            if samples.iter().any(|s| den(s).abs() <= tol) {
                return None;
            }
            let lambda = num(&samples[0]) / den(&samples[0]);
            samples
                .iter()
                .all(|s| (num(s) - lambda * den(s)).abs() <= tol * (1.0 + lambda.abs()))
                .then_some(lambda)
        };
        if let Some(l) = try_ratio(&|s| s.1, &|s| s.0) {
            return Some(Proportional::BOverA(l));
        }
        try_ratio(&|s| s.0, &|s| s.1).map(Proportional::AOverB)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Proportional {
    /// `b = lambda0 a`.
    BOverA(f64),
    /// `a = lambda0 b`.
    AOverB(f64),
}

struct DevelopableData(DevelopableProfiles);

impl PrincipalData for DevelopableData {
    fn jets(&self, theta: f64, z: f64, order: usize) -> GeometryJets {
        let p = &self.0;
        let a = p.a.theta_jet(theta, order);
        let b = p.b.theta_jet(theta, order);
        let c = p.c.theta_jet(theta, order);
        let big_b = p.big_b.z_jet(z, order);
        let a_z = p.big_b.z_jet_of_derivative(z, order);
        let a_theta = a * big_b + b;
        GeometryJets { a_theta, a_z, kappa_theta: c / a_theta, kappa_z: Jet::zero(order) }
    }
}

struct CylinderEmbedding {
    radius: f64,
}

impl Embedding for CylinderEmbedding {
    fn frame(&self, theta: f64, z: f64) -> Frame {
        let (s, c) = (theta / self.radius).sin_cos();
        Frame {
            r: Vector3::new(self.radius * c, self.radius * s, z),
            n: Vector3::new(c, s, 0.0),
            e_theta: Vector3::new(-s, c, 0.0),
            e_z: Vector3::new(0.0, 0.0, 1.0),
        }
    }
}

struct PlaneEmbedding;

impl Embedding for PlaneEmbedding {
    fn frame(&self, theta: f64, z: f64) -> Frame {
        Frame {
            r: Vector3::new(theta, z, 0.0),
            n: Vector3::new(0.0, 0.0, 1.0),
            e_theta: Vector3::new(1.0, 0.0, 0.0),
            e_z: Vector3::new(0.0, 1.0, 0.0),
        }
    }
}

/// Embedding of a developable surface: the `theta`-curve at a reference `z`
/// is integrated from the frame equations, and the surface is ruled along the
/// constant direction `e_z(theta)`.
struct RuledEmbedding {
    profiles: DevelopableProfiles,
    z_ref: f64,
    nodes: Vec<[f64; 12]>,
    slopes: Vec<[f64; 12]>,
    step: f64,
}

impl RuledEmbedding {
    const STEPS: usize = 4096;

    fn new(profiles: DevelopableProfiles, z_ref: f64) -> Self {
        let step = 1.0 / Self::STEPS as f64;
        let mut y = [0.0; 12];
        y[3] = 1.0; // n = x
        y[7] = 1.0; // e_theta = y
        y[11] = 1.0; // e_z = z
        let mut nodes = Vec::with_capacity(Self::STEPS + 1);
        let mut slopes = Vec::with_capacity(Self::STEPS + 1);
        let rhs = |th: f64, y: &[f64; 12]| Self::rhs(&profiles, z_ref, th, y);
        for k in 0..=Self::STEPS {
            let th = k as f64 * step;
            nodes.push(y);
            slopes.push(rhs(th, &y));
            if k == Self::STEPS {
                break;
            }
            let add = |y: &[f64; 12], d: &[f64; 12], s: f64| {
                let mut o = *y;
                o.iter_mut().zip(d).for_each(|(a, b)| *a += s * b);
                o
            };
            let k1 = rhs(th, &y);
            let k2 = rhs(th + 0.5 * step, &add(&y, &k1, 0.5 * step));
            let k3 = rhs(th + 0.5 * step, &add(&y, &k2, 0.5 * step));
            let k4 = rhs(th + step, &add(&y, &k3, step));
            for i in 0..12 {
                y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        RuledEmbedding { profiles, z_ref, nodes, slopes, step }
    }

    fn rhs(p: &DevelopableProfiles, z_ref: f64, theta: f64, y: &[f64; 12]) -> [f64; 12] {
        let a = p.a.value(theta);
        let c = p.c.value(theta);
        let a_theta = a * p.big_b.value(z_ref) + p.b.value(theta);
        let mut d = [0.0; 12];
        for i in 0..3 {
            let (n, et, ez) = (y[3 + i], y[6 + i], y[9 + i]);
            d[i] = a_theta * et;
            d[3 + i] = c * et;
            d[6 + i] = -c * n - a * ez;
            d[9 + i] = a * et;
        }
        d
    }

    fn state(&self, theta: f64) -> [f64; 12] {
        let k = ((theta / self.step).floor() as isize).clamp(0, Self::STEPS as isize - 1) as usize;
        let s = (theta - k as f64 * self.step) / self.step;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        let mut out = [0.0; 12];
        for i in 0..12 {
            out[i] = h00 * self.nodes[k][i]
                + h10 * self.step * self.slopes[k][i]
                + h01 * self.nodes[k + 1][i]
                + h11 * self.step * self.slopes[k + 1][i];
        }
        out
    }
}

impl Embedding for RuledEmbedding {
    fn frame(&self, theta: f64, z: f64) -> Frame {
        let y = self.state(theta);
        let v = |o: usize| Vector3::new(y[o], y[o + 1], y[o + 2]);
        let e_z = v(9);
        let shift = self.profiles.big_b.value(z) - self.profiles.big_b.value(self.z_ref);
        Frame { r: v(0) + e_z * shift, n: v(3), e_theta: v(6), e_z }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid("epsilon", format!("must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

fn developable_patch(
    id: &str,
    profiles: DevelopableProfiles,
    z_lower: f64,
    eps: f64,
    embedding: Option<Arc<dyn Embedding>>,
) -> Result<SurfacePatch> {
    check_eps(eps)?;
    let domain = PatchDomain::strip(z_lower, eps)?;
    for k in 0..=200 {
        let z = z_lower + eps * k as f64 / 200.0;
        if !(profiles.big_b.derivs(z)[1] > 0.0) {
            return Err(invalid("B", format!("B must be strictly increasing; B'({z}) <= 0")));
        }
    }
    for k in 0..=200 {
        let theta = k as f64 / 200.0;
        for j in 0..=20 {
            let z = z_lower + eps * j as f64 / 20.0;
            let at = profiles.a.value(theta) * profiles.big_b.value(z) + profiles.b.value(theta);
            if !(at > 0.0) {
                return Err(KornError::Geometry(format!(
                    "A_theta = {at} <= 0 at (theta, z) = ({theta}, {z})"
                )));
            }
        }
    }
    let embedding =
        embedding.unwrap_or_else(|| Arc::new(RuledEmbedding::new(profiles.clone(), z_lower)) as Arc<dyn Embedding>);
    let data = Arc::new(DevelopableData(profiles.clone()));
    Ok(SurfacePatch::new(id, domain, data, Some(embedding))?.with_developable(profiles))
}

/// Circular cylinder of the given radius in arclength coordinates:
/// `A_theta = A_z = 1`, `kappa_theta = 1/radius`, `kappa_z = 0`, outward normal.
pub fn make_cylinder(radius: f64, eps: f64) -> Result<SurfacePatch> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("radius", format!("must be positive, got {radius}")));
    }
    let profiles = DevelopableProfiles {
        a: Profile::constant(0.0),
        b: Profile::constant(1.0),
        c: Profile::constant(1.0 / radius),
        big_b: Profile::linear(0.0, 1.0),
    };
    developable_patch("cylinder", profiles, 0.0, eps, Some(Arc::new(CylinderEmbedding { radius })))
}

/// The flat strip `A_theta = A_z = 1`, zero curvature.
pub fn make_flat(eps: f64) -> Result<SurfacePatch> {
    let profiles = DevelopableProfiles {
        a: Profile::constant(0.0),
        b: Profile::constant(1.0),
        c: Profile::constant(0.0),
        big_b: Profile::linear(0.0, 1.0),
    };
    developable_patch("flat", profiles, 0.0, eps, Some(Arc::new(PlaneEmbedding)))
}

/// Developable patch over `z in [0, eps]`; see [`make_developable_with_base`].
pub fn make_developable(a: Profile, b: Profile, c: Profile, big_b: Profile, eps: f64) -> Result<SurfacePatch> {
    make_developable_with_base(a, b, c, big_b, 0.0, eps)
}

/// Developable patch `A_z = B'(z)`, `A_theta = a B + b`, `kappa_theta = c / A_theta`,
/// `kappa_z = 0` over `z in [z_lower, z_lower + eps]`. An embedding is built by
/// integrating the frame equations along `theta` and ruling along `e_z`.
pub fn make_developable_with_base(
    a: Profile,
    b: Profile,
    c: Profile,
    big_b: Profile,
    z_lower: f64,
    eps: f64,
) -> Result<SurfacePatch> {
    developable_patch("developable", DevelopableProfiles { a, b, c, big_b }, z_lower, eps, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TorusSide {
    Outer,
    Inner,
}

#[derive(Clone, Copy)]
struct TorusData {
    major: f64,
    minor: f64,
    phi_center: f64,
    half_width: f64,
    span: f64,
}

impl TorusData {
    fn phi(&self, z: f64) -> f64 {
        self.phi_center + (z - self.half_width) / self.minor
    }
}

impl PrincipalData for TorusData {
    fn jets(&self, _theta: f64, z: f64, order: usize) -> GeometryJets {
        let phi = (Jet::z(z, order) - self.half_width) * (1.0 / self.minor) + self.phi_center;
        let cos = phi.cos();
        let radius = cos * self.minor + self.major;
        GeometryJets {
            a_theta: radius * self.span,
            a_z: Jet::constant(1.0, order),
            kappa_theta: cos / radius,
            kappa_z: Jet::constant(1.0 / self.minor, order),
        }
    }
}

struct TorusEmbedding(TorusData);

impl Embedding for TorusEmbedding {
    fn frame(&self, theta: f64, z: f64) -> Frame {
        let d = &self.0;
        let (sp, cp) = d.phi(z).sin_cos();
        let (ss, cs) = (d.span * theta).sin_cos();
        let rho = d.major + d.minor * cp;
        Frame {
            r: Vector3::new(rho * cs, rho * ss, d.minor * sp),
            n: Vector3::new(cp * cs, cp * ss, sp),
            e_theta: Vector3::new(-ss, cs, 0.0),
            e_z: Vector3::new(-sp * cs, -sp * ss, cp),
        }
    }
}

/// Band of a torus around the outer (`K_G > 0`) or inner (`K_G < 0`) equator.
/// `theta` runs along parallels over one radian, `z in [0, eps]` is meridian
/// arclength centred on the equator. Outward normal.
pub fn make_torus_band(major: f64, minor: f64, side: TorusSide, eps: f64) -> Result<SurfacePatch> {
    make_torus_band_with_span(major, minor, side, eps, 1.0)
}

/// As [`make_torus_band`] with `theta in [0, 1]` covering `span` radians of longitude.
pub fn make_torus_band_with_span(
    major: f64,
    minor: f64,
    side: TorusSide,
    eps: f64,
    span: f64,
) -> Result<SurfacePatch> {
    if !(minor > 0.0 && major > minor && major.is_finite()) {
        return Err(invalid("major", format!("need major > minor > 0, got ({major}, {minor})")));
    }
    if !(span > 0.0 && span <= 2.0 * PI) {
        return Err(invalid("theta_span", format!("must lie in (0, 2 pi], got {span}")));
    }
    check_eps(eps)?;
    if eps / (2.0 * minor) >= PI / 2.0 {
        return Err(KornError::Geometry(format!(
            "band too wide: eps = {eps} crosses the parabolic circles of the torus"
        )));
    }
    let data = TorusData {
        major,
        minor,
        phi_center: match side {
            TorusSide::Outer => 0.0,
            TorusSide::Inner => PI,
        },
        half_width: 0.5 * eps,
        span,
    };
    let embedding = TorusEmbedding(data);
    let id = match side {
        TorusSide::Outer => "torus_outer",
        TorusSide::Inner => "torus_inner",
    };
    SurfacePatch::new(id, PatchDomain::strip(0.0, eps)?, Arc::new(data), Some(Arc::new(embedding)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{frame_derivatives, CurvatureClass};

    fn fd_frame(patch: &SurfacePatch, th: f64, z: f64) {
        let h = 1e-5;
        let f = |a: f64, b: f64| patch.frame(a, b).unwrap();
        let g = patch.sample(th, z);
        let fr = f(th, z);
        let (dt, dz) = frame_derivatives(&fr, &g);
        let ft = [f(th + h, z), f(th - h, z)];
        let fz = [f(th, z + h), f(th, z - h)];
        let axes = |fr: &Frame| fr.axes();
        for k in 0..3 {
            let num_t = (axes(&ft[0])[k] - axes(&ft[1])[k]) / (2.0 * h);
            let num_z = (axes(&fz[0])[k] - axes(&fz[1])[k]) / (2.0 * h);
            assert!((num_t - dt[k]).norm() < 1e-7, "d_theta axis {k}: {num_t} vs {}", dt[k]);
            assert!((num_z - dz[k]).norm() < 1e-7, "d_z axis {k}: {num_z} vs {}", dz[k]);
        }
        let rt = (ft[0].r - ft[1].r) / (2.0 * h);
        let rz = (fz[0].r - fz[1].r) / (2.0 * h);
        assert!((rt - fr.e_theta * g.a_theta.value).norm() < 1e-8);
        assert!((rz - fr.e_z * g.a_z.value).norm() < 1e-8);
        assert!((fr.n.cross(&fr.e_theta) - fr.e_z).norm() < 1e-10);
    }

    #[test]
    fn frames_obey_principal_frame_equations() {
        let patches = [
            make_cylinder(1.5, 0.3).unwrap(),
            make_torus_band(2.0, 1.0, TorusSide::Outer, 0.4).unwrap(),
            make_torus_band_with_span(2.0, 1.0, TorusSide::Inner, 0.4, 2.0).unwrap(),
            make_developable_with_base(
                Profile::constant(1.0),
                Profile::linear(0.0, 1.0),
                Profile::linear(1.0, 0.5),
                Profile::linear(0.0, 1.0),
                1.0,
                0.5,
            )
            .unwrap(),
            make_developable(
                Profile::linear(0.2, 1.0),
                Profile::constant(1.0),
                Profile::constant(1.0),
                Profile::polynomial(&[0.0, 1.0, 0.5]),
                0.5,
            )
            .unwrap(),
        ];
        for p in &patches {
            for &(th, z) in &[(0.3, 0.1), (0.7, 0.25), (0.5, 0.05)] {
                let (z1, z2) = p.domain.z_range(th);
                fd_frame(p, th, z1 + (z2 - z1) * z / 0.3);
            }
        }
    }

    #[test]
    fn torus_sides_have_expected_class() {
        let o = make_torus_band(2.0, 1.0, TorusSide::Outer, 0.2).unwrap();
        let i = make_torus_band(2.0, 1.0, TorusSide::Inner, 0.2).unwrap();
        assert_eq!(o.curvature_class(), CurvatureClass::Elliptic);
        assert_eq!(i.curvature_class(), CurvatureClass::Hyperbolic);
        let (kt, kz) = o.curvature_at(0.5, 0.1);
        assert!((kt - 1.0 / 3.0).abs() < 1e-14 && (kz - 1.0).abs() < 1e-14);
        assert!(make_torus_band(2.0, 1.0, TorusSide::Outer, 1.0).is_ok());
        assert!(make_torus_band(2.0, 0.3, TorusSide::Outer, 1.0).is_err());
    }

    #[test]
    fn developable_rejects_nonpositive_metric() {
        let err = make_developable(
            Profile::constant(1.0),
            Profile::linear(0.0, 1.0),
            Profile::constant(1.0),
            Profile::linear(0.0, 1.0),
            0.1,
        )
        .unwrap_err();
        assert!(matches!(err, KornError::Geometry(_)));
    }

    #[test]
    fn proportional_profiles_are_detected() {
        let cyl = make_cylinder(1.0, 0.1).unwrap();
        assert_eq!(cyl.developable().unwrap().proportionality(), Some(Proportional::AOverB(0.0)));
        let p = DevelopableProfiles {
            a: Profile::linear(1.0, 1.0),
            b: Profile::linear(2.0, 2.0),
            c: Profile::constant(1.0),
            big_b: Profile::linear(0.0, 1.0),
        };
        assert_eq!(p.proportionality(), Some(Proportional::BOverA(2.0)));
        let q = DevelopableProfiles { b: Profile::linear(0.0, 1.0), a: Profile::constant(1.0), ..p };
        assert_eq!(q.proportionality(), None);
    }
}
