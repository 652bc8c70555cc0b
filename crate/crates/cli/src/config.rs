//! Run configuration, read from a TOML file: `key = value` lines grouped under
//! `[section]` headers.
//!
//! ```toml
//! seed = 7
//! output = "out"
//! bc = "dirichlet_thin_edge"        # or "free"
//!
//! [patch]
//! kind = "cylinder"                 # cylinder | flat | torus | developable
//! radius = 1.0
//!
//! [thickness]
//! grid = "dyadic"                   # h = 2^-k for k = from, from + step, ..., to
//! from = 4
//! to = 6
//!
//! [width]
//! path = "fixed"                    # fixed | power | list | powers
//! value = 1.0
//!
//! [solver]                          # optional overrides
//! n_theta = 48
//! n_z = 12
//! ```
//!
//! Torus patches take `major`, `minor`, `side` (`"inner"` or `"outer"`) and an
//! optional `span`; developable patches take coefficient lists `a`, `b`, `c`,
//! `big_b` of the polynomial profiles and an optional `z_lower`. Width paths:
//! `fixed` (`value`), `power` (`epsilon = scale h^alpha`), `list` (`values`,
//! crossed with every `h`) and `powers` (`epsilon = h^alpha` for each of
//! `alphas`).

use std::path::{Path, PathBuf};

use korn::ansatz::{AnsatzKind, BumpShape};
use korn::geometry::{
    make_cylinder, make_developable_with_base, make_flat, make_torus_band_with_span, BcMode, CurvatureClass, Profile,
    ShellDomain, SurfacePatch, TorusSide,
};
use korn::scaling::FitPath;
use korn::solver::{ElementQuadrature, SolverConfig, TensorBasis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_bc")]
    pub bc: BcMode,
    pub patch: PatchSpec,
    pub thickness: ThicknessGrid,
    pub width: WidthPath,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub ansatz: AnsatzSection,
    #[serde(default)]
    pub report: ReportSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_bc() -> BcMode {
    BcMode::DirichletThinEdge
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatchSpec {
    Cylinder {
        #[serde(default = "one")]
        radius: f64,
    },
    Flat,
    Torus {
        major: f64,
        minor: f64,
        side: TorusSide,
        /// Radians of longitude covered by `theta in [0, 1]`.
        #[serde(default = "one")]
        span: f64,
    },
    Developable {
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        big_b: Vec<f64>,
        #[serde(default)]
        z_lower: f64,
    },
}

impl PatchSpec {
    /// Identifier written to the `patch` column.
    pub fn label(&self) -> String {
        match self {
            PatchSpec::Cylinder { .. } => "cylinder".into(),
            PatchSpec::Flat => "flat".into(),
            PatchSpec::Torus { side: TorusSide::Inner, .. } => "torus_inner".into(),
            PatchSpec::Torus { side: TorusSide::Outer, .. } => "torus_outer".into(),
            PatchSpec::Developable { .. } => "developable".into(),
        }
    }

    pub fn build(&self, epsilon: f64) -> korn::Result<SurfacePatch> {
        match self {
            PatchSpec::Cylinder { radius } => make_cylinder(*radius, epsilon),
            PatchSpec::Flat => make_flat(epsilon),
            PatchSpec::Torus { major, minor, side, span } => {
                make_torus_band_with_span(*major, *minor, *side, epsilon, *span)
            }
            PatchSpec::Developable { a, b, c, big_b, z_lower } => make_developable_with_base(
                Profile::polynomial(a),
                Profile::polynomial(b),
                Profile::polynomial(c),
                Profile::polynomial(big_b),
                *z_lower,
                epsilon,
            ),
        }
    }
}

/// Curvature class implied by a `patch` column label, for reports read back
/// from CSV without their configuration.
pub fn class_of_label(label: &str) -> Option<CurvatureClass> {
    match label {
        "cylinder" | "developable" => Some(CurvatureClass::Parabolic),
        "torus_outer" => Some(CurvatureClass::Elliptic),
        "torus_inner" => Some(CurvatureClass::Hyperbolic),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "grid", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThicknessGrid {
    List {
        values: Vec<f64>,
    },
    Dyadic {
        from: u32,
        to: u32,
        #[serde(default = "one_u32")]
        step: u32,
    },
}

impl ThicknessGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ThicknessGrid::List { values } => values.clone(),
            ThicknessGrid::Dyadic { from, to, step } => {
                (*from..=*to).step_by((*step).max(1) as usize).map(|k| 0.5f64.powi(k as i32)).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "snake_case", deny_unknown_fields)]
pub enum WidthPath {
    Fixed {
        value: f64,
    },
    Power {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    List {
        values: Vec<f64>,
    },
    Powers {
        alphas: Vec<f64>,
    },
}

impl WidthPath {
    pub fn epsilons(&self, h: f64) -> Vec<f64> {
        match self {
            WidthPath::Fixed { value } => vec![*value],
            WidthPath::Power { alpha, scale } => vec![scale * h.powf(*alpha)],
            WidthPath::List { values } => values.clone(),
            WidthPath::Powers { alphas } => alphas.iter().map(|a| h.powf(*a)).collect(),
        }
    }

    /// The single fit path of the sweep, if there is one.
    pub fn fit_path(&self) -> Option<FitPath> {
        match self {
            WidthPath::Fixed { value } => Some(FitPath::FixedEps(*value)),
            WidthPath::Power { alpha, scale } if *scale == 1.0 => Some(FitPath::EpsPower(*alpha)),
            _ => None,
        }
    }

    /// Exponent `alpha` with `epsilon ~ h^alpha` along the path, if defined.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            WidthPath::Fixed { .. } => Some(0.0),
            WidthPath::Power { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }
}

/// Overrides of the discretization defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub p_t: Option<usize>,
    pub n_theta: Option<usize>,
    pub n_z: Option<usize>,
    pub spline_degree: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Gauss points per element along `theta`, `z` and `t`.
    pub quad_theta: Option<usize>,
    pub quad_z: Option<usize>,
    pub quad_t: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    /// Inferred from the curvature class and regime when absent.
    pub kind: Option<AnsatzKind>,
    /// The kind's default envelope when absent.
    pub shape: Option<BumpShape>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Upper end of the width range covered by the elliptic estimate.
    pub eps0: Option<f64>,
}

/// Config hash and seed embedded in every artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let hs = self.thickness.values();
        if hs.is_empty() {
            return Err(CliError::config("thickness: no values"));
        }
        for &h in &hs {
            if !(h > 0.0 && h < 1.0) {
                return Err(CliError::config(format!("thickness: h = {h} outside (0, 1)")));
            }
            let eps = self.width.epsilons(h);
            if eps.is_empty() {
                return Err(CliError::config("width: no values"));
            }
            for e in eps {
                if !e.is_finite() || e < h {
                    return Err(CliError::config(format!("width: epsilon below thickness ({e} < h = {h})")));
                }
                if e > 1.0 {
                    return Err(CliError::config(format!("width: epsilon {e} exceeds 1")));
                }
            }
        }
        let s = &self.solver;
        if let Some(t) = s.tol {
            if !(t > 0.0) {
                return Err(CliError::config(format!("solver.tol: must be positive, got {t}")));
            }
        }
        for (name, v) in [("solver.n_theta", s.n_theta), ("solver.n_z", s.n_z)] {
            if v == Some(0) {
                return Err(CliError::config(format!("{name}: must be positive")));
            }
        }
        if let Some(e0) = self.report.eps0 {
            if !(e0 > 0.0 && e0 <= 1.0) {
                return Err(CliError::config(format!("report.eps0: must lie in (0, 1], got {e0}")));
            }
        }
        Ok(())
    }

    /// `(h, epsilon)` pairs, `h` outermost in the order given.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.thickness.values().into_iter().flat_map(|h| self.width.epsilons(h).into_iter().map(move |e| (h, e))).collect()
    }

    pub fn shell(&self, h: f64, epsilon: f64) -> Result<ShellDomain> {
        let patch = self.patch.build(epsilon).map_err(|e| CliError::from(e).context("patch"))?;
        Ok(ShellDomain::new(patch, h)?.with_bc(self.bc))
    }

    pub fn solver_config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        let s = &self.solver;
        SolverConfig {
            p_t: s.p_t.unwrap_or(d.p_t),
            n_theta: s.n_theta.unwrap_or(d.n_theta),
            n_z: s.n_z.unwrap_or(d.n_z),
            spline_degree: s.spline_degree.unwrap_or(d.spline_degree),
            tol: s.tol.unwrap_or(d.tol),
            max_iter: s.max_iter.unwrap_or(d.max_iter),
            seed: self.seed,
        }
    }

    pub fn quadrature(&self, basis: &TensorBasis) -> ElementQuadrature {
        let d = ElementQuadrature::for_basis(basis);
        let s = &self.solver;
        ElementQuadrature { theta: s.quad_theta.unwrap_or(d.theta), z: s.quad_z.unwrap_or(d.z), t: s.quad_t.unwrap_or(d.t) }
    }

    /// SHA-256 of the canonical JSON form of the configuration without the
    /// output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("configuration serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn stamp(&self) -> Stamp {
        Stamp { config_hash: self.hash(), seed: self.seed }
    }
}

/// The trial field used for a shell when none is configured: the regime-1
/// field below `epsilon = sqrt(h)` and for elliptic patches, otherwise the
/// class construction.
pub fn infer_ansatz(shell: &ShellDomain) -> Result<AnsatzKind> {
    let regime = korn::scaling::classify_regime(shell.h, shell.epsilon())?;
    let class = shell.patch.curvature_class();
    Ok(match (class, regime) {
        (_, korn::scaling::Regime::Regime1) | (CurvatureClass::Elliptic, _) => AnsatzKind::Regime1,
        (CurvatureClass::Hyperbolic, _) => AnsatzKind::Hyperbolic,
        (CurvatureClass::Parabolic, _) => {
            let proportional = shell.patch.developable().and_then(|p| p.proportionality()).is_some();
            if proportional {
                AnsatzKind::DevelopableCase1
            } else {
                AnsatzKind::DevelopableCase2
            }
        }
        (CurvatureClass::Mixed, _) => {
            return Err(CliError::config("ansatz.kind: no construction for mixed-class patches"));
        }
    })
}
