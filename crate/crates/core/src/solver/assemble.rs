use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::band::{dot, BandMatrix};
use super::basis::{legendre, NormalMap, TensorBasis};
use crate::error::{invalid, KornError, Result};
use crate::geometry::{BcMode, PrincipalSample, ShellDomain};
use crate::kinematics::{gradient_from, rigid_motion_generators, DisplacementField, FieldValue, FrameMatrix};
use crate::quadrature::gauss_legendre;

/// Gauss points per spline element in `theta` and `z`, and across the thickness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementQuadrature {
    pub theta: usize,
    pub z: usize,
    pub t: usize,
}

impl ElementQuadrature {
    /// `degree + 1` points per element in-plane and `p_t + 4` in `t`.
    pub fn for_basis(basis: &TensorBasis) -> Self {
        ElementQuadrature { theta: basis.theta.degree + 1, z: basis.z.degree + 1, t: basis.p_t + 4 }
    }

    pub fn refine(&self) -> Self {
        ElementQuadrature { theta: self.theta + 2, z: self.z + 2, t: self.t + 2 }
    }
}

/// Skew-symmetric deflation of the gradient form in free mode.
#[derive(Clone, Debug)]
pub struct Deflation {
    /// Row `i` holds `<grad phi_i, W_l>` for the three generators.
    pub coupling: Vec<[f64; 3]>,
    /// Gram matrix `<W_l, W_m>` of the generator fields.
    pub gram: Matrix3<f64>,
    gram_inv: Matrix3<f64>,
}

impl Deflation {
    pub fn new(coupling: Vec<[f64; 3]>, gram: Matrix3<f64>) -> Result<Self> {
        let eig = gram.symmetric_eigen();
        let min = eig.eigenvalues.min();
        if !(min > 1e-12 * eig.eigenvalues.max()) {
            return Err(KornError::Geometry(format!("skew generator Gram matrix is singular (smallest eigenvalue {min:.3e})")));
        }
        let gram_inv = gram.try_inverse().expect("checked above");
        Ok(Deflation { coupling, gram, gram_inv })
    }

    fn project(&self, x: &[f64]) -> Vector3<f64> {
        let mut b = Vector3::zeros();
        for (row, xi) in self.coupling.iter().zip(x) {
            for l in 0..3 {
                b[l] += row[l] * xi;
            }
        }
        b
    }

    /// `y -= B g^{-1} B^T x`.
    pub fn subtract(&self, x: &[f64], y: &mut [f64]) {
        let a = self.gram_inv * self.project(x);
        for (row, yi) in self.coupling.iter().zip(y.iter_mut()) {
            *yi -= row[0] * a[0] + row[1] * a[1] + row[2] * a[2];
        }
    }
}

/// Timing and size data of one assembly.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssemblyInfo {
    pub dimension: usize,
    pub bandwidth: usize,
    pub quadrature: Option<ElementQuadrature>,
    pub points: usize,
    pub seconds: f64,
}

/// The strain form `S`, the gradient form `G` and the mass form, with the
/// free-mode deflation of `G` and linear constraints when present.
#[derive(Clone, Debug)]
pub struct AssembledForms {
    pub s: BandMatrix,
    pub g: BandMatrix,
    pub mass: Option<BandMatrix>,
    pub deflation: Option<Deflation>,
    /// Vectors `c` with the admissible set `c^T x = 0`.
    pub constraints: Vec<Vec<f64>>,
    pub basis: Option<TensorBasis>,
    pub bc_mode: BcMode,
    pub info: AssemblyInfo,
}

impl AssembledForms {
    /// Forms given directly as matrices, without a basis.
    pub fn from_matrices(s: BandMatrix, g: BandMatrix) -> Result<Self> {
        if s.dim() != g.dim() || s.dim() == 0 {
            return Err(invalid("forms", format!("dimensions {} and {} differ or vanish", s.dim(), g.dim())));
        }
        let info = AssemblyInfo { dimension: s.dim(), bandwidth: s.bandwidth().max(g.bandwidth()), ..Default::default() };
        Ok(AssembledForms {
            s,
            g,
            mass: None,
            deflation: None,
            constraints: Vec::new(),
            basis: None,
            bc_mode: BcMode::DirichletThinEdge,
            info,
        })
    }

    pub fn dimension(&self) -> usize {
        self.s.dim()
    }

    /// `y = G x`, deflated in free mode.
    pub fn apply_g(&self, x: &[f64], y: &mut [f64]) {
        self.g.matvec(x, y);
        if let Some(d) = &self.deflation {
            d.subtract(x, y);
        }
    }

    pub fn g_quadratic(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply_g(x, &mut y);
        dot(x, &y)
    }

    pub fn s_quadratic(&self, x: &[f64]) -> f64 {
        self.s.quadratic(x)
    }
}

/// Shared quadrature layout of a basis over a shell.
pub(crate) struct Layout<'a> {
    shell: &'a ShellDomain,
    basis: TensorBasis,
    map: NormalMap,
    z1: f64,
    width: f64,
    quad: ElementQuadrature,
    theta_rule: (Vec<f64>, Vec<f64>),
    z_rule: (Vec<f64>, Vec<f64>),
    t_rule: (Vec<f64>, Vec<f64>),
}

/// One in-plane quadrature point of an element with its local functions.
pub(crate) struct Point {
    pub theta: f64,
    pub z: f64,
    pub geo: PrincipalSample,
    /// Gauss weight times the element size and `A_theta A_z`.
    pub area: f64,
    /// Spatial index `i_theta * n_z + i_z` of each local function, if retained.
    pub global: Vec<Option<usize>>,
    /// `(N, N_theta, N_z)` of each local function.
    pub shape: Vec<[f64; 3]>,
    pub t: Vec<f64>,
    pub wt: Vec<f64>,
    /// Legendre values and `t`-derivatives at each `t` node.
    pub leg: Vec<[f64; 7]>,
    pub dleg: Vec<[f64; 7]>,
}

fn to_unit(rule: (Vec<f64>, Vec<f64>)) -> (Vec<f64>, Vec<f64>) {
    (rule.0.iter().map(|x| 0.5 * (x + 1.0)).collect(), rule.1.iter().map(|w| 0.5 * w).collect())
}

impl<'a> Layout<'a> {
    pub fn new(shell: &'a ShellDomain, basis: TensorBasis, quad: ElementQuadrature) -> Result<Self> {
        let (z1, z2) = shell
            .patch
            .domain
            .rectangle()
            .ok_or_else(|| invalid("patch", "the solver needs constant z-limits"))?;
        Ok(Layout {
            shell,
            basis,
            map: NormalMap::of(shell)?,
            z1,
            width: z2 - z1,
            quad,
            theta_rule: to_unit(gauss_legendre(quad.theta)),
            z_rule: to_unit(gauss_legendre(quad.z)),
            t_rule: gauss_legendre(quad.t),
        })
    }

    pub fn points_per_element(&self) -> usize {
        self.quad.theta * self.quad.z
    }

    pub fn element_count(&self) -> usize {
        self.basis.theta.elements * self.basis.z.elements
    }

    /// Quadrature point `q` of element `(e_theta, e_z)`.
    pub fn point(&self, e_theta: usize, e_z: usize, q: usize) -> Point {
        let b = &self.basis;
        let (qt, qz) = (q / self.quad.z, q % self.quad.z);
        let ht = 1.0 / b.theta.elements as f64;
        let hz = 1.0 / b.z.elements as f64;
        let theta = (e_theta as f64 + self.theta_rule.0[qt]) * ht;
        let x = (e_z as f64 + self.z_rule.0[qz]) * hz;
        let z = self.z1 + self.width * x;
        let geo = self.shell.patch.sample(theta, z);
        let area = self.theta_rule.1[qt] * ht * self.z_rule.1[qz] * hz * self.width * geo.a_theta.value * geo.a_z.value;
        let (mut nt, mut dnt, mut nz, mut dnz) = ([0.0; 8], [0.0; 8], [0.0; 8], [0.0; 8]);
        b.theta.eval(e_theta, theta, &mut nt, &mut dnt);
        b.z.eval(e_z, x, &mut nz, &mut dnz);
        let local = (b.theta.degree + 1) * (b.z.degree + 1);
        let mut global = Vec::with_capacity(local);
        let mut shape = Vec::with_capacity(local);
        for a in 0..=b.theta.degree {
            for c in 0..=b.z.degree {
                let g = match (b.theta.retained(e_theta + a), b.z.retained(e_z + c)) {
                    (Some(i), Some(j)) => Some(i * b.n_z() + j),
                    _ => None,
                };
                global.push(g);
                shape.push([nt[a] * nz[c], dnt[a] * nz[c], nt[a] * dnz[c] / self.width]);
            }
        }
        let (g1, g2) = (self.map.g1, self.map.g2);
        let mut t = Vec::with_capacity(self.quad.t);
        let mut wt = Vec::with_capacity(self.quad.t);
        let mut leg = Vec::with_capacity(self.quad.t);
        let mut dleg = Vec::with_capacity(self.quad.t);
        for (xi, wi) in self.t_rule.0.iter().zip(&self.t_rule.1) {
            let tt = -g1 + 0.5 * (g1 + g2) * (xi + 1.0);
            t.push(tt);
            wt.push(0.5 * (g1 + g2) * wi);
            let (mut l, mut dl) = ([0.0; 7], [0.0; 7]);
            legendre(b.p_t, self.map.tau(tt), &mut l, &mut dl);
            dleg.push(dl.map(|d| d * self.map.scale()));
            leg.push(l);
        }
        Point { theta, z, geo, area, global, shape, t, wt, leg, dleg }
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }
}

/// Gradient of the unit input in slot `j` (0 value, 1..=3 partials in
/// `t, theta, z`) of component `c`, flattened row-major.
fn unit_columns(geo: &PrincipalSample, t: f64) -> Result<[[[f64; 9]; 4]; 3]> {
    let mut out = [[[0.0; 9]; 4]; 3];
    for c in 0..3 {
        for j in 0..4 {
            let mut v = FieldValue::default();
            if j == 0 {
                v.u[c] = 1.0;
            } else {
                v.du[c][j - 1] = 1.0;
            }
            out[c][j] = flatten(&gradient_from(&v, geo, t)?);
        }
    }
    Ok(out)
}

fn flatten(m: &FrameMatrix) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = m.get(i, j);
        }
    }
    out
}

fn sym9(m: &[f64; 9]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = 0.5 * (m[3 * i + j] + m[3 * j + i]);
        }
    }
    out
}

fn dot9(a: &[f64; 9], b: &[f64; 9]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradients `m[(ck) * 3 + e]` of `L_k e_c` paired with the in-plane factor
/// `e` (value, `theta`- and `z`-derivative) at `t` node `q`.
fn column_gradients(p: &Point, q: usize, p_t: usize, cols: &[[[f64; 9]; 4]; 3]) -> Vec<[f64; 9]> {
    let blk = 3 * (p_t + 1);
    let mut m = vec![[0.0; 9]; blk * 3];
    let (l, dl) = (&p.leg[q], &p.dleg[q]);
    for c in 0..3 {
        for k in 0..=p_t {
            let ck = c * (p_t + 1) + k;
            for r in 0..9 {
                m[ck * 3][r] = l[k] * cols[c][0][r] + dl[k] * cols[c][1][r];
                m[ck * 3 + 1][r] = l[k] * cols[c][2][r];
                m[ck * 3 + 2][r] = l[k] * cols[c][3][r];
            }
        }
    }
    m
}

/// `E[(a, i), (b, j)] += sum_{e, e'} s_a^e R[(i, e), (j, e')] s_b^{e'}` with
/// `R` of size `(3 blk)^2`.
fn accumulate(e_mat: &mut [f64], r: &[f64], shape: &[[f64; 3]], scale: f64, blk: usize, zbuf: &mut Vec<f64>) {
    let nl = shape.len();
    let ne = 3 * blk;
    let nloc = nl * blk;
    zbuf.clear();
    zbuf.resize(nloc * ne, 0.0);
    for (a, s) in shape.iter().enumerate() {
        for i in 0..blk {
            let row = &mut zbuf[(a * blk + i) * ne..(a * blk + i + 1) * ne];
            for e in 0..3 {
                let f = s[e] * scale;
                if f == 0.0 {
                    continue;
                }
                let rr = &r[(i * 3 + e) * ne..(i * 3 + e + 1) * ne];
                for (z, v) in row.iter_mut().zip(rr) {
                    *z += f * v;
                }
            }
        }
    }
    for ai in 0..nloc {
        let zrow = &zbuf[ai * ne..(ai + 1) * ne];
        let erow = &mut e_mat[ai * nloc..(ai + 1) * nloc];
        for (b, s) in shape.iter().enumerate() {
            for j in 0..blk {
                let base = j * 3;
                erow[b * blk + j] += zrow[base] * s[0] + zrow[base + 1] * s[1] + zrow[base + 2] * s[2];
            }
        }
    }
}

struct ElementBlock {
    global: Vec<Option<usize>>,
    s: Vec<f64>,
    g: Vec<f64>,
    m: Vec<f64>,
    b: Vec<[f64; 3]>,
}

fn skew_generators(shell: &ShellDomain, theta: f64, z: f64) -> Result<[[f64; 9]; 3]> {
    let f = shell.patch.frame(theta, z)?;
    let q = Matrix3::from_columns(&[f.n, f.e_theta, f.e_z]);
    let mut out = [[0.0; 9]; 3];
    for (l, slot) in out.iter_mut().enumerate() {
        let mut w = Vector3::zeros();
        w[l] = 1.0;
        let local = q.transpose() * w.cross_matrix() * q;
        for i in 0..3 {
            for j in 0..3 {
                slot[3 * i + j] = local[(i, j)];
            }
        }
    }
    Ok(out)
}

fn element_block(layout: &Layout, et: usize, ez: usize, deflate: bool, gram: &mut Matrix3<f64>) -> Result<ElementBlock> {
    let basis = layout.basis();
    let p_t = basis.p_t;
    let blk = 3 * (p_t + 1);
    let ne = 3 * blk;
    let mut out: Option<ElementBlock> = None;
    let mut rg = vec![0.0; ne * ne];
    let mut rs = vec![0.0; ne * ne];
    let mut rm = vec![0.0; blk * blk];
    let mut rb = vec![[0.0; 3]; ne];
    let mut zbuf = Vec::new();
    for q in 0..layout.points_per_element() {
        let p = layout.point(et, ez, q);
        let nloc = p.shape.len() * blk;
        let blockref = out.get_or_insert_with(|| ElementBlock {
            global: p.global.clone(),
            s: vec![0.0; nloc * nloc],
            g: vec![0.0; nloc * nloc],
            m: vec![0.0; nloc * nloc],
            b: vec![[0.0; 3]; nloc],
        });
        rg.iter_mut().for_each(|x| *x = 0.0);
        rs.iter_mut().for_each(|x| *x = 0.0);
        rm.iter_mut().for_each(|x| *x = 0.0);
        rb.iter_mut().for_each(|x| *x = [0.0; 3]);
        let skew = if deflate { Some(skew_generators(layout.shell, p.theta, p.z)?) } else { None };
        for (qi, (&t, &w)) in p.t.iter().zip(&p.wt).enumerate() {
            let cols = unit_columns(&p.geo, t)?;
            let m = column_gradients(&p, qi, p_t, &cols);
            let ms: Vec<[f64; 9]> = m.iter().map(sym9).collect();
            for i in 0..ne {
                for j in 0..=i {
                    let vg = w * dot9(&m[i], &m[j]);
                    let vs = w * dot9(&ms[i], &ms[j]);
                    rg[i * ne + j] += vg;
                    rs[i * ne + j] += vs;
                }
            }
            let l = &p.leg[qi];
            for c in 0..3 {
                for k in 0..=p_t {
                    for k2 in 0..=p_t {
                        rm[(c * (p_t + 1) + k) * blk + c * (p_t + 1) + k2] += w * l[k] * l[k2];
                    }
                }
            }
            if let Some(sk) = &skew {
                for i in 0..ne {
                    for l in 0..3 {
                        rb[i][l] += w * dot9(&m[i], &sk[l]);
                    }
                }
                for l in 0..3 {
                    for l2 in 0..3 {
                        gram[(l, l2)] += p.area * w * dot9(&sk[l], &sk[l2]);
                    }
                }
            }
        }
        for i in 0..ne {
            for j in 0..i {
                rg[j * ne + i] = rg[i * ne + j];
                rs[j * ne + i] = rs[i * ne + j];
            }
        }
        accumulate(&mut blockref.g, &rg, &p.shape, p.area, blk, &mut zbuf);
        accumulate(&mut blockref.s, &rs, &p.shape, p.area, blk, &mut zbuf);
        let nl = p.shape.len();
        for a in 0..nl {
            for b in 0..nl {
                let f = p.area * p.shape[a][0] * p.shape[b][0];
                for i in 0..blk {
                    let row = (a * blk + i) * nloc + b * blk;
                    for j in 0..blk {
                        blockref.m[row + j] += f * rm[i * blk + j];
                    }
                }
            }
        }
        if deflate {
            for a in 0..nl {
                for i in 0..blk {
                    for e in 0..3 {
                        let f = p.area * p.shape[a][e];
                        for l in 0..3 {
                            blockref.b[a * blk + i][l] += f * rb[i * 3 + e][l];
                        }
                    }
                }
            }
        }
    }
    Ok(out.expect("elements have quadrature points"))
}

fn scatter(target: &mut BandMatrix, local: &[f64], global: &[Option<usize>], blk: usize) {
    let nloc = global.len() * blk;
    for (a, ga) in global.iter().enumerate() {
        let Some(ga) = ga else { continue };
        for i in 0..blk {
            let gi = ga * blk + i;
            let row = &local[(a * blk + i) * nloc..(a * blk + i + 1) * nloc];
            for (b, gb) in global.iter().enumerate() {
                let Some(gb) = gb else { continue };
                for j in 0..blk {
                    let gj = gb * blk + j;
                    if gi >= gj {
                        target.add(gi, gj, row[b * blk + j]);
                    }
                }
            }
        }
    }
}

/// Runs `f` over every element in parallel chunks of `theta`-element rows and
/// hands the results to `sink` in element order.
pub(crate) fn for_elements<T: Send>(
    layout: &Layout,
    f: impl Fn(usize, usize) -> Result<T> + Sync,
    mut sink: impl FnMut(T),
) -> Result<()> {
    let (nt, nz) = (layout.basis.theta.elements, layout.basis.z.elements);
    let chunk = 2 * rayon::current_num_threads();
    let mut start = 0;
    while start < nt {
        let end = (start + chunk).min(nt);
        let rows: Vec<Result<Vec<T>>> =
            (start..end).into_par_iter().map(|et| (0..nz).map(|ez| f(et, ez)).collect()).collect();
        for row in rows {
            for item in row? {
                sink(item);
            }
        }
        start = end;
    }
    Ok(())
}

/// Assembles `S`, `G` and the mass form of `basis` over `shell`; in free mode
/// also the skew deflation of `G` and the orthogonality constraints against
/// the projected rigid motions.
pub fn assemble(shell: &ShellDomain, basis: &TensorBasis, quad: ElementQuadrature) -> Result<AssembledForms> {
    let started = Instant::now();
    let expect_drop = shell.bc == BcMode::DirichletThinEdge;
    if basis.theta.drop_ends != expect_drop || basis.z.drop_ends != expect_drop {
        return Err(invalid("basis", format!("basis boundary treatment does not match {} mode", shell.bc)));
    }
    let layout = Layout::new(shell, *basis, quad)?;
    let free = shell.bc == BcMode::Free;
    if free {
        shell.patch.frame(0.5, layout.z1)?;
    }
    let n = basis.dimension();
    let bw = basis.half_bandwidth();
    let blk = 3 * (basis.p_t + 1);
    let mut s = BandMatrix::zeros(n, bw);
    let mut g = BandMatrix::zeros(n, bw);
    let mut m = BandMatrix::zeros(n, bw);
    let mut coupling = if free { vec![[0.0; 3]; n] } else { Vec::new() };
    let mut gram = Matrix3::zeros();
    let mut grams = Vec::new();
    for_elements(
        &layout,
        |et, ez| {
            let mut local_gram = Matrix3::zeros();
            let block = element_block(&layout, et, ez, free, &mut local_gram)?;
            Ok((block, local_gram))
        },
        |(block, local_gram)| {
            scatter(&mut s, &block.s, &block.global, blk);
            scatter(&mut g, &block.g, &block.global, blk);
            scatter(&mut m, &block.m, &block.global, blk);
            if free {
                for (a, ga) in block.global.iter().enumerate() {
                    let Some(ga) = ga else { continue };
                    for i in 0..blk {
                        let row = &mut coupling[ga * blk + i];
                        for l in 0..3 {
                            row[l] += block.b[a * blk + i][l];
                        }
                    }
                }
                grams.push(local_gram);
            }
        },
    )?;
    for lg in grams {
        gram += lg;
    }
    let (deflation, constraints) = if free {
        (Some(Deflation::new(coupling, gram)?), rigid_constraints(&layout)?)
    } else {
        (None, Vec::new())
    };
    let info = AssemblyInfo {
        dimension: n,
        bandwidth: bw,
        quadrature: Some(quad),
        points: layout.element_count() * layout.points_per_element() * quad.t,
        seconds: started.elapsed().as_secs_f64(),
    };
    Ok(AssembledForms { s, g, mass: Some(m), deflation, constraints, basis: Some(*basis), bc_mode: shell.bc, info })
}

/// Load vectors `<phi_i, u>` in weighted `L^2` for each field, together
/// with `|u|^2` and `|grad u|^2`. With `h1` the gradient pairing
/// `<grad phi_i, grad u>` is added.
pub(crate) fn load_vectors(layout: &Layout, fields: &[&dyn DisplacementField], h1: bool) -> Result<Vec<(Vec<f64>, f64, f64)>> {
    let basis = *layout.basis();
    let p_t = basis.p_t;
    let blk = 3 * (p_t + 1);
    let ne = 3 * blk;
    let n = basis.dimension();
    let nf = fields.len();
    let mut out: Vec<(Vec<f64>, f64, f64)> = (0..nf).map(|_| (vec![0.0; n], 0.0, 0.0)).collect();
    for_elements(
        layout,
        |et, ez| {
            let mut global = Vec::new();
            let mut locals: Vec<(Vec<f64>, f64, f64)> = Vec::with_capacity(nf);
            let mut values = Vec::new();
            for q in 0..layout.points_per_element() {
                let p = layout.point(et, ez, q);
                if global.is_empty() {
                    global = p.global.clone();
                    locals = (0..nf).map(|_| (vec![0.0; p.shape.len() * blk], 0.0, 0.0)).collect();
                }
                for (fi, field) in fields.iter().enumerate() {
                    field.eval_column(p.theta, p.z, &p.t, &mut values);
                    let mut r = vec![0.0; ne];
                    let (mut u2, mut g2) = (0.0, 0.0);
                    for (qi, (&t, &w)) in p.t.iter().zip(&p.wt).enumerate() {
                        let v = &values[qi];
                        let grad = flatten(&gradient_from(v, &p.geo, t)?);
                        u2 += w * v.u.iter().map(|x| x * x).sum::<f64>();
                        g2 += w * dot9(&grad, &grad);
                        let l = &p.leg[qi];
                        for c in 0..3 {
                            for k in 0..=p_t {
                                r[(c * (p_t + 1) + k) * 3] += w * l[k] * v.u[c];
                            }
                        }
                        if h1 {
                            let cols = unit_columns(&p.geo, t)?;
                            let m = column_gradients(&p, qi, p_t, &cols);
                            for i in 0..ne {
                                r[i] += w * dot9(&m[i], &grad);
                            }
                        }
                    }
                    let slot = &mut locals[fi];
                    slot.1 += p.area * u2;
                    slot.2 += p.area * g2;
                    for (a, s) in p.shape.iter().enumerate() {
                        for i in 0..blk {
                            slot.0[a * blk + i] += p.area * (s[0] * r[i * 3] + s[1] * r[i * 3 + 1] + s[2] * r[i * 3 + 2]);
                        }
                    }
                }
            }
            Ok((global, locals))
        },
        |(global, locals)| {
            for (slot, local) in out.iter_mut().zip(locals) {
                slot.1 += local.1;
                slot.2 += local.2;
                for (a, ga) in global.iter().enumerate() {
                    let Some(ga) = ga else { continue };
                    for i in 0..blk {
                        slot.0[ga * blk + i] += local.0[a * blk + i];
                    }
                }
            }
        },
    )?;
    Ok(out)
}

/// `L^2` pairings of the basis with the six rigid motions.
fn rigid_constraints(layout: &Layout) -> Result<Vec<Vec<f64>>> {
    let generators = rigid_motion_generators(&layout.shell.patch)?;
    let fields: Vec<&dyn DisplacementField> = generators.iter().map(|g| g as &dyn DisplacementField).collect();
    Ok(load_vectors(layout, &fields, false)?.into_iter().map(|(v, _, _)| v).collect())
}
