//! Tensor-product Gauss-Legendre rules over the thin domain.
//!
//! The `theta` and `z` axes use composite rules (equal panels, fixed order per
//! panel); the `t` axis is mapped onto `(-g1, g2)` column by column and the
//! `z` axis onto `[z1(theta), z2(theta)]` node by node. Panels in `theta` are
//! integrated in parallel and their partial sums are added in panel order, so
//! results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KornError, Result};
use crate::geometry::{PrincipalSample, ShellDomain, SurfacePatch};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let p = p1;
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite rule along one axis: `panels` equal panels of `order` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisRule {
    pub panels: usize,
    pub order: usize,
}

impl AxisRule {
    pub fn new(panels: usize, order: usize) -> Self {
        AxisRule { panels: panels.max(1), order: order.max(2) }
    }

    /// Nodes and weights on `[0, 1]`.
    pub fn unit_nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = gauss_legendre(self.order);
        let len = 1.0 / self.panels as f64;
        let mut nodes = Vec::with_capacity(self.panels * self.order);
        let mut weights = Vec::with_capacity(self.panels * self.order);
        for p in 0..self.panels {
            let a = p as f64 * len;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(a + 0.5 * len * (xi + 1.0));
                weights.push(0.5 * len * wi);
            }
        }
        (nodes, weights)
    }

    pub fn node_count(&self) -> usize {
        self.panels * self.order
    }
}

/// Declared oscillation of a field: the largest phase rate (radians per unit
/// coordinate) in `theta` and in `z`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub theta: f64,
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub t: AxisRule,
    pub theta: AxisRule,
    pub z: AxisRule,
}

impl QuadratureGrid {
    /// Single-panel rules of the given orders.
    pub fn new(q_t: usize, q_theta: usize, q_z: usize) -> Self {
        QuadratureGrid { t: AxisRule::new(1, q_t), theta: AxisRule::new(1, q_theta), z: AxisRule::new(1, q_z) }
    }

    /// Rule resolving a field with the given oscillation: `ceil(rate)`
    /// panels of order 6 in `theta` (at least 16), `z` panels from the `z`
    /// rate over the width (at least 16, order 8), order 4 in `t`.
    pub fn for_oscillation(osc: Oscillation, z_width: f64) -> Self {
        let theta_panels = (osc.theta.ceil() as usize).max(16);
        let z_panels = ((osc.z * z_width).ceil() as usize).max(16);
        QuadratureGrid { t: AxisRule::new(1, 4), theta: AxisRule::new(theta_panels, 6), z: AxisRule::new(z_panels, 8) }
    }

    /// Raises the order on every axis by two.
    pub fn refine(&self) -> Self {
        let up = |r: AxisRule| AxisRule::new(r.panels, r.order + 2);
        QuadratureGrid { t: up(self.t), theta: up(self.theta), z: up(self.z) }
    }

    pub fn node_count(&self) -> usize {
        self.t.node_count() * self.theta.node_count() * self.z.node_count()
    }
}

/// One `(theta, z)` node with its normal-direction rule.
pub struct Column<'a> {
    pub theta: f64,
    pub z: f64,
    pub geo: PrincipalSample,
    /// Surface weight including the measure factor `A_theta A_z`.
    pub area: f64,
    /// Normal nodes mapped to `(-g1, g2)`.
    pub t: &'a [f64],
    /// Normal weights including the interval length.
    pub wt: &'a [f64],
}

impl Column<'_> {
    /// Sums `area * wt * f(t)` over the column.
    pub fn integrate<const N: usize>(&self, mut f: impl FnMut(usize, f64) -> [f64; N]) -> [f64; N] {
        let mut acc = [0.0; N];
        for (k, (&t, &w)) in self.t.iter().zip(self.wt).enumerate() {
            let v = f(k, t);
            for i in 0..N {
                acc[i] += w * v[i];
            }
        }
        acc.map(|a| a * self.area)
    }
}

fn add_into<const N: usize>(acc: &mut [f64; N], v: &[f64; N]) {
    for i in 0..N {
        acc[i] += v[i];
    }
}

/// Integrates a vector-valued column functional over the shell.
pub fn integrate_columns<const N: usize, F>(shell: &ShellDomain, grid: &QuadratureGrid, f: F) -> Result<[f64; N]>
where
    F: Fn(&Column) -> Result<[f64; N]> + Sync,
{
    let (th_nodes, th_w) = grid.theta.unit_nodes();
    let (z_nodes, z_w) = grid.z.unit_nodes();
    let (t_nodes, t_w) = grid.t.unit_nodes();
    let per_panel = grid.theta.order;
    let patch = &shell.patch;
    let partials: Vec<Result<[f64; N]>> = (0..grid.theta.panels)
        .into_par_iter()
        .map(|p| {
            let mut acc = [0.0; N];
            let mut ts = vec![0.0; t_nodes.len()];
            let mut wts = vec![0.0; t_nodes.len()];
            for i in p * per_panel..(p + 1) * per_panel {
                let theta = th_nodes[i];
                let (z1, z2) = patch.domain.z_range(theta);
                for (zn, zw) in z_nodes.iter().zip(&z_w) {
                    let z = z1 + (z2 - z1) * zn;
                    let geo = patch.sample(theta, z);
                    let (lo, hi) = shell.t_range(theta, z);
                    for k in 0..ts.len() {
                        ts[k] = lo + (hi - lo) * t_nodes[k];
                        wts[k] = (hi - lo) * t_w[k];
                    }
                    let area = th_w[i] * zw * (z2 - z1) * geo.a_theta.value * geo.a_z.value;
                    let col = Column { theta, z, geo, area, t: &ts, wt: &wts };
                    let v = f(&col)?;
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(KornError::NonFinite { t: f64::NAN, theta, z });
                    }
                    add_into(&mut acc, &v);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = [0.0; N];
    for part in partials {
        add_into(&mut total, &part?);
    }
    Ok(total)
}

/// `integral of A_theta A_z f dtheta dz dt` over the shell.
pub fn integrate_shell<F>(shell: &ShellDomain, f: F, grid: &QuadratureGrid) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let [v] = integrate_columns(shell, grid, |col| {
        let mut acc = 0.0;
        for (&t, &w) in col.t.iter().zip(col.wt) {
            let x = f(t, col.theta, col.z);
            if !x.is_finite() {
                return Err(KornError::NonFinite { t, theta: col.theta, z: col.z });
            }
            acc += w * x;
        }
        Ok([acc * col.area])
    })?;
    Ok(v)
}

/// Integrates over `E` with the plain measure `dtheta dz`; the closure also
/// receives the principal data at the node.
pub fn integrate_surface<const N: usize, F>(patch: &SurfacePatch, grid: &QuadratureGrid, f: F) -> Result<[f64; N]>
where
    F: Fn(f64, f64, &PrincipalSample) -> [f64; N] + Sync,
{
    let (th_nodes, th_w) = grid.theta.unit_nodes();
    let (z_nodes, z_w) = grid.z.unit_nodes();
    let per_panel = grid.theta.order;
    let partials: Vec<Result<[f64; N]>> = (0..grid.theta.panels)
        .into_par_iter()
        .map(|p| {
            let mut acc = [0.0; N];
            for i in p * per_panel..(p + 1) * per_panel {
                let theta = th_nodes[i];
                let (z1, z2) = patch.domain.z_range(theta);
                for (zn, zw) in z_nodes.iter().zip(&z_w) {
                    let z = z1 + (z2 - z1) * zn;
                    let geo = patch.sample(theta, z);
                    let v = f(theta, z, &geo);
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(KornError::NonFinite { t: 0.0, theta, z });
                    }
                    let w = th_w[i] * zw * (z2 - z1);
                    for k in 0..N {
                        acc[k] += w * v[k];
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = [0.0; N];
    for part in partials {
        add_into(&mut total, &part?);
    }
    Ok(total)
}

/// Default relative tolerance of the refinement gate.
pub const GATE_TOLERANCE: f64 = 1e-6;

/// Largest relative change between two integral vectors; each component is
/// compared against its own magnitude plus `1e-13` of the largest component.
pub fn relative_change<const N: usize>(coarse: &[f64; N], fine: &[f64; N]) -> f64 {
    let scale = fine.iter().fold(0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return coarse.iter().fold(0f64, |m, x| m.max(x.abs()));
    }
    (0..N)
        .map(|k| (fine[k] - coarse[k]).abs() / (fine[k].abs() + 1e-13 * scale))
        .fold(0.0, f64::max)
}

/// Evaluates `run` on `grid` and on `grid.refine()` and fails when any
/// component changes by more than `tol` relative. Returns the refined values.
pub fn gated<const N: usize>(
    grid: &QuadratureGrid,
    tol: f64,
    run: impl Fn(&QuadratureGrid) -> Result<[f64; N]>,
) -> Result<[f64; N]> {
    let coarse = run(grid)?;
    let fine = run(&grid.refine())?;
    let change = relative_change(&coarse, &fine);
    if change > tol {
        return Err(KornError::QuadratureUnderresolved { change, tolerance: tol });
    }
    Ok(fine)
}

/// [`integrate_shell`] with the refinement gate.
pub fn integrate_shell_gated<F>(shell: &ShellDomain, f: F, grid: &QuadratureGrid, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let [v] = gated(grid, tol, |g| integrate_shell(shell, &f, g).map(|v| [v]))?;
    Ok(v)
}
