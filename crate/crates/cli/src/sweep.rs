//! Ansatz and solver rows over the `(h, epsilon)` grid of a configuration.

use std::time::Instant;

use korn::ansatz::{ansatz_report, build_ansatz};
use korn::kinematics::default_grid;
use korn::scaling::{classify_regime, RowSource, SweepRow};
use korn::solver::{assemble, estimate_from_forms, required_n_theta, AssembledForms, KornEstimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{infer_ansatz, RunConfig};
use crate::error::{CliError, Result};

/// One trial-field row: `C1` holds the reciprocal ratio `|grad u|^2 / |e(u)|^2`,
/// a lower bound for the optimal constant, and `residual` the relative change
/// of the integrals under quadrature refinement.
pub fn ansatz_row(config: &RunConfig, h: f64, epsilon: f64) -> Result<SweepRow> {
    let started = Instant::now();
    let shell = config.shell(h, epsilon)?;
    let kind = match config.ansatz.kind {
        Some(k) => k,
        None => infer_ansatz(&shell)?,
    };
    let shape = config.ansatz.shape.unwrap_or_else(|| kind.default_shape());
    let field = build_ansatz(&shell, kind, shape)?;
    let report = ansatz_report(&shell, &field, &default_grid(&shell, &field))?;
    let q = report.quadrature;
    Ok(SweepRow {
        h,
        epsilon,
        c1: 1.0 / report.ratio,
        source: RowSource::Ansatz,
        bc_mode: shell.bc,
        patch: config.patch.label(),
        regime: classify_regime(h, epsilon)?,
        residual: report.quadrature_change,
        wall_seconds: started.elapsed().as_secs_f64(),
        metadata: format!("ansatz={kind} quad={}x{}x{}", q.t.node_count(), q.theta.node_count(), q.z.node_count()),
        resolved: true,
    })
}

/// Ansatz rows in grid order, computed concurrently.
pub fn ansatz_rows(config: &RunConfig) -> Result<Vec<SweepRow>> {
    config.points().into_par_iter().map(|(h, e)| ansatz_row(config, h, e)).collect()
}

/// A solved grid point.
#[derive(Clone, Debug)]
pub struct SolverPoint {
    pub row: SweepRow,
    pub estimate: KornEstimate,
}

/// Per-row data that does not fit the CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    pub h: f64,
    pub epsilon: f64,
    pub resolved: bool,
    pub converged: bool,
    pub iterations: usize,
    pub required_n_theta: usize,
    pub quadrature_change: f64,
    pub metadata: String,
}

impl SolverPoint {
    pub fn meta(&self) -> RowMeta {
        let e = &self.estimate;
        RowMeta {
            h: e.h,
            epsilon: e.epsilon,
            resolved: e.resolved,
            converged: e.converged,
            iterations: e.iterations,
            required_n_theta: e.required_n_theta,
            quadrature_change: e.quadrature_change,
            metadata: self.row.metadata.clone(),
        }
    }
}

/// Fails with a check error when the basis is coarser than the resolution
/// policy at any grid point, unless `allow_unresolved`.
pub fn check_resolution(config: &RunConfig, allow_unresolved: bool) -> Result<()> {
    if allow_unresolved {
        return Ok(());
    }
    let n_theta = config.solver_config().n_theta;
    for (h, e) in config.points() {
        let need = required_n_theta(&config.shell(h, e)?);
        if n_theta < need {
            return Err(CliError::check(format!(
                "basis under-resolved at h = {h}, epsilon = {e}: n_theta = {n_theta} < {need} required \
                 (raise solver.n_theta or pass --allow-unresolved)"
            )));
        }
    }
    Ok(())
}

pub fn assemble_point(config: &RunConfig, h: f64, epsilon: f64) -> Result<AssembledForms> {
    let shell = config.shell(h, epsilon)?;
    let basis = config.solver_config().basis(shell.bc)?;
    Ok(assemble(&shell, &basis, config.quadrature(&basis))?)
}

pub fn solve_point(config: &RunConfig, h: f64, epsilon: f64) -> Result<SolverPoint> {
    let started = Instant::now();
    let shell = config.shell(h, epsilon)?;
    let forms = assemble_point(config, h, epsilon)?;
    let estimate = estimate_from_forms(&shell, &forms, &config.solver_config())?;
    let b = estimate.basis;
    let q = estimate.assembly.quadrature;
    let row = SweepRow {
        h,
        epsilon,
        c1: estimate.c1,
        source: RowSource::Solver,
        bc_mode: shell.bc,
        patch: config.patch.label(),
        regime: classify_regime(h, epsilon)?,
        residual: estimate.residual,
        wall_seconds: started.elapsed().as_secs_f64(),
        metadata: format!(
            "basis={}x{}x{} dim={} quad={} iterations={}",
            b.p_t + 1,
            b.n_theta(),
            b.n_z(),
            b.dimension(),
            q.map(|q| format!("{}x{}x{}", q.t, q.theta, q.z)).unwrap_or_default(),
            estimate.iterations
        ),
        resolved: estimate.resolved,
    };
    Ok(SolverPoint { row, estimate })
}

/// Solver rows in grid order; points are solved concurrently and collected
/// in order.
pub fn solver_points(config: &RunConfig, allow_unresolved: bool) -> Result<Vec<SolverPoint>> {
    check_resolution(config, allow_unresolved)?;
    config.points().into_par_iter().map(|(h, e)| solve_point(config, h, e)).collect()
}
