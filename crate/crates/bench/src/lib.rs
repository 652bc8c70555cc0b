//! Benchmark fixtures.

use korn::geometry::{make_cylinder, make_torus_band, ShellDomain, TorusSide};
use korn::solver::{SolverConfig, TensorBasis};

pub fn cylinder(h: f64) -> ShellDomain {
    ShellDomain::new(make_cylinder(1.0, 1.0).unwrap(), h).unwrap()
}

pub fn torus(side: TorusSide, h: f64) -> ShellDomain {
    ShellDomain::new(make_torus_band(2.0, 1.0, side, 0.25).unwrap(), h).unwrap()
}

pub fn basis(shell: &ShellDomain, n_theta: usize, n_z: usize) -> TensorBasis {
    SolverConfig { n_theta, n_z, ..SolverConfig::default() }.basis(shell.bc).unwrap()
}
