//! Optimal constants in Korn's first inequality for thin shallow shells.
//!
//! The crate models a shell of thickness `h` and width `epsilon` around a
//! mid-surface given in principal coordinates, evaluates the shell gradient and
//! strain of displacement fields, constructs explicit trial fields for every
//! curvature class and regime, and computes the optimal Korn constant of a
//! Galerkin discretization as an extremal generalized Rayleigh quotient.

pub mod ansatz;
pub mod error;
pub mod geometry;
pub mod identities;
pub mod jet;
pub mod kinematics;
pub mod quadrature;
pub mod scaling;
pub mod solver;

pub use error::{KornError, Result};
