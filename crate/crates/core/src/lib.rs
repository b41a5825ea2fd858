//! Numerical toolkit for the infinity-Laplace Dirichlet problem on lattice
//! grids.
//!
//! * [`grid`]: lattice domains, ball stencils, boundary data and fields.
//! * [`analytic`]: closed-form solutions and pointwise difference operators.
//! * [`mv`]: the monotone mean-value scheme (plain, upper/lower, Poisson).
//! * [`plaplace`]: finite-p energy minimization and the p-sweep.
//! * [`lipschitz`]: McShane–Whitney envelopes and comparison checks.
//! * [`tug`]: eps-step tug-of-war simulation and exact 1D values.

pub mod analytic;
pub mod error;
pub mod grid;
pub mod lipschitz;
pub mod mv;
pub mod plaplace;
pub mod tug;

pub use error::{Error, Result};
