//! Rapid uncertainty propagation and chance-constrained path planning for
//! small unmanned aircraft.
//!
//! The crate is organised bottom-up:
//!
//! * [`vehicle`]: closed-loop right-hand sides for a quadrotor and a
//!   fixed-wing aircraft flying through Dryden gusts.
//! * [`sim`]: fixed-step RK4 nominal propagation, finite-difference
//!   linearisation and seeded Euler–Maruyama Monte Carlo ensembles.
//! * [`uncertainty`]: linear covariance (Lyapunov) propagation, the
//!   chi-squared quantile and confidence-ellipsoid tubes.
//! * [`geometry`]: cuboid obstacles, the ellipsoid/cuboid QP, the sphere
//!   prefilter and the buffer tangency solve.
//! * [`planner`]: informed RRT* in the cruise plane and the dynamic outer
//!   loop that resizes obstacle buffers from propagated covariance.
//! * [`scenario`]: the JSON scenario schema and the validate / plan /
//!   mc-compare run modes used by the command line tool.

pub mod error;
pub mod geometry;
pub mod planner;
pub mod scenario;
pub mod sim;
pub mod uncertainty;
pub mod vehicle;

pub use error::{Error, Result};
