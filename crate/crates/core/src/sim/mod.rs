//! Nominal propagation, linearisation and Monte Carlo ensembles.

mod grid;
mod integrate;
mod linearize;
mod monte_carlo;

pub use grid::TimeGrid;
pub use integrate::{integrate_nominal, Trajectory};
pub use linearize::{linearize, LinearizationHistory};
pub use monte_carlo::{mc_ensemble, mc_run, Ensemble, NOISE_ALGORITHM, RNG_ALGORITHM};
