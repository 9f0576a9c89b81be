//! Linear covariance propagation and probability-ellipsoid tubes.

mod chi2;
mod covariance;
mod tube;

pub use chi2::{chi2_cdf, chi2_quantile, ln_gamma, regularized_lower_gamma};
pub use covariance::{propagate_covariance, CovarianceHistory};
pub use tube::{build_tube, ConfidenceEllipsoid, Tube, TubeRecord};
