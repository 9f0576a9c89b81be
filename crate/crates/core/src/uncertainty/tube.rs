use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{chi2_quantile, CovarianceHistory};
use crate::sim::Trajectory;
use crate::{Error, Result};

/// `{ω : (ω − center)ᵀ Σ⁻¹ (ω − center) ≤ c²}` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceEllipsoid {
    pub t: f64,
    pub center: Vector3<f64>,
    pub sigma: Matrix3<f64>,
    pub c2: f64,
}

impl ConfidenceEllipsoid {
    /// Radius of the smallest centred sphere containing the ellipsoid.
    pub fn bounding_radius(&self) -> f64 {
        let lmax = self.sigma.symmetric_eigenvalues().max().max(0.0);
        (self.c2 * lmax).sqrt()
    }

    /// Squared Mahalanobis distance of `p` from the centre.
    pub fn mahalanobis2(&self, p: &Vector3<f64>) -> Option<f64> {
        let d = p - self.center;
        self.sigma.cholesky().map(|ch| d.dot(&ch.solve(&d)))
    }

    pub fn to_record(&self) -> TubeRecord {
        let mut sigma = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                sigma[3 * i + j] = self.sigma[(i, j)];
            }
        }
        TubeRecord {
            t: self.t,
            center: [self.center.x, self.center.y, self.center.z],
            sigma,
            c2: self.c2,
        }
    }
}

/// One serialised tube sample; `sigma` is row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeRecord {
    pub t: f64,
    pub center: [f64; 3],
    pub sigma: [f64; 9],
    pub c2: f64,
}

impl From<&TubeRecord> for ConfidenceEllipsoid {
    fn from(r: &TubeRecord) -> Self {
        Self {
            t: r.t,
            center: Vector3::from(r.center),
            sigma: Matrix3::from_row_slice(&r.sigma),
            c2: r.c2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tube {
    pub beta: f64,
    pub c2: f64,
    pub ellipsoids: Vec<ConfidenceEllipsoid>,
}

impl Tube {
    pub fn len(&self) -> usize {
        self.ellipsoids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ellipsoids.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = TubeRecord> + '_ {
        self.ellipsoids.iter().map(ConfidenceEllipsoid::to_record)
    }
}

/// Position block of `cov` around the nominal positions, at level `beta`.
pub fn build_tube(nominal: &Trajectory, cov: &CovarianceHistory, beta: f64, rows: [usize; 3]) -> Result<Tube> {
    if nominal.grid != cov.grid || nominal.states.len() != cov.p.len() {
        return Err(Error::Dimension("nominal and covariance grids differ".into()));
    }
    let n = nominal.states.first().map_or(0, |x| x.len());
    if rows.iter().any(|&r| r >= n) || rows[0] == rows[1] || rows[1] == rows[2] || rows[0] == rows[2] {
        return Err(Error::InvalidInput(format!("invalid position rows {rows:?} for {n} states")));
    }
    let c2 = chi2_quantile(beta, 3)?;
    let ellipsoids = nominal
        .states
        .iter()
        .zip(&cov.p)
        .enumerate()
        .map(|(k, (_, p))| ConfidenceEllipsoid {
            t: nominal.grid.time(k),
            center: nominal.position(k, rows),
            sigma: Matrix3::from_fn(|i, j| p[(rows[i], rows[j])]),
            c2,
        })
        .collect();
    Ok(Tube { beta, c2, ellipsoids })
}
