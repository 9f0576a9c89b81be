use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_qp_from, CuboidObstacle};
use crate::uncertainty::{ConfidenceEllipsoid, Tube};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Clear,
    Collide,
}

impl Verdict {
    pub fn from_clearance(min_cstar2: f64, c2: f64) -> Self {
        if min_cstar2 < c2 {
            Verdict::Collide
        } else {
            Verdict::Clear
        }
    }
}

/// Worst-case clearance of a tube against one true obstacle.
#[derive(Clone, Debug, PartialEq)]
pub struct ClearanceReport {
    pub obstacle: String,
    /// `+∞` when no sample passed the prefilter.
    pub min_cstar2: f64,
    pub argmin_t: Option<f64>,
    pub argmin_index: Option<usize>,
    pub z_star: Option<Vector3<f64>>,
    pub c2: f64,
    pub verdict: Verdict,
    pub samples_checked: usize,
    pub qp_solves: usize,
}

fn spheres_overlap(ell: &ConfidenceEllipsoid, centroid: &Vector3<f64>, radius: f64) -> bool {
    (ell.center - centroid).norm() <= ell.bounding_radius() + radius
}

/// Necessary condition for the ellipsoid to meet the buffered obstacle.
pub fn sphere_prefilter(ell: &ConfidenceEllipsoid, obs: &CuboidObstacle) -> bool {
    spheres_overlap(ell, &obs.centroid(), obs.buffered_radius())
}

/// Sample indices visited with stride `stride`; the final sample is always
/// included.
pub(crate) fn strided(len: usize, stride: usize) -> impl Iterator<Item = usize> {
    let last = len.saturating_sub(1);
    (0..len)
        .step_by(stride)
        .chain((len > 0 && last % stride != 0).then_some(last))
}

fn check_one(tube: &Tube, obs: &CuboidObstacle, stride: usize) -> Result<ClearanceReport> {
    let centroid = obs.centroid();
    let radius = obs.circumradius();
    let a = obs.normals();
    let b = obs.offsets();
    let mut warm = obs.chebyshev_center();
    let mut report = ClearanceReport {
        obstacle: obs.id.clone(),
        min_cstar2: f64::INFINITY,
        argmin_t: None,
        argmin_index: None,
        z_star: None,
        c2: tube.c2,
        verdict: Verdict::Clear,
        samples_checked: 0,
        qp_solves: 0,
    };
    for k in strided(tube.len(), stride) {
        let ell = &tube.ellipsoids[k];
        report.samples_checked += 1;
        if !spheres_overlap(ell, &centroid, radius) {
            continue;
        }
        let sol = solve_qp_from(&ell.sigma, &ell.center, a, b, &warm)
            .map_err(|e| e.at_time(ell.t).for_obstacle(&obs.id))?;
        report.qp_solves += 1;
        warm = sol.z;
        if sol.cstar2 < report.min_cstar2 {
            report.min_cstar2 = sol.cstar2;
            report.argmin_t = Some(ell.t);
            report.argmin_index = Some(k);
            report.z_star = Some(sol.z);
        }
    }
    report.verdict = Verdict::from_clearance(report.min_cstar2, tube.c2);
    Ok(report)
}

/// Checks every `stride`-th sample of `tube` against each true obstacle
/// (buffers ignored).
pub fn check_tube_collision(tube: &Tube, obstacles: &[CuboidObstacle], stride: usize) -> Result<Vec<ClearanceReport>> {
    if stride == 0 {
        return Err(Error::InvalidInput("stride must be >= 1".into()));
    }
    obstacles.par_iter().map(|o| check_one(tube, o, stride)).collect()
}
