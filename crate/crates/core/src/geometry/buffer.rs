//! Uniform expansion of an obstacle at which it just touches the tube.

use super::collision::strided;
use super::{solve_qp_from, CuboidObstacle};
use crate::uncertainty::{ConfidenceEllipsoid, Tube};
use crate::{Error, Result};

const CSTAR_TOL: f64 = 1e-6;
const MAX_BISECT: usize = 200;
const MAX_WIDEN: usize = 64;

/// Result of [`buffer_touch_distance`].
#[derive(Clone, Debug, PartialEq)]
pub struct TouchDistance {
    /// Signed expansion `d'` of the true obstacle (`A z ≤ b + d'`) at which
    /// the critical ellipsoid is tangent to it. Positive means clearance.
    pub d: f64,
    /// Critical sample: minimum `c*²` against the true obstacle.
    pub index: usize,
    pub t: f64,
    /// `c*²` of the critical sample against the true obstacle.
    pub cstar2: f64,
    /// The ellipsoid still meets the obstacle shrunk to its Chebyshev
    /// centre; `d` is clamped to `-inradius`.
    pub saturated: bool,
}

fn cstar2_at(ell: &ConfidenceEllipsoid, obs: &CuboidObstacle, d: f64) -> Result<f64> {
    if !obs.nonempty_with(d) {
        return Ok(f64::INFINITY);
    }
    let b = obs.offsets_with(d);
    let sol = solve_qp_from(&ell.sigma, &ell.center, obs.normals(), &b, &obs.chebyshev_center())?;
    Ok(sol.cstar2)
}

/// Finds `d'` with `c*²(d') = c2` at the tube's most critical sample
/// (checked every `stride` samples).
///
/// `c*²` is non-increasing in `d'`, so the root is bracketed between the
/// true obstacle and either the expansion that swallows the centre or a
/// geometrically widened shrink, then bisected to `|c*² − c²| ≤ 1e−6`.
pub fn buffer_touch_distance(tube: &Tube, obs: &CuboidObstacle, c2: f64, stride: usize) -> Result<TouchDistance> {
    if tube.is_empty() {
        return Err(Error::InvalidInput("empty tube".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidInput("stride must be >= 1".into()));
    }
    // Lexicographic on (c*², geometric expansion) so point samples, whose
    // c*² is infinite, still yield a well-defined critical instant.
    let mut best: Option<(usize, f64, f64)> = None;
    for k in strided(tube.len(), stride) {
        let ell = &tube.ellipsoids[k];
        let c = cstar2_at(ell, obs, 0.0).map_err(|e| e.at_time(ell.t).for_obstacle(&obs.id))?;
        let g = obs.expansion_to_contain(&ell.center);
        let better = match best {
            None => true,
            Some((_, bc, bg)) => c < bc || (c == bc && g < bg),
        };
        if better {
            best = Some((k, c, g));
        }
    }
    let (index, c0, geometric) = best.expect("non-empty tube");
    let ell = &tube.ellipsoids[index];
    let wrap = |e: Error| e.at_time(ell.t).for_obstacle(&obs.id);
    let done = |d: f64, saturated: bool| TouchDistance {
        d,
        index,
        t: ell.t,
        cstar2: c0,
        saturated,
    };

    if !(ell.sigma.trace() > 0.0) {
        return Ok(done(geometric, false));
    }
    if (c0 - c2).abs() <= CSTAR_TOL {
        return Ok(done(0.0, false));
    }

    let f = |d: f64| cstar2_at(ell, obs, d).map_err(wrap);
    let (mut lo, mut hi);
    if c0 > c2 {
        // Expanding until the centre is inside drives c*² to zero.
        lo = 0.0;
        hi = geometric.max(0.0);
    } else {
        hi = 0.0;
        let floor = -obs.inradius();
        let mut step = (c2 * ell.sigma.symmetric_eigenvalues().max().max(0.0)).sqrt().max(1e-3);
        lo = (-step).max(floor);
        let mut widened = 0;
        while f(lo)? < c2 {
            if lo <= floor {
                return Ok(done(floor, true));
            }
            hi = lo;
            step *= 2.0;
            lo = (-step).max(floor);
            widened += 1;
            if widened > MAX_WIDEN {
                return Err(wrap(Error::BracketFailure(format!("no shrink reaches c² = {c2}"))));
            }
        }
    }
    // f(lo) >= c2 >= f(hi)
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECT {
        mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if (v - c2).abs() <= CSTAR_TOL {
            break;
        }
        if v > c2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(done(mid, false))
}
