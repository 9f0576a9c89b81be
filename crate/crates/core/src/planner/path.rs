use nalgebra::{Vector2, Vector3};

use crate::vehicle::{DesiredSample, DesiredTrajectory};
use crate::{Error, Result};

/// Constant-speed, constant-altitude traversal of a planar polyline.
/// Outside `[0, duration]` the first and last legs are extended linearly.
#[derive(Clone, Debug, PartialEq)]
pub struct PolylineTrajectory {
    pub points: Vec<Vector2<f64>>,
    pub altitude: f64,
    pub speed: f64,
    /// Arc length at each vertex; zero-length legs are dropped.
    cumulative: Vec<f64>,
}

impl PolylineTrajectory {
    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("at least two points")
    }

    pub fn duration(&self) -> f64 {
        self.length() / self.speed
    }

    fn leg(&self, s: f64) -> usize {
        // left limit at vertices: s in (c_i, c_{i+1}] maps to leg i
        let legs = self.points.len() - 1;
        let idx = self.cumulative.partition_point(|&c| c < s);
        idx.saturating_sub(1).min(legs - 1)
    }
}

impl DesiredTrajectory for PolylineTrajectory {
    fn sample(&self, t: f64) -> DesiredSample {
        let s = self.speed * t;
        let i = self.leg(s);
        let a = self.points[i];
        let b = self.points[i + 1];
        let dir = (b - a) / (self.cumulative[i + 1] - self.cumulative[i]);
        let p = a + dir * (s - self.cumulative[i]);
        let v = dir * self.speed;
        DesiredSample {
            t,
            position: Vector3::new(p.x, p.y, self.altitude),
            velocity: Vector3::new(v.x, v.y, 0.0),
            acceleration: Vector3::zeros(),
        }
    }
}

pub fn path_to_trajectory(points: &[Vector2<f64>], altitude: f64, speed: f64) -> Result<PolylineTrajectory> {
    if !(speed > 0.0) {
        return Err(Error::InvalidInput("cruise speed must be > 0".into()));
    }
    let mut kept: Vec<Vector2<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if kept.last().is_none_or(|q| (p - q).norm() > 0.0) {
            kept.push(*p);
        }
    }
    if kept.len() < 2 {
        return Err(Error::InvalidInput("path has zero length".into()));
    }
    let mut cumulative = Vec::with_capacity(kept.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in kept.windows(2) {
        acc += (w[1] - w[0]).norm();
        cumulative.push(acc);
    }
    Ok(PolylineTrajectory {
        points: kept,
        altitude,
        speed,
        cumulative,
    })
}
