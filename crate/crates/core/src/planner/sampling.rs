use std::f64::consts::PI;

use nalgebra::{Rotation2, Vector2};
use rand::Rng;

use super::rrt::Bounds;

const MAX_REJECTIONS: usize = 10_000;

/// Uniform sample from the informed set
/// `{q : ‖q − start‖ + ‖q − goal‖ ≤ c_best}` intersected with `bounds`, or
/// from `bounds` when no solution is known yet.
pub fn sample_ellipse<R: Rng + ?Sized>(
    start: &Vector2<f64>,
    goal: &Vector2<f64>,
    c_best: f64,
    bounds: &Bounds,
    rng: &mut R,
) -> Vector2<f64> {
    if !c_best.is_finite() {
        return bounds.sample(rng);
    }
    let c_min = (goal - start).norm();
    let major = 0.5 * c_best;
    let minor = 0.5 * (c_best * c_best - c_min * c_min).max(0.0).sqrt();
    let mid = (start + goal) * 0.5;
    let rot = Rotation2::new((goal.y - start.y).atan2(goal.x - start.x));
    for _ in 0..MAX_REJECTIONS {
        let r = rng.random::<f64>().sqrt();
        let th = 2.0 * PI * rng.random::<f64>();
        let unit = Vector2::new(r * th.cos(), r * th.sin());
        let q = mid + rot * Vector2::new(major * unit.x, minor * unit.y);
        if bounds.contains(&q) {
            return q;
        }
    }
    // The start-goal segment lies in both sets.
    start + (goal - start) * rng.random::<f64>()
}
