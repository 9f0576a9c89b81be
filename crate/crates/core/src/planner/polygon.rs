use nalgebra::Vector2;

use crate::geometry::CuboidObstacle;

/// Convex cross-section `{p : n_i·p ≤ c_i}` of a buffered obstacle with a
/// bounding circle for cheap rejection.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarObstacle {
    pub id: String,
    pub halfplanes: Vec<(Vector2<f64>, f64)>,
    pub center: Vector2<f64>,
    pub radius: f64,
}

impl PlanarObstacle {
    /// `None` when the slice is empty.
    pub fn from_halfplanes(id: impl Into<String>, halfplanes: Vec<(Vector2<f64>, f64)>) -> Option<Self> {
        let verts = polygon_vertices(&halfplanes);
        if verts.is_empty() {
            return None;
        }
        let center = verts.iter().sum::<Vector2<f64>>() / verts.len() as f64;
        let radius = verts.iter().map(|v| (v - center).norm()).fold(0.0, f64::max);
        Some(Self {
            id: id.into(),
            halfplanes,
            center,
            radius,
        })
    }

    /// Closed-set membership.
    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        self.halfplanes.iter().all(|(n, c)| n.dot(p) <= *c)
    }

    /// Cyrus–Beck clipping of segment `pq`; touching counts as a hit.
    pub fn intersects_segment(&self, p: &Vector2<f64>, q: &Vector2<f64>) -> bool {
        let d = q - p;
        // bounding-circle rejection, conservative by a relative margin
        let len2 = d.norm_squared();
        let t = if len2 > 0.0 { ((self.center - p).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let closest = p + d * t;
        if (closest - self.center).norm() > self.radius * (1.0 + 1e-9) + 1e-9 {
            return false;
        }
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (n, c) in &self.halfplanes {
            let num = c - n.dot(p);
            let den = n.dot(&d);
            if den == 0.0 {
                if num < 0.0 {
                    return false;
                }
            } else {
                let t = num / den;
                if den > 0.0 {
                    t1 = t1.min(t);
                } else {
                    t0 = t0.max(t);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

fn polygon_vertices(hp: &[(Vector2<f64>, f64)]) -> Vec<Vector2<f64>> {
    let mut out = Vec::new();
    for i in 0..hp.len() {
        for j in (i + 1)..hp.len() {
            let (n1, c1) = hp[i];
            let (n2, c2) = hp[j];
            let det = n1.x * n2.y - n1.y * n2.x;
            if det.abs() < 1e-12 {
                continue;
            }
            let v = Vector2::new((c1 * n2.y - c2 * n1.y) / det, (n1.x * c2 - n2.x * c1) / det);
            let scale = 1.0 + v.amax();
            if hp.iter().all(|(n, c)| n.dot(&v) <= c + 1e-9 * scale) {
                out.push(v);
            }
        }
    }
    out
}

/// Cross-sections at `altitude` of every obstacle with its current buffer.
pub fn planar_obstacles(obstacles: &[CuboidObstacle], altitude: f64) -> Vec<PlanarObstacle> {
    obstacles
        .iter()
        .filter(|o| o.nonempty_with(o.buffer()))
        .filter_map(|o| {
            let hp = o.cross_section(altitude, o.buffer())?;
            PlanarObstacle::from_halfplanes(o.id.clone(), hp)
        })
        .collect()
}

/// True iff segment `pq` misses every obstacle.
pub fn no_collision_2d(p: &Vector2<f64>, q: &Vector2<f64>, obstacles: &[PlanarObstacle]) -> bool {
    !obstacles.iter().any(|o| o.intersects_segment(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(cx: f64, cy: f64, h: f64) -> PlanarObstacle {
        let o = CuboidObstacle::from_box("sq", [cx, cy, 0.0], [h, h, 10.0], 0.0).unwrap();
        planar_obstacles(&[o], 0.0).pop().unwrap()
    }

    #[test]
    fn endpoints_inside_collide() {
        let sq = square(0.0, 0.0, 1.0);
        assert!(!no_collision_2d(&Vector2::new(0.1, 0.1), &Vector2::new(-0.2, 0.3), &[sq]));
    }

    #[test]
    fn far_segment_is_free() {
        let sq = square(0.0, 0.0, 1.0);
        assert!(no_collision_2d(&Vector2::new(10.0, 10.0), &Vector2::new(20.0, 10.0), &[sq]));
    }

    #[test]
    fn crossing_and_touching() {
        let sq = square(0.0, 0.0, 1.0);
        assert!(sq.intersects_segment(&Vector2::new(-5.0, 0.0), &Vector2::new(5.0, 0.0)));
        // grazing the top edge counts as contact
        assert!(sq.intersects_segment(&Vector2::new(-5.0, 1.0), &Vector2::new(5.0, 1.0)));
        assert!(!sq.intersects_segment(&Vector2::new(-5.0, 1.0 + 1e-9), &Vector2::new(5.0, 1.0 + 1e-9)));
        // ending exactly on a corner
        assert!(sq.intersects_segment(&Vector2::new(3.0, 3.0), &Vector2::new(1.0, 1.0)));
    }

    #[test]
    fn slice_above_obstacle_is_dropped() {
        let o = CuboidObstacle::from_box("low", [0.0, 0.0, 2.0], [1.0; 3], 0.0).unwrap();
        assert!(planar_obstacles(std::slice::from_ref(&o), 10.0).is_empty());
        assert_eq!(planar_obstacles(&[o.with_buffer(8.0)], 10.0).len(), 1);
    }

    fn sampled_hit(o: &PlanarObstacle, p: &Vector2<f64>, q: &Vector2<f64>) -> bool {
        (0..=10_000).any(|i| o.contains(&(p + (q - p) * (i as f64 / 10_000.0))))
    }

    // length of the clipped chord, used to skip grazing cases that a point
    // sampler cannot resolve
    fn chord(o: &PlanarObstacle, p: &Vector2<f64>, q: &Vector2<f64>) -> f64 {
        let d = q - p;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (n, c) in &o.halfplanes {
            let den = n.dot(&d);
            let num = c - n.dot(p);
            if den.abs() < 1e-15 {
                if num < 0.0 {
                    return 0.0;
                }
            } else if den > 0.0 {
                t1 = t1.min(num / den);
            } else {
                t0 = t0.max(num / den);
            }
        }
        ((t1 - t0).max(0.0)) * d.norm()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn agrees_with_dense_sampling(
            yaw in 0.0..3.2f64, hx in 0.5..4.0f64, hy in 0.5..4.0f64,
            px in -10.0..10.0f64, py in -10.0..10.0f64, qx in -10.0..10.0f64, qy in -10.0..10.0f64,
        ) {
            let o = CuboidObstacle::from_box("r", [0.5, -0.3, 0.0], [hx, hy, 5.0], yaw).unwrap();
            let poly = planar_obstacles(&[o], 0.0).pop().unwrap();
            let (p, q) = (Vector2::new(px, py), Vector2::new(qx, qy));
            let exact = poly.intersects_segment(&p, &q);
            let len = (q - p).norm();
            prop_assume!(!exact || chord(&poly, &p, &q) > 2e-4 * len);
            prop_assert_eq!(exact, sampled_hit(&poly, &p, &q));
        }
    }
}
