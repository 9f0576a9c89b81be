//! Desired trajectories `X_des(t)` and the analytic mission profiles.

use std::f64::consts::PI;
use std::fmt::Debug;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

/// Position, velocity and acceleration of the reference at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesiredSample {
    pub t: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

pub trait DesiredTrajectory: Debug + Send + Sync {
    fn sample(&self, t: f64) -> DesiredSample;
}

/// Reference seen by the fixed-wing outer loops. The third position
/// component is altitude; the planar part is `eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedWingReference {
    pub t: f64,
    pub h: f64,
    pub h_dot: f64,
    pub eta: Vector2<f64>,
    pub eta_dot: Vector2<f64>,
    pub eta_ddot: Vector2<f64>,
}

impl FixedWingReference {
    /// Samples `desired` at `t`; the planar acceleration is a central
    /// difference of the planar velocity with step `fd_step`.
    pub fn from_trajectory(desired: &dyn DesiredTrajectory, t: f64, fd_step: f64) -> Self {
        let s = desired.sample(t);
        let ahead = desired.sample(t + fd_step).velocity;
        let behind = desired.sample(t - fd_step).velocity;
        let eta_ddot = Vector2::new(ahead.x - behind.x, ahead.y - behind.y) / (2.0 * fd_step);
        Self {
            t,
            h: s.position.z,
            h_dot: s.velocity.z,
            eta: s.position.xy(),
            eta_dot: s.velocity.xy(),
            eta_ddot,
        }
    }
}

/// Three-phase quadrotor mission: constant ground speed along `heading`
/// while climbing, cruising level, then descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AscentCruiseDescent {
    pub start: [f64; 3],
    #[serde(default)]
    pub heading: f64,
    pub ground_speed: f64,
    pub climb_rate: f64,
    pub t_ascent: f64,
    pub t_cruise: f64,
    pub t_descent: f64,
}

impl AscentCruiseDescent {
    pub fn duration(&self) -> f64 {
        self.t_ascent + self.t_cruise + self.t_descent
    }

    fn vertical(&self, t: f64) -> (f64, f64) {
        let t1 = self.t_ascent;
        let t2 = t1 + self.t_cruise;
        let top = self.climb_rate * t1;
        if t < t1 {
            (self.climb_rate * t, self.climb_rate)
        } else if t < t2 {
            (top, 0.0)
        } else {
            (top - self.climb_rate * (t - t2), -self.climb_rate)
        }
    }
}

impl DesiredTrajectory for AscentCruiseDescent {
    fn sample(&self, t: f64) -> DesiredSample {
        let dir = Vector2::new(self.heading.cos(), self.heading.sin());
        let (dz, vz) = self.vertical(t);
        let start = Vector3::from(self.start);
        let planar = dir * self.ground_speed;
        DesiredSample {
            t,
            position: start + Vector3::new(planar.x * t, planar.y * t, dz),
            velocity: Vector3::new(planar.x, planar.y, vz),
            acceleration: Vector3::zeros(),
        }
    }
}

/// Constant-altitude flight along `heading` with a sinusoidal cross-track
/// offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LateralSinusoid {
    pub start: [f64; 3],
    #[serde(default)]
    pub heading: f64,
    pub speed: f64,
    pub amplitude: f64,
    pub period: f64,
}

impl DesiredTrajectory for LateralSinusoid {
    fn sample(&self, t: f64) -> DesiredSample {
        let along = Vector2::new(self.heading.cos(), self.heading.sin());
        let across = Vector2::new(-along.y, along.x);
        let w = 2.0 * PI / self.period;
        let (s, c) = (w * t).sin_cos();
        let p = along * (self.speed * t) + across * (self.amplitude * s);
        let v = along * self.speed + across * (self.amplitude * w * c);
        let a = across * (-self.amplitude * w * w * s);
        DesiredSample {
            t,
            position: Vector3::new(self.start[0] + p.x, self.start[1] + p.y, self.start[2]),
            velocity: Vector3::new(v.x, v.y, 0.0),
            acceleration: Vector3::new(a.x, a.y, 0.0),
        }
    }
}

/// Straight, constant-velocity reference. Mostly useful in tests.
#[derive(Clone, Debug, PartialEq)]
pub struct StraightLine {
    pub start: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl DesiredTrajectory for StraightLine {
    fn sample(&self, t: f64) -> DesiredSample {
        DesiredSample {
            t,
            position: self.start + self.velocity * t,
            velocity: self.velocity,
            acceleration: Vector3::zeros(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ascent_cruise_descent_is_continuous_in_position() {
        let p = AscentCruiseDescent {
            start: [0.0, 0.0, 5.0],
            heading: 0.3,
            ground_speed: 5.0,
            climb_rate: 2.0,
            t_ascent: 10.0,
            t_cruise: 20.0,
            t_descent: 10.0,
        };
        for &tc in &[10.0, 30.0] {
            let a = p.sample(tc - 1e-9).position;
            let b = p.sample(tc + 1e-9).position;
            assert!((a - b).norm() < 1e-6);
        }
        assert_relative_eq!(p.sample(40.0).position.z, 5.0, epsilon = 1e-12);
        assert_relative_eq!(p.sample(20.0).position.z, 25.0, epsilon = 1e-12);
    }

    #[test]
    fn sinusoid_derivatives_match_finite_differences() {
        let p = LateralSinusoid {
            start: [0.0, 0.0, 30.0],
            heading: 0.0,
            speed: 15.0,
            amplitude: 20.0,
            period: 35.0,
        };
        let h = 1e-5;
        for &t in &[0.0, 3.3, 17.0] {
            let fd_v = (p.sample(t + h).position - p.sample(t - h).position) / (2.0 * h);
            let fd_a = (p.sample(t + h).velocity - p.sample(t - h).velocity) / (2.0 * h);
            assert!((fd_v - p.sample(t).velocity).norm() < 1e-6);
            assert!((fd_a - p.sample(t).acceleration).norm() < 1e-6);
        }
    }

    #[test]
    fn fixed_wing_reference_uses_central_differences() {
        let p = LateralSinusoid {
            start: [0.0, 0.0, 30.0],
            heading: 0.0,
            speed: 15.0,
            amplitude: 20.0,
            period: 35.0,
        };
        let r = FixedWingReference::from_trajectory(&p, 4.0, 0.01);
        let exact = p.sample(4.0).acceleration.xy();
        // second order in the step
        assert!((r.eta_ddot - exact).norm() < 1e-4 * exact.norm().max(1.0));
        assert_eq!(r.h, 30.0);
    }
}
