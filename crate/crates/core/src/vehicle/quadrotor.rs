//! Point-mass quadrotor: double integrator with quadratic drag, a dynamic
//! extension tracking controller, and a Dryden-like gust filter replicated
//! on each inertial axis.
//!
//! State layout: `[r (3), V0 (3), eta (3)]`, noise is one scalar per axis.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::desired::DesiredSample;
use crate::{Error, Result};

pub const STATE_DIM: usize = 9;
pub const NOISE_DIM: usize = 3;
pub const POSITION_ROWS: [usize; 3] = [0, 1, 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadrotorParams {
    /// kg
    pub mass: f64,
    /// kg/m^3
    pub air_density: f64,
    /// m^2
    pub reference_area: f64,
    pub drag_coefficient: f64,
    /// Row-major 3x3 gain on the tracking error.
    pub k_q: [[f64; 3]; 3],
    /// Row-major 3x3 gain on the sliding surface.
    pub lambda_q: [[f64; 3]; 3],
    /// Gust intensity per axis, m/s.
    pub gust_sigma: [f64; 3],
    /// Gust length scale per axis, m.
    pub gust_length: [f64; 3],
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        let two_i = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]];
        Self {
            mass: 1.0,
            air_density: 1.225,
            reference_area: 0.05,
            drag_coefficient: 1.0,
            k_q: two_i,
            lambda_q: two_i,
            gust_sigma: [1.0; 3],
            gust_length: [50.0; 3],
        }
    }
}

fn mat3(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| rows[i][j])
}

impl QuadrotorParams {
    pub fn k_q(&self) -> Matrix3<f64> {
        mat3(&self.k_q)
    }

    pub fn lambda_q(&self) -> Matrix3<f64> {
        mat3(&self.lambda_q)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("air_density", self.air_density),
            ("reference_area", self.reference_area),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("quadrotor {name} must be > 0")));
            }
        }
        if self.gust_sigma.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidInput("gust_sigma must be >= 0".into()));
        }
        if self.gust_length.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidInput("gust_length must be > 0".into()));
        }
        for (name, m) in [("k_q", self.k_q()), ("lambda_q", self.lambda_q())] {
            let sym = (m + m.transpose()) * 0.5;
            if sym.cholesky().is_none() {
                return Err(Error::InvalidInput(format!("{name} must be positive definite")));
            }
        }
        Ok(())
    }
}

/// Named view of the flat 9-vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadrotorState {
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
    pub eta: Vector3<f64>,
}

impl QuadrotorState {
    pub fn from_slice(x: &[f64]) -> Self {
        assert_eq!(x.len(), STATE_DIM, "quadrotor state has 9 entries");
        Self {
            r: Vector3::new(x[0], x[1], x[2]),
            v: Vector3::new(x[3], x[4], x[5]),
            eta: Vector3::new(x[6], x[7], x[8]),
        }
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        let mut out = [0.0; STATE_DIM];
        out[0..3].copy_from_slice(self.r.as_slice());
        out[3..6].copy_from_slice(self.v.as_slice());
        out[6..9].copy_from_slice(self.eta.as_slice());
        out
    }

    /// On-reference state with quiescent gust filters.
    pub fn matched(des: &DesiredSample) -> Self {
        Self {
            r: des.position,
            v: des.velocity,
            eta: Vector3::zeros(),
        }
    }
}

/// Dynamic extension tracking law `u = r̈_des − K ė − Λ S_c`.
pub fn quad_controller(
    state: &QuadrotorState,
    des: &DesiredSample,
    params: &QuadrotorParams,
) -> Vector3<f64> {
    let k = params.k_q();
    let e = state.r - des.position;
    let e_dot = state.v - des.velocity;
    let s_c = e_dot + k * e;
    des.acceleration - k * e_dot - params.lambda_q() * s_c
}

/// Per-axis gust filter coefficients `(A_i, C_i)` at speed `speed`.
/// `B_i` is always one.
pub fn quad_gust_coefficients(speed: f64, params: &QuadrotorParams) -> ([f64; 3], [f64; 3]) {
    let mut a = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let l = params.gust_length[i];
        let sigma = params.gust_sigma[i];
        a[i] = -speed / l;
        c[i] = 2f64.sqrt() * speed * sigma * (l / speed).sqrt() / (l * PI.sqrt());
    }
    (a, c)
}

pub fn quad_deriv(
    state: &QuadrotorState,
    des: &DesiredSample,
    noise: &Vector3<f64>,
    params: &QuadrotorParams,
) -> Result<[f64; STATE_DIM]> {
    let speed = state.v.norm();
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(Error::ModelDomain(format!(
            "quadrotor gust filter needs |V0| > 0, got {speed}"
        )));
    }
    let (a, c) = quad_gust_coefficients(speed, params);
    let wind = Vector3::new(c[0] * state.eta.x, c[1] * state.eta.y, c[2] * state.eta.z);
    let v_rel = state.v - wind;
    let drag_gain =
        params.air_density * params.reference_area * params.drag_coefficient / (2.0 * params.mass);
    let u = quad_controller(state, des, params);
    let v_dot = u - v_rel * (drag_gain * v_rel.norm());
    let eta_dot = Vector3::new(
        a[0] * state.eta.x + noise.x,
        a[1] * state.eta.y + noise.y,
        a[2] * state.eta.z + noise.z,
    );
    Ok(QuadrotorState {
        r: state.v,
        v: v_dot,
        eta: eta_dot,
    }
    .to_array())
}
