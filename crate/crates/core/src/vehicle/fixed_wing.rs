//! Point-mass fixed-wing aircraft in a moving atmosphere with inner-loop
//! (bank, lift, thrust) and outer-loop (altitude, planar position)
//! controllers.
//!
//! State layout (14): `x, y, h, V, psi, gamma, T, V_des, psi_des, eta_u,
//! eta_w[2], eta_v[2]`. Noise is `(n_u, n_w, n_v)`.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::desired::FixedWingReference;
use super::dryden::dryden_fw_filters;
use super::wind::wind_rotation;
use crate::{Error, Result};

pub const STATE_DIM: usize = 14;
pub const NOISE_DIM: usize = 3;
pub const POSITION_ROWS: [usize; 3] = [IX, IY, IH];

pub const IX: usize = 0;
pub const IY: usize = 1;
pub const IH: usize = 2;
pub const IV: usize = 3;
pub const IPSI: usize = 4;
pub const IGAMMA: usize = 5;
pub const ITHRUST: usize = 6;
pub const IV_DES: usize = 7;
pub const IPSI_DES: usize = 8;
pub const IETA_U: usize = 9;
pub const IETA_W: usize = 10;
pub const IETA_V: usize = 12;

/// Guard for the lateral controller matrix and the `1/cos(gamma)` terms.
pub const SINGULARITY_EPS: f64 = 1e-6;
/// `asin` argument saturation in the altitude loop.
pub const ASIN_CLAMP: f64 = 1.0 - 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedWingParams {
    pub mass: f64,
    pub air_density: f64,
    pub reference_area: f64,
    /// `C_D0`
    pub zero_lift_drag: f64,
    /// Drag polar parameter `K_d` in `C_D = C_D0 + K_d C_L^2`.
    pub drag_polar: f64,
    pub gravity: f64,
    pub kappa_mu: f64,
    pub kappa_cl: f64,
    pub kappa_t1: f64,
    pub kappa_t2: f64,
    /// Outer-loop gain shared by the altitude and planar laws.
    pub kappa: f64,
    /// Row-major 2x2 sliding-surface gain.
    pub lambda_f: [[f64; 2]; 2],
    pub sigma_u: f64,
    pub sigma_w: f64,
    pub sigma_v: f64,
    pub length_u: f64,
    pub length_w: f64,
    pub length_v: f64,
}

impl Default for FixedWingParams {
    fn default() -> Self {
        Self {
            mass: 5.0,
            air_density: 1.225,
            reference_area: 0.5,
            zero_lift_drag: 0.02,
            drag_polar: 0.05,
            gravity: 9.81,
            // Negative: the heading equation turns away from positive bank.
            // The heading and speed loops are tuned to sit well inside the
            // outer-loop bandwidth; slower settings lose track in gusts.
            kappa_mu: -3.0,
            kappa_cl: 2.0,
            kappa_t1: 5.0,
            kappa_t2: 10.0,
            kappa: 0.5,
            lambda_f: [[1.0, 0.0], [0.0, 1.0]],
            sigma_u: 1.0,
            sigma_w: 1.0,
            sigma_v: 1.0,
            length_u: 50.0,
            length_w: 50.0,
            length_v: 50.0,
        }
    }
}

impl FixedWingParams {
    pub fn lambda_f(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.lambda_f[0][0],
            self.lambda_f[0][1],
            self.lambda_f[1][0],
            self.lambda_f[1][1],
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("air_density", self.air_density),
            ("reference_area", self.reference_area),
            ("gravity", self.gravity),
            ("length_u", self.length_u),
            ("length_w", self.length_w),
            ("length_v", self.length_v),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("fixed-wing {name} must be > 0")));
            }
        }
        for (name, v) in [
            ("sigma_u", self.sigma_u),
            ("sigma_w", self.sigma_w),
            ("sigma_v", self.sigma_v),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidInput(format!("fixed-wing {name} must be >= 0")));
            }
        }
        // -Lambda_f Hurwitz
        let eig = (-self.lambda_f()).complex_eigenvalues();
        if eig.iter().any(|z| !(z.re < 0.0)) {
            return Err(Error::InvalidInput("-lambda_f must be Hurwitz".into()));
        }
        Ok(())
    }

    /// Lift coefficient for steady flight at `(v, gamma)`.
    pub fn trim_lift_coefficient(&self, v: f64, gamma: f64) -> f64 {
        2.0 * self.mass * self.gravity * gamma.cos()
            / (self.reference_area * v * v * self.air_density)
    }

    /// Thrust for steady flight at `(v, gamma)`.
    pub fn trim_thrust(&self, v: f64, gamma: f64) -> f64 {
        let q = self.reference_area * v * v * self.air_density;
        let mg = self.mass * self.gravity;
        mg * gamma.sin()
            + 0.5 * self.zero_lift_drag * q
            + 2.0 * self.drag_polar * mg * mg * gamma.cos().powi(2) / q
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedWingState {
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub v: f64,
    pub psi: f64,
    pub gamma: f64,
    pub thrust: f64,
    pub v_des: f64,
    pub psi_des: f64,
    pub eta_u: f64,
    pub eta_w: Vector2<f64>,
    pub eta_v: Vector2<f64>,
}

impl FixedWingState {
    pub fn from_slice(s: &[f64]) -> Self {
        assert_eq!(s.len(), STATE_DIM, "fixed-wing state has 14 entries");
        Self {
            x: s[IX],
            y: s[IY],
            h: s[IH],
            v: s[IV],
            psi: s[IPSI],
            gamma: s[IGAMMA],
            thrust: s[ITHRUST],
            v_des: s[IV_DES],
            psi_des: s[IPSI_DES],
            eta_u: s[IETA_U],
            eta_w: Vector2::new(s[IETA_W], s[IETA_W + 1]),
            eta_v: Vector2::new(s[IETA_V], s[IETA_V + 1]),
        }
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [
            self.x,
            self.y,
            self.h,
            self.v,
            self.psi,
            self.gamma,
            self.thrust,
            self.v_des,
            self.psi_des,
            self.eta_u,
            self.eta_w.x,
            self.eta_w.y,
            self.eta_v.x,
            self.eta_v.y,
        ]
    }

    /// Trimmed state sitting on the reference, flying along its velocity.
    pub fn matched(reference: &FixedWingReference, params: &FixedWingParams) -> Self {
        let planar = reference.eta_dot.norm();
        let v = (planar * planar + reference.h_dot * reference.h_dot).sqrt();
        let gamma = reference.h_dot.atan2(planar);
        let psi = reference.eta_dot.y.atan2(reference.eta_dot.x);
        Self {
            x: reference.eta.x,
            y: reference.eta.y,
            h: reference.h,
            v,
            psi,
            gamma,
            thrust: params.trim_thrust(v, gamma),
            v_des: v,
            psi_des: psi,
            eta_u: 0.0,
            eta_w: Vector2::zeros(),
            eta_v: Vector2::zeros(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerLoop {
    /// Velocity roll, rad.
    pub mu: f64,
    pub lift_coefficient: f64,
    /// Thrust command, N.
    pub thrust_des: f64,
}

pub fn fw_inner_loop(
    state: &FixedWingState,
    gamma_des: f64,
    params: &FixedWingParams,
) -> Result<InnerLoop> {
    if !(state.v > 0.0) {
        return Err(Error::ModelDomain(format!("airspeed must be > 0, got {}", state.v)));
    }
    let mu = params.kappa_mu * (state.psi_des - state.psi);
    let lift_coefficient = params.trim_lift_coefficient(state.v, state.gamma)
        + params.kappa_cl * (gamma_des - state.gamma);
    let thrust_des =
        params.trim_thrust(state.v, state.gamma) + params.kappa_t2 * (state.v_des - state.v);
    Ok(InnerLoop {
        mu,
        lift_coefficient,
        thrust_des,
    })
}

/// Flight-path angle command from the altitude loop, with the `asin`
/// argument saturated at `±ASIN_CLAMP`.
pub fn fw_outer_longitudinal(h: f64, v: f64, h_des: f64, h_dot_des: f64, kappa: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::ModelDomain(format!("airspeed must be > 0, got {v}")));
    }
    let arg = (h_dot_des - kappa * (h - h_des)) / v;
    Ok(arg.clamp(-ASIN_CLAMP, ASIN_CLAMP).asin())
}

/// Planar sliding-surface law; returns `(V̇_des, ψ̇_des)`.
pub fn fw_outer_lateral(
    state: &FixedWingState,
    reference: &FixedWingReference,
    params: &FixedWingParams,
) -> Result<Vector2<f64>> {
    let cg = state.gamma.cos();
    if cg.abs() <= SINGULARITY_EPS || state.v_des <= SINGULARITY_EPS {
        return Err(Error::Singular(format!(
            "cos(gamma) = {cg:.3e}, V_des = {:.3e}",
            state.v_des
        )));
    }
    let (sp, cp) = state.psi_des.sin_cos();
    let a = Matrix2::new(cg * cp, -state.v_des * cg * sp, cg * sp, state.v_des * cg * cp);
    let (s_psi, c_psi) = state.psi.sin_cos();
    let eta_dot = Vector2::new(state.v * cg * c_psi, state.v * cg * s_psi);
    let e = Vector2::new(state.x, state.y) - reference.eta;
    let e_dot = eta_dot - reference.eta_dot;
    let s = e_dot + e * params.kappa;
    let rhs = reference.eta_ddot - e_dot * params.kappa - params.lambda_f() * s;
    a.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("lateral controller matrix".into()))
}

/// Right-hand side of the closed-loop fixed-wing model.
pub fn fw_deriv(
    state: &FixedWingState,
    reference: &FixedWingReference,
    noise: &Vector3<f64>,
    params: &FixedWingParams,
) -> Result<[f64; STATE_DIM]> {
    let p = params;
    if !(state.v > SINGULARITY_EPS) {
        return Err(Error::ModelDomain(format!("airspeed must be > 0, got {}", state.v)));
    }
    let (sg, cg) = state.gamma.sin_cos();
    if cg.abs() <= SINGULARITY_EPS {
        return Err(Error::Singular(format!("cos(gamma) = {cg:.3e}")));
    }
    let gamma_des = fw_outer_longitudinal(state.h, state.v, reference.h, reference.h_dot, p.kappa)?;
    let nu = fw_outer_lateral(state, reference, p)?;
    let inner = fw_inner_loop(state, gamma_des, p)?;
    let mu = inner.mu;

    let gust = dryden_fw_filters(state.v, p)?.evaluate(state.eta_u, &state.eta_w, &state.eta_v, noise);
    let w = wind_rotation(&gust.wind, state.psi, state.gamma, mu);
    let wd = wind_rotation(&gust.wind_rate, state.psi, state.gamma, mu);

    let (sp, cp) = state.psi.sin_cos();
    let (sm, cm) = mu.sin_cos();
    let v = state.v;
    let m = p.mass;
    let qbar_s = 0.5 * p.air_density * p.reference_area * v * v;
    let cl = inner.lift_coefficient;
    let lift = cl * qbar_s;
    let drag = (p.zero_lift_drag + p.drag_polar * cl * cl) * qbar_s;

    let x_dot = v * cg * cp + w.x;
    let y_dot = v * cg * sp + w.y;
    let h_dot = v * sg + w.z;
    let v_dot = (state.thrust - drag) / m - p.gravity * sg - wd.x * cg * cp - wd.y * cg * sp
        + wd.z * sg;
    let psi_dot = -1.0 / (v * m * cg) * (lift * sm - m * wd.x * sp + m * wd.y * cp);
    let gamma_dot = 1.0 / (v * m)
        * (lift * cm - m * p.gravity * cg + m * wd.x * cp * sg + m * wd.y * sg * sp + m * wd.z * cg);
    let thrust_dot = p.kappa_t1 * (inner.thrust_des - state.thrust);

    Ok([
        x_dot,
        y_dot,
        h_dot,
        v_dot,
        psi_dot,
        gamma_dot,
        thrust_dot,
        nu.x,
        nu.y,
        gust.eta_u_dot,
        gust.eta_w_dot.x,
        gust.eta_w_dot.y,
        gust.eta_v_dot.x,
        gust.eta_v_dot.y,
    ])
}
