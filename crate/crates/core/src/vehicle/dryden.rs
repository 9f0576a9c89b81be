//! Dryden gust coloring filters for the fixed-wing model.
//!
//! Channel names follow the aircraft body axes: `u` longitudinal (first
//! order), `w` lateral and `v` vertical (second order companion form).

use std::f64::consts::PI;

use nalgebra::{Matrix2, RowVector2, Vector2, Vector3};

use super::fixed_wing::FixedWingParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrydenFilters {
    pub a_u: f64,
    pub b_u: f64,
    pub c_u: f64,
    pub a_w: Matrix2<f64>,
    pub b_w: Vector2<f64>,
    pub c_w: RowVector2<f64>,
    pub a_v: Matrix2<f64>,
    pub b_v: Vector2<f64>,
    pub c_v: RowVector2<f64>,
}

/// Filter outputs and state rates for one evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GustOutput {
    /// `(w_u, w_w, w_v)` in body axes.
    pub wind: Vector3<f64>,
    /// `(ẇ_u, ẇ_w, ẇ_v)` in body axes.
    pub wind_rate: Vector3<f64>,
    pub eta_u_dot: f64,
    pub eta_w_dot: Vector2<f64>,
    pub eta_v_dot: Vector2<f64>,
}

fn second_order(v: f64, l: f64, sigma: f64) -> (Matrix2<f64>, Vector2<f64>, RowVector2<f64>) {
    let a = Matrix2::new(-2.0 * v / l, -v * v / (l * l), 1.0, 0.0);
    let b = Vector2::new(1.0, 0.0);
    let gain = v * sigma * (l / v).sqrt() / (l * PI.sqrt());
    let c = RowVector2::new(3f64.sqrt(), v / l) * gain;
    (a, b, c)
}

pub fn dryden_fw_filters(v: f64, params: &FixedWingParams) -> Result<DrydenFilters> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::ModelDomain(format!(
            "Dryden filters need airspeed > 0, got {v}"
        )));
    }
    let (lu, lw, lv) = (params.length_u, params.length_w, params.length_v);
    if !(lu > 0.0 && lw > 0.0 && lv > 0.0) {
        return Err(Error::ModelDomain("Dryden length scales must be > 0".into()));
    }
    let (a_w, b_w, c_w) = second_order(v, lw, params.sigma_w);
    let (a_v, b_v, c_v) = second_order(v, lv, params.sigma_v);
    Ok(DrydenFilters {
        a_u: -v / lu,
        b_u: 1.0,
        c_u: 2f64.sqrt() * v * params.sigma_u * (lu / v).sqrt() / (lu * PI.sqrt()),
        a_w,
        b_w,
        c_w,
        a_v,
        b_v,
        c_v,
    })
}

impl DrydenFilters {
    /// `η̇ = Aη + Bn`, `w = Cη`, `ẇ = CAη + CBn` for all three channels.
    /// `noise` is ordered `(n_u, n_w, n_v)`.
    pub fn evaluate(
        &self,
        eta_u: f64,
        eta_w: &Vector2<f64>,
        eta_v: &Vector2<f64>,
        noise: &Vector3<f64>,
    ) -> GustOutput {
        let eta_u_dot = self.a_u * eta_u + self.b_u * noise.x;
        let eta_w_dot = self.a_w * eta_w + self.b_w * noise.y;
        let eta_v_dot = self.a_v * eta_v + self.b_v * noise.z;
        let wind = Vector3::new(
            self.c_u * eta_u,
            (self.c_w * eta_w)[0],
            (self.c_v * eta_v)[0],
        );
        let wind_rate = Vector3::new(
            self.c_u * eta_u_dot,
            (self.c_w * eta_w_dot)[0],
            (self.c_v * eta_v_dot)[0],
        );
        GustOutput {
            wind,
            wind_rate,
            eta_u_dot,
            eta_w_dot,
            eta_v_dot,
        }
    }
}
