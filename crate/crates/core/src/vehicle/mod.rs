//! Vehicle models behind one `dX = f(X, X_des(t), n, theta)` interface.

pub mod desired;
pub mod dryden;
pub mod fixed_wing;
pub mod quadrotor;
pub mod wind;

use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use desired::{AscentCruiseDescent, DesiredSample, DesiredTrajectory, FixedWingReference, LateralSinusoid, StraightLine};
pub use fixed_wing::{FixedWingParams, FixedWingState};
pub use quadrotor::{QuadrotorParams, QuadrotorState};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Quadrotor,
    FixedWing,
    /// Anything else driven through [`Dynamics`], e.g. test systems.
    Generic,
}

/// A stochastic ODE `ẋ = f(t, x, n)` with white-noise input `n`.
pub trait Dynamics: Sync {
    fn kind(&self) -> ModelKind {
        ModelKind::Generic
    }
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn rhs(&self, t: f64, x: &[f64], noise: &[f64], dx: &mut [f64]) -> Result<()>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum Vehicle {
    Quadrotor(QuadrotorParams),
    FixedWing(FixedWingParams),
}

impl Vehicle {
    pub fn kind(&self) -> ModelKind {
        match self {
            Vehicle::Quadrotor(_) => ModelKind::Quadrotor,
            Vehicle::FixedWing(_) => ModelKind::FixedWing,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Vehicle::Quadrotor(_) => quadrotor::STATE_DIM,
            Vehicle::FixedWing(_) => fixed_wing::STATE_DIM,
        }
    }

    /// Rows of the state holding the inertial position (x, y, altitude).
    pub fn position_rows(&self) -> [usize; 3] {
        match self {
            Vehicle::Quadrotor(_) => quadrotor::POSITION_ROWS,
            Vehicle::FixedWing(_) => fixed_wing::POSITION_ROWS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Vehicle::Quadrotor(p) => p.validate(),
            Vehicle::FixedWing(p) => p.validate(),
        }
    }

    pub fn state_names(&self) -> &'static [&'static str] {
        match self {
            Vehicle::Quadrotor(_) => &[
                "x1", "x2", "x3", "v1", "v2", "v3", "eta1", "eta2", "eta3",
            ],
            Vehicle::FixedWing(_) => &[
                "x", "y", "h", "V", "psi", "gamma", "T", "V_des", "psi_des", "eta_u", "eta_w1",
                "eta_w2", "eta_v1", "eta_v2",
            ],
        }
    }
}

/// A vehicle flying a desired trajectory under its closed-loop controller.
#[derive(Clone, Debug)]
pub struct ClosedLoopSystem {
    pub vehicle: Vehicle,
    pub desired: Arc<dyn DesiredTrajectory>,
    /// Step of the central difference used for the fixed-wing planar
    /// reference acceleration; the integration step by convention.
    pub fd_step: f64,
}

impl ClosedLoopSystem {
    pub fn new(vehicle: Vehicle, desired: Arc<dyn DesiredTrajectory>, fd_step: f64) -> Self {
        Self {
            vehicle,
            desired,
            fd_step,
        }
    }

    /// Vehicle state sitting on the reference at `t` with quiet filters.
    pub fn matched_initial_state(&self, t: f64) -> Vec<f64> {
        match &self.vehicle {
            Vehicle::Quadrotor(_) => {
                QuadrotorState::matched(&self.desired.sample(t)).to_array().to_vec()
            }
            Vehicle::FixedWing(p) => {
                let r = FixedWingReference::from_trajectory(self.desired.as_ref(), t, self.fd_step);
                FixedWingState::matched(&r, p).to_array().to_vec()
            }
        }
    }

    pub fn position_rows(&self) -> [usize; 3] {
        self.vehicle.position_rows()
    }
}

impl Dynamics for ClosedLoopSystem {
    fn kind(&self) -> ModelKind {
        self.vehicle.kind()
    }

    fn state_dim(&self) -> usize {
        self.vehicle.state_dim()
    }

    fn noise_dim(&self) -> usize {
        3
    }

    fn rhs(&self, t: f64, x: &[f64], noise: &[f64], dx: &mut [f64]) -> Result<()> {
        if x.len() != self.state_dim() || dx.len() != self.state_dim() || noise.len() != 3 {
            return Err(Error::Dimension(format!(
                "state {} / out {} / noise {} for a {}-state model",
                x.len(),
                dx.len(),
                noise.len(),
                self.state_dim()
            )));
        }
        let n = Vector3::new(noise[0], noise[1], noise[2]);
        match &self.vehicle {
            Vehicle::Quadrotor(p) => {
                let st = QuadrotorState::from_slice(x);
                let d = quadrotor::quad_deriv(&st, &self.desired.sample(t), &n, p)?;
                dx.copy_from_slice(&d);
            }
            Vehicle::FixedWing(p) => {
                let st = FixedWingState::from_slice(x);
                let r = FixedWingReference::from_trajectory(self.desired.as_ref(), t, self.fd_step);
                let d = fixed_wing::fw_deriv(&st, &r, &n, p)?;
                dx.copy_from_slice(&d);
            }
        }
        Ok(())
    }
}
