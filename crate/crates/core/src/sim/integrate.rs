use nalgebra::{DVector, Vector3};

use super::TimeGrid;
use crate::vehicle::{Dynamics, ModelKind};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub kind: ModelKind,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn position(&self, k: usize, rows: [usize; 3]) -> Vector3<f64> {
        let x = &self.states[k];
        Vector3::new(x[rows[0]], x[rows[1]], x[rows[2]])
    }

    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory is never empty")
    }
}

pub(crate) fn check_initial<D: Dynamics + ?Sized>(sys: &D, x0: &[f64]) -> Result<()> {
    if x0.len() != sys.state_dim() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, model has {}",
            x0.len(),
            sys.state_dim()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial state is not finite".into()));
    }
    Ok(())
}

pub(crate) fn check_finite(x: &[f64], t: f64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::ModelDomain("state diverged to a non-finite value".into()).at_time(t))
    }
}

/// Classical RK4 with zero noise on `grid`.
pub fn integrate_nominal<D: Dynamics + ?Sized>(
    sys: &D,
    x0: &[f64],
    grid: &TimeGrid,
) -> Result<Trajectory> {
    check_initial(sys, x0)?;
    let n = sys.state_dim();
    let zero = vec![0.0; sys.noise_dim()];
    let dt = grid.dt;
    let mut states = Vec::with_capacity(grid.count);
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    states.push(DVector::from_column_slice(&x));
    for step in 0..grid.count - 1 {
        let t = grid.time(step);
        let eval = |tt: f64, xx: &[f64], out: &mut [f64]| {
            sys.rhs(tt, xx, &zero, out).map_err(|e| e.at_time(tt))
        };
        eval(t, &x, &mut k1)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        eval(t + 0.5 * dt, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        eval(t + 0.5 * dt, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        eval(t + dt, &tmp, &mut k4)?;
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_finite(&x, t + dt)?;
        states.push(DVector::from_column_slice(&x));
    }
    Ok(Trajectory {
        grid: *grid,
        kind: sys.kind(),
        states,
    })
}
