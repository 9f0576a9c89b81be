use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform time grid; `count = round((tf - t0) / dt) + 1` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, dt: f64) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite() && dt.is_finite()) {
            return Err(Error::InvalidInput("time grid must be finite".into()));
        }
        if !(tf > t0) {
            return Err(Error::InvalidInput(format!("need tf > t0, got [{t0}, {tf}]")));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!("need dt > 0, got {dt}")));
        }
        let count = ((tf - t0) / dt).round() as usize + 1;
        if count < 2 {
            return Err(Error::InvalidInput("time grid needs at least two points".into()));
        }
        Ok(Self { t0, tf, dt, count })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.time(k))
    }

    /// Index of the grid point closest to `t` (clamped to the grid).
    pub fn index_of(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.dt).round();
        (k.max(0.0) as usize).min(self.count - 1)
    }
}
