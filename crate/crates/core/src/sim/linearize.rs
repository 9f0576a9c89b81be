use nalgebra::DMatrix;

use super::{TimeGrid, Trajectory};
use crate::vehicle::Dynamics;
use crate::Result;

/// `A(t) = ∂f/∂X` and `B_n(t) = ∂f/∂n` along a nominal trajectory.
#[derive(Clone, Debug)]
pub struct LinearizationHistory {
    pub grid: TimeGrid,
    pub a: Vec<DMatrix<f64>>,
    pub b_n: Vec<DMatrix<f64>>,
}

fn fd_step(x: f64) -> f64 {
    (1e-6 * x.abs()).max(1e-6)
}

/// Central-difference Jacobians at every grid point, noise held at zero.
pub fn linearize<D: Dynamics + ?Sized>(sys: &D, nominal: &Trajectory) -> Result<LinearizationHistory> {
    let n = sys.state_dim();
    let m = sys.noise_dim();
    let zero = vec![0.0; m];
    let mut a_hist = Vec::with_capacity(nominal.states.len());
    let mut b_hist = Vec::with_capacity(nominal.states.len());
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut xp = vec![0.0; n];
    let mut np = vec![0.0; m];
    for (k, xbar) in nominal.states.iter().enumerate() {
        let t = nominal.grid.time(k);
        let x = xbar.as_slice();
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = fd_step(x[j]);
            xp.copy_from_slice(x);
            xp[j] = x[j] + h;
            sys.rhs(t, &xp, &zero, &mut plus).map_err(|e| e.at_time(t))?;
            xp[j] = x[j] - h;
            sys.rhs(t, &xp, &zero, &mut minus).map_err(|e| e.at_time(t))?;
            for i in 0..n {
                a[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        let mut b = DMatrix::zeros(n, m);
        for j in 0..m {
            let h = fd_step(0.0);
            np.fill(0.0);
            np[j] = h;
            sys.rhs(t, x, &np, &mut plus).map_err(|e| e.at_time(t))?;
            np[j] = -h;
            sys.rhs(t, x, &np, &mut minus).map_err(|e| e.at_time(t))?;
            for i in 0..n {
                b[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        a_hist.push(a);
        b_hist.push(b);
    }
    Ok(LinearizationHistory {
        grid: nominal.grid,
        a: a_hist,
        b_n: b_hist,
    })
}
