use nalgebra::DMatrix;

use crate::sim::{LinearizationHistory, TimeGrid};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceHistory {
    pub grid: TimeGrid,
    pub p: Vec<DMatrix<f64>>,
}

impl CovarianceHistory {
    /// Diagonal entry `i` over time.
    pub fn variance(&self, i: usize) -> Vec<f64> {
        self.p.iter().map(|p| p[(i, i)]).collect()
    }
}

fn lyapunov_rhs(a: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let ap = a * p;
    &ap + ap.transpose() + q
}

fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
}

/// Integrates `Ṗ = AP + PAᵀ + B_n B_nᵀ` with RK4 on the linearisation grid.
/// `A` and `B_n` are interpolated linearly at half steps and `P` is
/// symmetrised after every step.
pub fn propagate_covariance(lin: &LinearizationHistory, p0: &DMatrix<f64>) -> Result<CovarianceHistory> {
    let count = lin.grid.count;
    if lin.a.len() != count || lin.b_n.len() != count {
        return Err(Error::Dimension(format!(
            "linearisation has {} / {} matrices for {count} grid points",
            lin.a.len(),
            lin.b_n.len()
        )));
    }
    let n = lin.a[0].nrows();
    if p0.nrows() != n || p0.ncols() != n {
        return Err(Error::Dimension(format!(
            "initial covariance is {}x{}, state dimension is {n}",
            p0.nrows(),
            p0.ncols()
        )));
    }
    if lin.a.iter().any(|a| a.shape() != (n, n)) || lin.b_n.iter().any(|b| b.nrows() != n) {
        return Err(Error::Dimension("inconsistent linearisation shapes".into()));
    }
    let scale = p0.norm().max(f64::MIN_POSITIVE);
    if (p0 - p0.transpose()).norm() > 1e-10 * scale {
        return Err(Error::InvalidInput("initial covariance is not symmetric".into()));
    }
    if p0.norm() > 0.0 && p0.clone().symmetric_eigenvalues().min() < -1e-10 * scale {
        return Err(Error::InvalidInput("initial covariance is not positive semidefinite".into()));
    }

    let dt = lin.grid.dt;
    let mut p = p0.clone();
    symmetrize(&mut p);
    let mut out = Vec::with_capacity(count);
    out.push(p.clone());
    for k in 0..count - 1 {
        let (a0, a1) = (&lin.a[k], &lin.a[k + 1]);
        let (b0, b1) = (&lin.b_n[k], &lin.b_n[k + 1]);
        let a_half = (a0 + a1) * 0.5;
        let b_half = (b0 + b1) * 0.5;
        let q0 = b0 * b0.transpose();
        let q_half = &b_half * b_half.transpose();
        let q1 = b1 * b1.transpose();

        let k1 = lyapunov_rhs(a0, &p, &q0);
        let k2 = lyapunov_rhs(&a_half, &(&p + &k1 * (0.5 * dt)), &q_half);
        let k3 = lyapunov_rhs(&a_half, &(&p + &k2 * (0.5 * dt)), &q_half);
        let k4 = lyapunov_rhs(a1, &(&p + &k3 * dt), &q1);
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        symmetrize(&mut p);
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelDomain("covariance diverged".into()).at_time(lin.grid.time(k + 1)));
        }
        out.push(p.clone());
    }
    Ok(CovarianceHistory {
        grid: lin.grid,
        p: out,
    })
}
