//! `min (z − r̄)ᵀ Σ⁻¹ (z − r̄)  s.t.  A z ≤ b` by a primal active-set method.
//!
//! With `Σ = L Lᵀ` and `z = r̄ + L y` the problem becomes the projection of
//! the origin onto `{y : (A L) y ≤ b − A r̄}`, so every equality subproblem
//! has a closed form in at most three constraints.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::obstacle::chebyshev;
use crate::{Error, Result};

const MAX_ITER: usize = 100;
const ZERO_STEP: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub z: Vector3<f64>,
    pub cstar2: f64,
    /// Working set at the optimum (constraint indices).
    pub active: Vec<usize>,
    /// Multipliers of `active` for the whitened objective `½‖y‖²`.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
}

/// Solves from an interior start found internally.
pub fn solve_qp(sigma: &Matrix3<f64>, center: &Vector3<f64>, a: &[Vector3<f64>], b: &[f64]) -> Result<QpSolution> {
    let start = feasible_point(a, b)?;
    solve_qp_from(sigma, center, a, b, &start)
}

fn feasible_point(a: &[Vector3<f64>], b: &[f64]) -> Result<Vector3<f64>> {
    let (rows, offs): (Vec<_>, Vec<_>) = a
        .iter()
        .zip(b)
        .map(|(ai, bi)| {
            let n = ai.norm();
            (ai / n, bi / n)
        })
        .unzip();
    match chebyshev(&rows, &offs) {
        Some((x, r)) if r >= 0.0 => Ok(x),
        _ => Err(Error::InfeasibleRegion("constraint set is empty".into())),
    }
}

fn is_feasible(a: &[Vector3<f64>], b: &[f64], z: &Vector3<f64>) -> bool {
    let scale = 1.0 + z.amax();
    a.iter().zip(b).all(|(ai, bi)| ai.dot(z) <= bi + 1e-9 * scale * ai.norm())
}

/// Solves from the feasible point `start`, typically the previous optimum
/// for the same polytope (warm start). Falls back to an interior start if
/// `start` is infeasible.
pub fn solve_qp_from(
    sigma: &Matrix3<f64>,
    center: &Vector3<f64>,
    a: &[Vector3<f64>],
    b: &[f64],
    start: &Vector3<f64>,
) -> Result<QpSolution> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Dimension(format!("{} face rows, {} offsets", a.len(), b.len())));
    }
    let start = if is_feasible(a, b, start) {
        *start
    } else {
        feasible_point(a, b)?
    };
    let trace = sigma.trace();
    if !(trace > 0.0) {
        // Point ellipsoid: either inside (0) or never touching.
        let proj = whitened(&Matrix3::identity(), center, a, b, &start)?;
        let inside = is_feasible(a, b, center);
        return Ok(QpSolution {
            z: if inside { *center } else { proj.z },
            cstar2: if inside { 0.0 } else { f64::INFINITY },
            active: if inside { Vec::new() } else { proj.active },
            multipliers: if inside { Vec::new() } else { proj.multipliers },
            iterations: proj.iterations,
        });
    }
    let eps = 1e-12 * trace;
    let sym = (sigma + sigma.transpose()) * 0.5;
    let reg = if sym.symmetric_eigenvalues().min() < eps {
        sym + Matrix3::identity() * eps
    } else {
        sym
    };
    whitened(&reg, center, a, b, &start)
}

fn whitened(
    sigma: &Matrix3<f64>,
    center: &Vector3<f64>,
    a: &[Vector3<f64>],
    b: &[f64],
    start: &Vector3<f64>,
) -> Result<QpSolution> {
    let l = sigma
        .cholesky()
        .ok_or_else(|| Error::Singular("ellipsoid shape matrix is not positive definite".into()))?
        .l();
    let m = a.len();
    let g: Vec<Vector3<f64>> = a.iter().map(|ai| l.transpose() * ai).collect();
    let h: Vec<f64> = a.iter().zip(b).map(|(ai, bi)| bi - ai.dot(center)).collect();
    let l_inv = l.try_inverse().ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
    let mut y = l_inv * (start - center);

    // Seed the working set with independent constraints active at the start.
    let mut work: Vec<usize> = Vec::new();
    for i in 0..m {
        let tol = 1e-10 * (1.0 + h[i].abs() + g[i].norm() * y.norm());
        if (g[i].dot(&y) - h[i]).abs() <= tol && independent(&g, &work, i) {
            work.push(i);
        }
    }

    for iter in 0..MAX_ITER {
        let (x, lambda) = equality_solution(&g, &h, &work)?;
        let p = x - y;
        if p.norm() <= ZERO_STEP * (1.0 + y.norm()) {
            y = x;
            let (worst, min_lambda) = lambda
                .iter()
                .enumerate()
                .fold((usize::MAX, 0.0), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
            if min_lambda >= -1e-12 * (1.0 + lambda.iter().fold(0.0f64, |s, v| s.max(v.abs()))) {
                return Ok(QpSolution {
                    z: center + l * y,
                    cstar2: y.norm_squared(),
                    active: work,
                    multipliers: lambda,
                    iterations: iter + 1,
                });
            }
            work.remove(worst);
        } else {
            let mut alpha = 1.0;
            let mut blocking = None;
            for i in 0..m {
                // A row in the span of the working set is orthogonal to p in
                // exact arithmetic; its rounded g·p must not block. This is
                // the flat case of a polytope shrunk onto opposite faces.
                if work.contains(&i) || !independent(&g, &work, i) {
                    continue;
                }
                let gp = g[i].dot(&p);
                if gp > 1e-14 * g[i].norm() * p.norm() {
                    let ratio = ((h[i] - g[i].dot(&y)) / gp).max(0.0);
                    if ratio < alpha {
                        alpha = ratio;
                        blocking = Some(i);
                    }
                }
            }
            y += p * alpha;
            if let Some(i) = blocking {
                work.push(i);
            }
        }
    }
    Err(Error::MaxIterations(MAX_ITER))
}

fn independent(g: &[Vector3<f64>], work: &[usize], i: usize) -> bool {
    match work.len() {
        0 => g[i].norm() > 0.0,
        1 => g[work[0]].cross(&g[i]).norm() > 1e-9 * g[work[0]].norm() * g[i].norm(),
        2 => {
            let n = g[work[0]].cross(&g[work[1]]);
            n.dot(&g[i]).abs() > 1e-9 * n.norm() * g[i].norm()
        }
        _ => false,
    }
}

/// Minimum-norm point of `{x : g_i·x = h_i, i ∈ work}` and its multipliers
/// (`x + Σ λ_i g_i = 0`).
fn equality_solution(g: &[Vector3<f64>], h: &[f64], work: &[usize]) -> Result<(Vector3<f64>, Vec<f64>)> {
    let k = work.len();
    if k == 0 {
        return Ok((Vector3::zeros(), Vec::new()));
    }
    let gram = DMatrix::from_fn(k, k, |r, c| g[work[r]].dot(&g[work[c]]));
    let rhs = DVector::from_fn(k, |r, _| -h[work[r]]);
    let lambda = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("dependent working set".into()))?
        .solve(&rhs);
    let mut x = Vector3::zeros();
    for (r, &i) in work.iter().enumerate() {
        x -= g[i] * lambda[r];
    }
    Ok((x, lambda.iter().copied().collect()))
}
