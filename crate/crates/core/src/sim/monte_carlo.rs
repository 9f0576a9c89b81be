//! Seeded Euler–Maruyama runs and their ensemble statistics.
//!
//! Each run `i` of an ensemble uses a `ChaCha8Rng` seeded with
//! `seed_from_u64(base_seed + i)`; per step the noise components are drawn
//! in order from `StandardNormal` (Ziggurat) and divided by `sqrt(dt)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::integrate::{check_finite, check_initial};
use super::{TimeGrid, Trajectory};
use crate::uncertainty::CovarianceHistory;
use crate::vehicle::Dynamics;
use crate::{Error, Result};

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9, SeedableRng::seed_from_u64)";
pub const NOISE_ALGORITHM: &str = "Ziggurat standard normal (rand_distr 0.5 StandardNormal)";

/// Runs per work unit; units are reduced in index order.
const CHUNK: usize = 32;
/// Work units evaluated concurrently before folding into the total.
const BATCH: usize = 8;

/// Walks one Euler–Maruyama path, handing each grid state to `visit`.
/// Without a seed the noise is held at zero.
fn walk<D, F>(sys: &D, x0: &[f64], grid: &TimeGrid, seed: Option<u64>, mut visit: F) -> Result<()>
where
    D: Dynamics + ?Sized,
    F: FnMut(usize, &[f64]),
{
    check_initial(sys, x0)?;
    let n = sys.state_dim();
    let m = sys.noise_dim();
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let scale = 1.0 / grid.dt.sqrt();
    let mut x = x0.to_vec();
    let mut dx = vec![0.0; n];
    let mut noise = vec![0.0; m];
    visit(0, &x);
    for k in 0..grid.count - 1 {
        let t = grid.time(k);
        if let Some(rng) = rng.as_mut() {
            for v in noise.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *v = z * scale;
            }
        }
        sys.rhs(t, &x, &noise, &mut dx).map_err(|e| e.at_time(t))?;
        for i in 0..n {
            x[i] += grid.dt * dx[i];
        }
        check_finite(&x, t + grid.dt)?;
        visit(k + 1, &x);
    }
    Ok(())
}

/// One noisy run.
pub fn mc_run<D: Dynamics + ?Sized>(sys: &D, x0: &[f64], grid: &TimeGrid, seed: u64) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(grid.count);
    walk(sys, x0, grid, Some(seed), |_, x| states.push(DVector::from_column_slice(x)))?;
    Ok(Trajectory {
        grid: *grid,
        kind: sys.kind(),
        states,
    })
}

/// Sample mean trajectory and unbiased sample covariance per grid point.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub runs: usize,
    pub mean: Trajectory,
    pub covariance: CovarianceHistory,
}

/// Shifted first and second moments, flat per grid point. Only the upper
/// triangle of the second moment is accumulated.
struct Moments {
    n: usize,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Moments {
    fn zeros(n: usize, count: usize) -> Self {
        Self {
            n,
            s1: vec![0.0; n * count],
            s2: vec![0.0; n * n * count],
        }
    }

    fn add(&mut self, k: usize, d: &[f64]) {
        let n = self.n;
        let s1 = &mut self.s1[k * n..(k + 1) * n];
        for (s, v) in s1.iter_mut().zip(d) {
            *s += v;
        }
        let s2 = &mut self.s2[k * n * n..(k + 1) * n * n];
        for i in 0..n {
            let di = d[i];
            let row = &mut s2[i * n..(i + 1) * n];
            for j in i..n {
                row[j] += di * d[j];
            }
        }
    }

    fn merge(mut self, other: &Moments) -> Self {
        for (a, b) in self.s1.iter_mut().zip(&other.s1) {
            *a += b;
        }
        for (a, b) in self.s2.iter_mut().zip(&other.s2) {
            *a += b;
        }
        self
    }
}

/// Pairwise reduction in index order.
fn pairwise(mut parts: Vec<Moments>) -> Option<Moments> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(&b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// `runs` independent Euler–Maruyama runs seeded `base_seed + i`.
///
/// Runs are evaluated in parallel; the reduction order depends only on run
/// indices, so results are bit-identical for any thread count.
pub fn mc_ensemble<D: Dynamics + ?Sized>(
    sys: &D,
    x0: &[f64],
    grid: &TimeGrid,
    runs: usize,
    base_seed: u64,
) -> Result<Ensemble> {
    if runs < 2 {
        return Err(Error::InvalidInput(format!("ensemble needs >= 2 runs, got {runs}")));
    }
    let n = sys.state_dim();
    let count = grid.count;
    // Deviations are accumulated about the noise-free Euler path. This keeps
    // the second-moment subtraction well conditioned and makes the sample
    // covariance exactly zero when no noise reaches the state.
    let mut shift = Vec::with_capacity(count);
    walk(sys, x0, grid, None, |_, x| shift.push(DVector::from_column_slice(x)))?;
    let shift_ref = &shift;

    let chunk_moments = |chunk: usize| -> Result<Moments> {
        let mut acc = Moments::zeros(n, count);
        let mut d = vec![0.0; n];
        let first = chunk * CHUNK;
        for run in first..(first + CHUNK).min(runs) {
            walk(sys, x0, grid, Some(base_seed.wrapping_add(run as u64)), |k, x| {
                for (i, v) in d.iter_mut().enumerate() {
                    *v = x[i] - shift_ref[k][i];
                }
                acc.add(k, &d);
            })?;
        }
        Ok(acc)
    };

    let chunks = runs.div_ceil(CHUNK);
    let mut total: Option<Moments> = None;
    let mut start = 0;
    while start < chunks {
        let end = (start + BATCH).min(chunks);
        let parts = (start..end)
            .into_par_iter()
            .map(chunk_moments)
            .collect::<Result<Vec<_>>>()?;
        let batch = pairwise(parts).expect("non-empty batch");
        total = Some(match total {
            None => batch,
            Some(t) => t.merge(&batch),
        });
        start = end;
    }
    let total = total.expect("at least one chunk");

    let nf = runs as f64;
    let mut means = Vec::with_capacity(count);
    let mut covs = Vec::with_capacity(count);
    for k in 0..count {
        let s1 = &total.s1[k * n..(k + 1) * n];
        let s2 = &total.s2[k * n * n..(k + 1) * n * n];
        let mean_dev = DVector::from_iterator(n, s1.iter().map(|v| v / nf));
        means.push(&shift[k] + &mean_dev);
        let mut p = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = (s2[i * n + j] - s1[i] * s1[j] / nf) / (nf - 1.0);
                p[(i, j)] = v;
                p[(j, i)] = v;
            }
        }
        covs.push(p);
    }
    Ok(Ensemble {
        runs,
        mean: Trajectory {
            grid: *grid,
            kind: sys.kind(),
            states: means,
        },
        covariance: CovarianceHistory {
            grid: *grid,
            p: covs,
        },
    })
}
