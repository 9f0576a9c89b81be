//! Outer loop: plan, propagate the tube along the incumbent path, resize
//! obstacle buffers to tangency, repair the tree, repeat.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::path::{path_to_trajectory, PolylineTrajectory};
use crate::vehicle::DesiredTrajectory;
use super::polygon::{planar_obstacles, PlanarObstacle};
use super::rrt::{add_node, informed_rrt_star, InnerLoopStats, PlannerConfig};
use super::tree::PlanTree;
use crate::geometry::collision::strided;
use crate::geometry::{buffer_touch_distance, check_tube_collision, ClearanceReport, CuboidObstacle, TouchDistance, Verdict};
use crate::sim::{integrate_nominal, linearize, TimeGrid, Trajectory};
use crate::uncertainty::{build_tube, chi2_quantile, propagate_covariance, CovarianceHistory, Tube};
use crate::vehicle::{ClosedLoopSystem, Vehicle};
use crate::{Error, Result};

/// Everything the dynamic planner needs besides the random stream.
#[derive(Clone, Debug)]
pub struct PlanProblem {
    pub vehicle: Vehicle,
    /// True obstacles; their buffers are overwritten by the planner.
    pub obstacles: Vec<CuboidObstacle>,
    pub initial_covariance: DMatrix<f64>,
    pub beta: f64,
    pub dt: f64,
    pub config: PlannerConfig,
    pub seed: u64,
}

impl PlanProblem {
    /// Desired trajectory, nominal, covariance and tube along a planar path.
    pub fn propagate_path(&self, path: &[Vector2<f64>]) -> Result<PathPropagation> {
        let trajectory = path_to_trajectory(path, self.config.altitude, self.config.cruise_speed)?;
        let tf = trajectory.duration().max(2.0 * self.dt);
        let grid = TimeGrid::new(0.0, tf, self.dt)?;
        let sys = ClosedLoopSystem::new(self.vehicle.clone(), Arc::new(trajectory.clone()), self.dt);
        let x0 = sys.matched_initial_state(0.0);
        let nominal = integrate_nominal(&sys, &x0, &grid)?;
        let lin = linearize(&sys, &nominal)?;
        let covariance = propagate_covariance(&lin, &self.initial_covariance)?;
        let tube = build_tube(&nominal, &covariance, self.beta, sys.position_rows())?;
        Ok(PathPropagation {
            trajectory,
            nominal,
            covariance,
            tube,
        })
    }

    /// Desired trajectory, nominal and tube along a planar path.
    pub fn path_tube(&self, path: &[Vector2<f64>]) -> Result<(PolylineTrajectory, Trajectory, Tube)> {
        let p = self.propagate_path(path)?;
        Ok((p.trajectory, p.nominal, p.tube))
    }
}

#[derive(Clone, Debug)]
pub struct PathPropagation {
    pub trajectory: PolylineTrajectory,
    pub nominal: Trajectory,
    pub covariance: CovarianceHistory,
    pub tube: Tube,
}

/// `c·√λ_max` of the initial position covariance block.
pub fn initial_buffer(p0: &DMatrix<f64>, rows: [usize; 3], c2: f64) -> f64 {
    let block = Matrix3::from_fn(|i, j| p0[(rows[i], rows[j])]);
    let lmax = block.symmetric_eigenvalues().max();
    if lmax > 0.0 {
        (c2 * lmax).sqrt()
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleDistance {
    pub id: String,
    pub touch: TouchDistance,
    /// Geometric clearance of the desired position at the critical instant
    /// (expansion units; negative inside the true obstacle).
    pub clearance: f64,
    /// How far the tube reaches past the desired path toward any face of the
    /// obstacle, maximised over the checked samples and floored at zero.
    pub thickness: f64,
    /// `current buffer - thickness`: the amount subtracted from the buffer.
    /// Never exceeds the current buffer.
    pub d: f64,
}

/// `max_{k,i} c·sqrt(a_iᵀ Σ_k a_i) - a_i·(r_k - p_des(t_k))` over strided
/// samples `k` and faces `i`.
///
/// A desired path on the boundary of the obstacle grown by this much keeps
/// the tube outside the true obstacle. At the binding instant of a single
/// face it equals `clearance - d'`.
pub fn tube_thickness(tube: &Tube, traj: &dyn DesiredTrajectory, obs: &CuboidObstacle, stride: usize) -> f64 {
    let c = tube.c2.sqrt();
    let mut worst: f64 = 0.0;
    for k in strided(tube.len(), stride.max(1)) {
        let e = &tube.ellipsoids[k];
        let offset = e.center - traj.sample(e.t).position;
        for a in obs.normals() {
            let spread = (a.dot(&(e.sigma * a))).max(0.0).sqrt();
            worst = worst.max(c * spread - a.dot(&offset));
        }
    }
    worst
}

/// Tube along the incumbent path and the per-obstacle buffer change.
pub fn comp_obs_dist(
    tree: &PlanTree,
    obstacles: &[CuboidObstacle],
    problem: &PlanProblem,
) -> Result<(Vec<ObstacleDistance>, Tube)> {
    let path = tree
        .best_path()
        .ok_or_else(|| Error::NoSolution("tree has no path to the goal".into()))?;
    let (traj, _, tube) = problem.path_tube(&path)?;
    let stride = problem.config.check_stride;
    let mut out = Vec::with_capacity(obstacles.len());
    for o in obstacles {
        let touch = buffer_touch_distance(&tube, o, tube.c2, stride)?;
        let clearance = o.expansion_to_contain(&traj.sample(touch.t).position);
        let thickness = tube_thickness(&tube, &traj, o, stride);
        out.push(ObstacleDistance {
            id: o.id.clone(),
            touch,
            clearance,
            thickness,
            d: o.buffer() - thickness,
        });
    }
    Ok((out, tube))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CleanupStats {
    pub removed: usize,
    pub orphaned: usize,
    pub regrow_iterations: usize,
    pub pruned: usize,
}

/// Removes nodes inside `grown`'s buffered cross-section, orphans edges
/// crossing it, regrows until the orphans reconnect or `max_iterations / 4`
/// samples are spent, then prunes what is still disconnected.
pub fn cleanup_and_regrow<R: Rng + ?Sized>(
    tree: &mut PlanTree,
    grown: &CuboidObstacle,
    planar: &[PlanarObstacle],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> CleanupStats {
    let mut stats = CleanupStats::default();
    let Some(poly) = planar_obstacles(std::slice::from_ref(grown), cfg.altitude).pop() else {
        return stats;
    };
    for i in 1..tree.nodes.len() {
        if tree.nodes[i].alive && poly.contains(&tree.nodes[i].coords) {
            tree.remove(i);
            stats.removed += 1;
        }
    }
    for i in 1..tree.nodes.len() {
        let n = &tree.nodes[i];
        if !n.alive {
            continue;
        }
        if let Some(p) = n.parent {
            if poly.intersects_segment(&tree.nodes[p].coords, &n.coords) {
                tree.orphan(i);
            }
        }
    }
    tree.rebuild_solutions(planar);
    stats.orphaned = tree.orphan_roots().len();
    let cap = (cfg.max_iterations / 4).max(1);
    while tree.has_orphans() && stats.regrow_iterations < cap {
        add_node(tree, planar, cfg, rng);
        stats.regrow_iterations += 1;
    }
    stats.pruned = tree.prune_orphans();
    tree.rebuild_solutions(planar);
    stats
}

#[derive(Clone, Debug, PartialEq)]
pub struct BufferUpdate {
    pub id: String,
    pub before: f64,
    pub touch_distance: f64,
    pub clearance: f64,
    pub thickness: f64,
    pub critical_t: f64,
    pub saturated: bool,
    pub d: f64,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OuterIteration {
    pub index: usize,
    pub inner: InnerLoopStats,
    pub buffers: Vec<f64>,
    pub updates: Vec<BufferUpdate>,
    pub cleanups: Vec<(String, CleanupStats)>,
}

#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub path: Vec<Vector2<f64>>,
    pub cost: f64,
    pub trajectory: PolylineTrajectory,
    pub nominal: Trajectory,
    pub covariance: CovarianceHistory,
    pub tube: Tube,
    pub reports: Vec<ClearanceReport>,
    pub verdict: Verdict,
    pub iterations: Vec<OuterIteration>,
    /// Obstacles with their final buffers.
    pub obstacles: Vec<CuboidObstacle>,
    pub tree: PlanTree,
}

fn check_endpoints(obstacles: &[CuboidObstacle], cfg: &PlannerConfig) -> Result<()> {
    for o in obstacles {
        let Some(poly) = planar_obstacles(std::slice::from_ref(o), cfg.altitude).pop() else {
            continue;
        };
        for (which, p) in [("start", cfg.start()), ("goal", cfg.goal())] {
            if poly.contains(&p) {
                return Err(Error::Blocked {
                    which,
                    obstacle: o.id.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Chance-constrained planning loop over `config.outer_iterations`
/// buffer updates.
pub fn dynamic_informed_rrt_star(problem: &PlanProblem) -> Result<PlanOutcome> {
    let cfg = &problem.config;
    cfg.validate()?;
    let c2 = chi2_quantile(problem.beta, 3)?;
    let rows = problem.vehicle.position_rows();
    let b0 = initial_buffer(&problem.initial_covariance, rows, c2);
    let mut obstacles: Vec<CuboidObstacle> =
        problem.obstacles.iter().map(|o| o.clone().with_buffer(b0)).collect();
    check_endpoints(&obstacles, cfg)?;

    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut tree = PlanTree::new(cfg.start(), cfg.goal(), cfg.goal_radius);
    let mut iterations = Vec::with_capacity(cfg.outer_iterations);

    for m in 0..cfg.outer_iterations {
        let planar = planar_obstacles(&obstacles, cfg.altitude);
        let inner = informed_rrt_star(&mut tree, &planar, cfg, &mut rng);
        if !tree.c_best().is_finite() {
            return Err(Error::NoSolution(format!(
                "no path after {} iterations of outer loop {m}",
                inner.iterations
            )));
        }
        let mut record = OuterIteration {
            index: m,
            inner,
            buffers: obstacles.iter().map(CuboidObstacle::buffer).collect(),
            updates: Vec::new(),
            cleanups: Vec::new(),
        };
        if m + 1 < cfg.outer_iterations {
            let (dists, _) = comp_obs_dist(&tree, &obstacles, problem)?;
            for (j, dist) in dists.iter().enumerate() {
                let before = obstacles[j].buffer();
                let after = before - dist.d;
                obstacles[j].set_buffer(after);
                record.updates.push(BufferUpdate {
                    id: dist.id.clone(),
                    before,
                    touch_distance: dist.touch.d,
                    clearance: dist.clearance,
                    thickness: dist.thickness,
                    critical_t: dist.touch.t,
                    saturated: dist.touch.saturated,
                    d: dist.d,
                    after,
                });
                if dist.d < 0.0 {
                    check_endpoints(std::slice::from_ref(&obstacles[j]), cfg)?;
                    let planar = planar_obstacles(&obstacles, cfg.altitude);
                    let stats = cleanup_and_regrow(&mut tree, &obstacles[j], &planar, cfg, &mut rng);
                    record.cleanups.push((dist.id.clone(), stats));
                }
            }
            // shrinking buffers can only free closing segments
            tree.rebuild_solutions(&planar_obstacles(&obstacles, cfg.altitude));
        }
        iterations.push(record);
    }

    let path = tree
        .best_path()
        .ok_or_else(|| Error::NoSolution("repair left no path to the goal".into()))?;
    let PathPropagation {
        trajectory,
        nominal,
        covariance,
        tube,
    } = problem.propagate_path(&path)?;
    let reports = check_tube_collision(&tube, &problem.obstacles, 1)?;
    let verdict = if reports.iter().any(|r| r.verdict == Verdict::Collide) {
        Verdict::Collide
    } else {
        Verdict::Clear
    };
    Ok(PlanOutcome {
        path,
        cost: tree.c_best(),
        trajectory,
        nominal,
        covariance,
        tube,
        reports,
        verdict,
        iterations,
        obstacles,
        tree,
    })
}
