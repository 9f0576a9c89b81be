use nalgebra::Vector2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::polygon::{no_collision_2d, PlanarObstacle};
use super::sampling::sample_ellipse;
use super::tree::PlanTree;
use crate::{Error, Result};

/// Axis-aligned sampling rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        (self.min[0]..=self.max[0]).contains(&p.x) && (self.min[1]..=self.max[1]).contains(&p.y)
    }

    pub fn diagonal(&self) -> f64 {
        Vector2::new(self.max[0] - self.min[0], self.max[1] - self.min[1]).norm()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector2<f64> {
        let x = self.min[0] + (self.max[0] - self.min[0]) * rng.random::<f64>();
        let y = self.min[1] + (self.max[1] - self.min[1]) * rng.random::<f64>();
        Vector2::new(x, y)
    }
}

fn d_outer() -> usize {
    4
}
fn d_max_iter() -> usize {
    3000
}
fn d_window() -> usize {
    200
}
fn d_tol() -> f64 {
    0.01
}
fn d_goal_radius() -> f64 {
    1.0
}
fn d_goal_bias() -> f64 {
    0.05
}
fn d_stride() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub bounds: Bounds,
    /// Planning altitude, m.
    pub altitude: f64,
    /// m/s
    pub cruise_speed: f64,
    /// Outer (buffer-resizing) iterations `M`.
    #[serde(default = "d_outer")]
    pub outer_iterations: usize,
    /// Inner iteration cap `N_max`.
    #[serde(default = "d_max_iter")]
    pub max_iterations: usize,
    /// Window `N_conv` of the relative-improvement test.
    #[serde(default = "d_window")]
    pub convergence_window: usize,
    #[serde(default = "d_tol")]
    pub tol: f64,
    /// Steer step; defaults to the bounds diagonal / 50.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Rewiring radius `r_w`; defaults to three steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewire_radius: Option<f64>,
    #[serde(default = "d_goal_radius")]
    pub goal_radius: f64,
    #[serde(default = "d_goal_bias")]
    pub goal_bias: f64,
    /// Tube sample stride for buffer solves inside the outer loop.
    #[serde(default = "d_stride")]
    pub check_stride: usize,
}

impl PlannerConfig {
    pub fn new(start: [f64; 2], goal: [f64; 2], bounds: Bounds, altitude: f64, cruise_speed: f64) -> Self {
        Self {
            start,
            goal,
            bounds,
            altitude,
            cruise_speed,
            outer_iterations: d_outer(),
            max_iterations: d_max_iter(),
            convergence_window: d_window(),
            tol: d_tol(),
            step: None,
            rewire_radius: None,
            goal_radius: d_goal_radius(),
            goal_bias: d_goal_bias(),
            check_stride: d_stride(),
        }
    }

    pub fn step(&self) -> f64 {
        self.step.unwrap_or(self.bounds.diagonal() / 50.0)
    }

    pub fn rewire_radius(&self) -> f64 {
        self.rewire_radius.unwrap_or(3.0 * self.step())
    }

    pub fn start(&self) -> Vector2<f64> {
        Vector2::from(self.start)
    }

    pub fn goal(&self) -> Vector2<f64> {
        Vector2::from(self.goal)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("planner: {m}")));
        if !(self.bounds.max[0] > self.bounds.min[0] && self.bounds.max[1] > self.bounds.min[1]) {
            return bad("bounds must have positive extent");
        }
        if !self.bounds.contains(&self.start()) || !self.bounds.contains(&self.goal()) {
            return bad("start and goal must lie inside the bounds");
        }
        if self.outer_iterations == 0 || self.max_iterations == 0 || self.convergence_window == 0 {
            return bad("iteration counts must be positive");
        }
        if self.check_stride == 0 {
            return bad("check_stride must be >= 1");
        }
        for (name, v) in [
            ("tol", self.tol),
            ("cruise_speed", self.cruise_speed),
            ("goal_radius", self.goal_radius),
            ("step", self.step()),
            ("rewire_radius", self.rewire_radius()),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(0.0..=0.2).contains(&self.goal_bias) {
            return bad("goal_bias must be in [0, 0.2]");
        }
        if !self.altitude.is_finite() {
            return bad("altitude must be finite");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AddResult {
    Rejected,
    Added(usize),
}

/// One sample–steer–connect–rewire step. Orphaned nodes within the
/// rewiring radius are reconnected through the new node whenever the edge
/// is free, since any finite cost beats theirs.
pub fn add_node<R: Rng + ?Sized>(
    tree: &mut PlanTree,
    obstacles: &[PlanarObstacle],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> AddResult {
    let c_best = tree.c_best();
    let x_rand = if c_best.is_infinite() && rng.random::<f64>() < cfg.goal_bias {
        tree.goal
    } else {
        sample_ellipse(&tree.start, &tree.goal, c_best, &cfg.bounds, rng)
    };

    let mut nearest = None;
    let mut best_d = f64::INFINITY;
    for (i, n) in tree.nodes.iter().enumerate() {
        if n.alive && n.cost.is_finite() {
            let d = (n.coords - x_rand).norm_squared();
            if d < best_d {
                best_d = d;
                nearest = Some(i);
            }
        }
    }
    let Some(near_idx) = nearest else {
        return AddResult::Rejected;
    };
    let x_near = tree.nodes[near_idx].coords;
    let dist = best_d.sqrt();
    if dist == 0.0 {
        return AddResult::Rejected;
    }
    let x_new = x_near + (x_rand - x_near) * (cfg.step().min(dist) / dist);
    if !no_collision_2d(&x_near, &x_new, obstacles) {
        return AddResult::Rejected;
    }

    let r_w = cfg.rewire_radius();
    let near: Vec<usize> = tree
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.alive && (n.coords - x_new).norm() <= r_w)
        .map(|(i, _)| i)
        .collect();

    let mut parent = near_idx;
    let mut parent_cost = tree.nodes[near_idx].cost + (x_new - x_near).norm();
    for &i in &near {
        let n = &tree.nodes[i];
        if i == near_idx || !n.cost.is_finite() {
            continue;
        }
        let c = n.cost + (n.coords - x_new).norm();
        if c < parent_cost && no_collision_2d(&n.coords, &x_new, obstacles) {
            parent = i;
            parent_cost = c;
        }
    }
    let idx = tree.insert(x_new, parent);

    for &i in &near {
        if i == parent || i == super::tree::ROOT {
            continue;
        }
        let n = &tree.nodes[i];
        let via = parent_cost + (n.coords - x_new).norm();
        if via < n.cost && no_collision_2d(&x_new, &n.coords, obstacles) {
            tree.reparent(i, idx);
        }
    }
    tree.consider_solution(idx, obstacles);
    AddResult::Added(idx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerLoopStats {
    pub iterations: usize,
    pub converged: bool,
    pub c_best: f64,
    /// `c_best` after every iteration.
    pub history: Vec<f64>,
}

/// Grows `tree` until the relative improvement of `c_best` over the last
/// `convergence_window` iterations drops to `tol`, or `max_iterations`.
pub fn informed_rrt_star<R: Rng + ?Sized>(
    tree: &mut PlanTree,
    obstacles: &[PlanarObstacle],
    cfg: &PlannerConfig,
    rng: &mut R,
) -> InnerLoopStats {
    let window = cfg.convergence_window;
    let mut history = Vec::with_capacity(cfg.max_iterations);
    let mut converged = false;
    for k in 0..cfg.max_iterations {
        add_node(tree, obstacles, cfg, rng);
        history.push(tree.c_best());
        if k >= window {
            let old = history[k - window];
            let new = history[k];
            if old.is_finite() && ((new - old) / old).abs() <= cfg.tol {
                converged = true;
                break;
            }
        }
    }
    InnerLoopStats {
        iterations: history.len(),
        converged,
        c_best: tree.c_best(),
        history,
    }
}
