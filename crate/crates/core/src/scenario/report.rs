//! Serializable run summaries. Infinite values serialize as `null`.

use serde::Serialize;

use super::Scenario;
use crate::geometry::{ClearanceReport, CuboidObstacle, Verdict};
use crate::planner::{OuterIteration, PlanOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Validate,
    Plan,
    McCompare,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClearanceRecord {
    pub obstacle: String,
    /// `null` when every sample was rejected by the sphere prefilter.
    pub min_cstar2: f64,
    pub argmin_t: Option<f64>,
    pub z_star: Option<[f64; 3]>,
    pub c2: f64,
    pub verdict: Verdict,
    pub samples_checked: usize,
    pub qp_solves: usize,
}

impl From<&ClearanceReport> for ClearanceRecord {
    fn from(r: &ClearanceReport) -> Self {
        Self {
            obstacle: r.obstacle.clone(),
            min_cstar2: r.min_cstar2,
            argmin_t: r.argmin_t,
            z_star: r.z_star.map(|z| [z.x, z.y, z.z]),
            c2: r.c2,
            verdict: r.verdict,
            samples_checked: r.samples_checked,
            qp_solves: r.qp_solves,
        }
    }
}

/// Half-space form of an obstacle, enough to recheck a verdict offline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstacleRecord {
    pub id: String,
    /// Unit normals.
    pub normals: Vec<[f64; 3]>,
    pub offsets: Vec<f64>,
    /// Planner buffer at the end of the run; 0 outside `plan`.
    pub buffer: f64,
}

impl From<&CuboidObstacle> for ObstacleRecord {
    fn from(o: &CuboidObstacle) -> Self {
        Self {
            id: o.id.clone(),
            normals: o.normals().iter().map(|a| [a.x, a.y, a.z]).collect(),
            offsets: o.offsets().to_vec(),
            buffer: o.buffer(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BufferUpdateRecord {
    pub obstacle: String,
    pub before: f64,
    pub touch_distance: f64,
    pub clearance: f64,
    pub thickness: f64,
    pub critical_t: f64,
    pub saturated: bool,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CleanupRecord {
    pub obstacle: String,
    pub removed: usize,
    pub orphaned: usize,
    pub regrow_iterations: usize,
    pub pruned: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OuterRecord {
    pub index: usize,
    pub inner_iterations: usize,
    pub converged: bool,
    pub c_best: f64,
    /// Buffers the inner loop planned against.
    pub buffers: Vec<f64>,
    pub updates: Vec<BufferUpdateRecord>,
    pub cleanups: Vec<CleanupRecord>,
}

impl From<&OuterIteration> for OuterRecord {
    fn from(it: &OuterIteration) -> Self {
        Self {
            index: it.index,
            inner_iterations: it.inner.iterations,
            converged: it.inner.converged,
            c_best: it.inner.c_best,
            buffers: it.buffers.clone(),
            updates: it
                .updates
                .iter()
                .map(|u| BufferUpdateRecord {
                    obstacle: u.id.clone(),
                    before: u.before,
                    touch_distance: u.touch_distance,
                    clearance: u.clearance,
                    thickness: u.thickness,
                    critical_t: u.critical_t,
                    saturated: u.saturated,
                    after: u.after,
                })
                .collect(),
            cleanups: it
                .cleanups
                .iter()
                .map(|(id, s)| CleanupRecord {
                    obstacle: id.clone(),
                    removed: s.removed,
                    orphaned: s.orphaned,
                    regrow_iterations: s.regrow_iterations,
                    pruned: s.pruned,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanSummary {
    pub cost: f64,
    pub path: Vec<[f64; 2]>,
    pub duration: f64,
    pub tree_nodes: usize,
    pub outer_iterations: Vec<OuterRecord>,
}

impl From<&PlanOutcome> for PlanSummary {
    fn from(o: &PlanOutcome) -> Self {
        Self {
            cost: o.cost,
            path: o.path.iter().map(|p| [p.x, p.y]).collect(),
            duration: o.trajectory.duration(),
            tree_nodes: o.tree.len_alive(),
            outer_iterations: o.iterations.iter().map(OuterRecord::from).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelDeviation {
    pub channel: String,
    pub lc_peak: f64,
    pub mc_peak: f64,
    /// `max |mc - lc| / lc` over samples with `lc >= threshold * lc_peak`;
    /// `null` for a degenerate channel.
    pub max_relative_deviation: Option<f64>,
    pub at_t: Option<f64>,
    /// The LC variance is identically zero, so no relative comparison exists.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McSummary {
    pub runs: usize,
    pub base_seed: u64,
    pub rng: String,
    pub noise: String,
    /// Fraction of each channel's LC peak below which samples are ignored.
    pub threshold_fraction: f64,
    pub position_channels: [String; 3],
    pub channels: Vec<ChannelDeviation>,
    /// Every position channel is degenerate: no noise reaches the position.
    pub degenerate: bool,
}

impl McSummary {
    pub fn channel(&self, name: &str) -> Option<&ChannelDeviation> {
        self.channels.iter().find(|c| c.channel == name)
    }

    /// Largest deviation over the three position channels.
    pub fn position_max_deviation(&self) -> Option<f64> {
        self.position_channels
            .iter()
            .filter_map(|n| self.channel(n)?.max_relative_deviation)
            .reduce(f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub ms: f64,
}

/// Deterministic outcome of one run. Wall-clock timings are kept out of the
/// serialized form so identical inputs give identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub scenario_name: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub beta: f64,
    pub c2: f64,
    pub verdict: Verdict,
    pub clearance: Vec<ClearanceRecord>,
    pub obstacles: Vec<ObstacleRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McSummary>,
    pub config: Scenario,
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

impl RunReport {
    pub fn timing(&self, stage: &str) -> Option<f64> {
        self.timings.iter().find(|t| t.stage == stage).map(|t| t.ms)
    }

    pub fn min_cstar2(&self) -> f64 {
        self.clearance.iter().map(|c| c.min_cstar2).fold(f64::INFINITY, f64::min)
    }
}

/// Overall verdict: collide if any obstacle collides.
pub fn overall_verdict(reports: &[ClearanceReport]) -> Verdict {
    if reports.iter().any(|r| r.verdict == Verdict::Collide) {
        Verdict::Collide
    } else {
        Verdict::Clear
    }
}
