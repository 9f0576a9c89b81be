use std::time::Instant;

use nalgebra::DMatrix;

use super::report::*;
use super::Scenario;
use crate::geometry::check_tube_collision;
use crate::planner::{dynamic_informed_rrt_star, PlanOutcome, PlanProblem};
use crate::sim::{integrate_nominal, linearize, mc_ensemble, Ensemble, Trajectory, NOISE_ALGORITHM, RNG_ALGORITHM};
use crate::uncertainty::{build_tube, propagate_covariance, CovarianceHistory, Tube};
use crate::{Error, Result};

/// Samples below this fraction of a channel's LC peak are excluded from
/// the relative-deviation metric.
pub const DEVIATION_THRESHOLD: f64 = 0.01;

/// Smallest ensemble accepted by `mc-compare`.
pub const MIN_MC_RUNS: usize = 100;

/// Everything a run produced; the report plus the data behind the artifacts.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub state_names: Vec<String>,
    pub nominal: Trajectory,
    pub covariance: CovarianceHistory,
    pub tube: Tube,
    pub plan: Option<PlanOutcome>,
    pub ensemble: Option<Ensemble>,
}

struct Stopwatch {
    timings: Vec<StageTiming>,
}

impl Stopwatch {
    fn new() -> Self {
        Self { timings: Vec::new() }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(out)
    }

    /// Adds a derived stage summing earlier ones.
    fn total(&mut self, stage: &str, parts: &[&str]) {
        let ms = self
            .timings
            .iter()
            .filter(|t| parts.contains(&t.stage.as_str()))
            .map(|t| t.ms)
            .sum();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            ms,
        });
    }
}

const LC_STAGES: [&str; 4] = ["nominal", "linearize", "covariance", "tube"];

struct Lc {
    nominal: Trajectory,
    covariance: CovarianceHistory,
    tube: Tube,
}

fn linear_covariance(scenario: &Scenario, watch: &mut Stopwatch) -> Result<(Lc, crate::vehicle::ClosedLoopSystem, Vec<f64>)> {
    let (sys, x0, grid) = scenario.closed_loop()?;
    let nominal = watch.time("nominal", || integrate_nominal(&sys, &x0, &grid))?;
    let lin = watch.time("linearize", || linearize(&sys, &nominal))?;
    let p0 = scenario.initial_covariance();
    let covariance = watch.time("covariance", || propagate_covariance(&lin, &p0))?;
    let tube = watch.time("tube", || build_tube(&nominal, &covariance, scenario.beta, sys.position_rows()))?;
    watch.total("lc_total", &LC_STAGES);
    Ok((
        Lc {
            nominal,
            covariance,
            tube,
        },
        sys,
        x0,
    ))
}

fn base_report(scenario: &Scenario, mode: Mode, c2: f64) -> RunReport {
    RunReport {
        mode,
        scenario_name: scenario.name.clone(),
        scenario_sha256: scenario.sha256(),
        seed: scenario.seed,
        beta: scenario.beta,
        c2,
        verdict: crate::geometry::Verdict::Clear,
        clearance: Vec::new(),
        obstacles: Vec::new(),
        plan: None,
        monte_carlo: None,
        config: scenario.clone(),
        timings: Vec::new(),
    }
}

fn state_names(scenario: &Scenario) -> Vec<String> {
    scenario.vehicle.state_names().iter().map(|s| s.to_string()).collect()
}

/// Nominal, LC tube and collision check along the prescribed trajectory.
pub fn run_validate(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let mut watch = Stopwatch::new();
    let (lc, _, _) = linear_covariance(scenario, &mut watch)?;
    let obstacles = scenario.obstacles()?;
    let reports = watch.time("collision", || check_tube_collision(&lc.tube, &obstacles, scenario.stride))?;
    let mut report = base_report(scenario, Mode::Validate, lc.tube.c2);
    report.verdict = overall_verdict(&reports);
    report.clearance = reports.iter().map(ClearanceRecord::from).collect();
    report.obstacles = obstacles.iter().map(ObstacleRecord::from).collect();
    report.timings = watch.timings;
    Ok(RunOutput {
        report,
        state_names: state_names(scenario),
        nominal: lc.nominal,
        covariance: lc.covariance,
        tube: lc.tube,
        plan: None,
        ensemble: None,
    })
}

/// Chance-constrained planning followed by a stride-1 check against the
/// true obstacles.
pub fn run_plan(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let config = scenario
        .planner
        .clone()
        .ok_or_else(|| Error::Schema("plan mode needs a `planner` section".into()))?;
    let mut watch = Stopwatch::new();
    let problem = PlanProblem {
        vehicle: scenario.vehicle.clone(),
        obstacles: scenario.obstacles()?,
        initial_covariance: scenario.initial_covariance(),
        beta: scenario.beta,
        dt: scenario.grid.dt,
        config,
        seed: scenario.seed,
    };
    let outcome = watch.time("plan", || dynamic_informed_rrt_star(&problem))?;
    // The planner checks with stride 1; honour a coarser requested stride
    // only by re-running the check, never by skipping samples silently.
    let reports = if scenario.stride == 1 {
        outcome.reports.clone()
    } else {
        watch.time("collision", || check_tube_collision(&outcome.tube, &problem.obstacles, scenario.stride))?
    };
    let mut report = base_report(scenario, Mode::Plan, outcome.tube.c2);
    report.verdict = overall_verdict(&reports);
    report.clearance = reports.iter().map(ClearanceRecord::from).collect();
    report.obstacles = outcome.obstacles.iter().map(ObstacleRecord::from).collect();
    report.plan = Some(PlanSummary::from(&outcome));
    report.timings = watch.timings;
    Ok(RunOutput {
        report,
        state_names: state_names(scenario),
        nominal: outcome.nominal.clone(),
        covariance: outcome.covariance.clone(),
        tube: outcome.tube.clone(),
        plan: Some(outcome),
        ensemble: None,
    })
}

/// LC against an Euler–Maruyama ensemble of `scenario.mc_runs` runs seeded
/// `scenario.seed + i`.
pub fn run_mc_compare(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    if scenario.mc_runs < MIN_MC_RUNS {
        return Err(Error::Schema(format!(
            "mc-compare needs at least {MIN_MC_RUNS} runs, got {}",
            scenario.mc_runs
        )));
    }
    if scenario.initial_covariance().iter().any(|v| *v != 0.0) {
        // Runs start from the same state; a random start would need its own
        // sampling scheme, which the comparison does not define.
        return Err(Error::Schema("mc-compare requires a zero initial covariance".into()));
    }
    let mut watch = Stopwatch::new();
    let (lc, sys, x0) = linear_covariance(scenario, &mut watch)?;
    let ensemble = watch.time("monte_carlo", || {
        mc_ensemble(&sys, &x0, &lc.nominal.grid, scenario.mc_runs, scenario.seed)
    })?;
    let obstacles = scenario.obstacles()?;
    let reports = watch.time("collision", || check_tube_collision(&lc.tube, &obstacles, scenario.stride))?;

    let names = state_names(scenario);
    let channels = channel_deviations(&lc.covariance, &ensemble.covariance, &names, DEVIATION_THRESHOLD);
    let rows = scenario.vehicle.position_rows();
    let mc = McSummary {
        runs: scenario.mc_runs,
        base_seed: scenario.seed,
        rng: RNG_ALGORITHM.to_string(),
        noise: NOISE_ALGORITHM.to_string(),
        threshold_fraction: DEVIATION_THRESHOLD,
        position_channels: rows.map(|r| names[r].clone()),
        degenerate: rows.iter().all(|&r| channels[r].degenerate),
        channels,
    };

    let mut report = base_report(scenario, Mode::McCompare, lc.tube.c2);
    report.verdict = overall_verdict(&reports);
    report.clearance = reports.iter().map(ClearanceRecord::from).collect();
    report.obstacles = obstacles.iter().map(ObstacleRecord::from).collect();
    report.monte_carlo = Some(mc);
    report.timings = watch.timings;
    Ok(RunOutput {
        report,
        state_names: names,
        nominal: lc.nominal,
        covariance: lc.covariance,
        tube: lc.tube,
        plan: None,
        ensemble: Some(ensemble),
    })
}

fn diag(p: &[DMatrix<f64>], i: usize) -> impl Iterator<Item = f64> + '_ {
    p.iter().map(move |m| m[(i, i)])
}

/// Per-state-channel comparison of LC and sample variances.
///
/// A channel whose LC variance is identically zero is flagged degenerate.
pub fn channel_deviations(
    lc: &CovarianceHistory,
    mc: &CovarianceHistory,
    names: &[String],
    threshold: f64,
) -> Vec<ChannelDeviation> {
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let lc_peak = diag(&lc.p, i).fold(0.0, f64::max);
            let mc_peak = diag(&mc.p, i).fold(0.0, f64::max);
            if lc_peak <= 0.0 {
                return ChannelDeviation {
                    channel: name.clone(),
                    lc_peak,
                    mc_peak,
                    max_relative_deviation: None,
                    at_t: None,
                    degenerate: true,
                };
            }
            let floor = threshold * lc_peak;
            let mut worst: Option<(f64, f64)> = None;
            for (k, (l, m)) in diag(&lc.p, i).zip(diag(&mc.p, i)).enumerate() {
                if l < floor {
                    continue;
                }
                let dev = (m - l).abs() / l;
                if worst.is_none_or(|(w, _)| dev > w) {
                    worst = Some((dev, lc.grid.time(k)));
                }
            }
            ChannelDeviation {
                channel: name.clone(),
                lc_peak,
                mc_peak,
                max_relative_deviation: worst.map(|w| w.0),
                at_t: worst.map(|w| w.1),
                degenerate: false,
            }
        })
        .collect()
}
