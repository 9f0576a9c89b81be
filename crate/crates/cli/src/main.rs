//! `tubeplan`: validate flight plans against obstacles with linear covariance
//! tubes, plan chance-constrained paths, and compare LC against Monte Carlo.
//!
//! Exit status: 0 when every obstacle is clear, 2 when the tube collides with
//! an obstacle, 1 on any error.
//!
//! Monte Carlo run `i` draws its gusts from a ChaCha8 generator (rand_chacha
//! 0.9, `seed_from_u64(seed + i)`) through rand_distr's Ziggurat standard
//! normal, scaled by `1/sqrt(dt)` per step. The planner uses one ChaCha8
//! stream seeded with `seed`.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use tubeplan::geometry::Verdict;
use tubeplan::scenario::{
    run_mc_compare, run_plan, run_validate, write_artifacts, Overrides, RunOutput, Scenario,
};

#[derive(Parser, Debug)]
#[command(name = "tubeplan", version, about = "Uncertainty tubes and chance-constrained planning for small UAS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate the LC tube along the scenario's desired trajectory and check it against the obstacles.
    Validate(Common),
    /// Plan a chance-constrained path with the dynamic informed RRT*.
    Plan(Common),
    /// Compare LC variances with a seeded Monte Carlo ensemble.
    McCompare {
        #[command(flatten)]
        common: Common,
        /// Ensemble size (overrides `mc_runs`; at least 100).
        #[arg(long)]
        runs: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Directory receiving the artifacts.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Base seed (overrides the file).
    #[arg(long)]
    seed: Option<u64>,
    /// Confidence level of the tube (overrides the file).
    #[arg(long)]
    beta: Option<f64>,
    /// Tube sample stride of the collision check (overrides the file).
    #[arg(long)]
    stride: Option<usize>,
}

fn load(common: &Common, runs: Option<usize>) -> anyhow::Result<Scenario> {
    let mut scenario = Scenario::from_path(&common.scenario)
        .with_context(|| format!("reading {}", common.scenario.display()))?;
    scenario.apply(&Overrides {
        seed: common.seed,
        beta: common.beta,
        stride: common.stride,
        runs,
    });
    Ok(scenario)
}

fn summarize(out: &RunOutput) {
    let r = &out.report;
    println!("scenario  {} ({})", r.scenario_name, &r.scenario_sha256[..12]);
    println!("seed      {}", r.seed);
    println!("beta      {} (c^2 = {:.4})", r.beta, r.c2);
    for c in &r.clearance {
        let t = c.argmin_t.map_or("-".to_string(), |t| format!("{t:.2} s"));
        println!(
            "obstacle  {:<12} min c*^2 = {:<12.4} at {:<10} {:?}",
            c.obstacle, c.min_cstar2, t, c.verdict
        );
    }
    if let Some(p) = &r.plan {
        println!("path      {} waypoints, length {:.2} m, {:.1} s", p.path.len(), p.cost, p.duration);
    }
    if let Some(mc) = &r.monte_carlo {
        println!("mc runs   {} ({})", mc.runs, mc.rng);
        if mc.degenerate {
            println!("mc        degenerate comparison: no noise reaches the position");
        }
        for name in &mc.position_channels {
            if let Some(ch) = mc.channel(name) {
                match ch.max_relative_deviation {
                    Some(d) => println!("deviation {name:<4} {:.2}% (max |mc - lc| / lc)", 100.0 * d),
                    None => println!("deviation {name:<4} n/a (degenerate)"),
                }
            }
        }
    }
    for t in &r.timings {
        println!("time      {:<12} {:.1} ms", t.stage, t.ms);
    }
    println!("verdict   {:?}", r.verdict);
}

fn run(cli: Cli) -> anyhow::Result<Verdict> {
    let (out, dir) = match &cli.command {
        Command::Validate(c) => (run_validate(&load(c, None)?)?, &c.out),
        Command::Plan(c) => (run_plan(&load(c, None)?)?, &c.out),
        Command::McCompare { common, runs } => (run_mc_compare(&load(common, *runs)?)?, &common.out),
    };
    write_artifacts(dir, &out).with_context(|| format!("writing artifacts to {}", dir.display()))?;
    summarize(&out);
    Ok(out.report.verdict)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with status 0; usage errors must
            // not reuse status 2, which means a collision.
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Verdict::Clear) => ExitCode::SUCCESS,
        Ok(Verdict::Collide) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
