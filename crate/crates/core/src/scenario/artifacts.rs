//! Files written by a run. CSV tables start with a `# scenario_sha256=… seed=…`
//! comment line; JSONL streams start with a metadata object. Everything
//! except `timings.json` is a pure function of the scenario.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::report::{Mode, RunReport};
use super::run::RunOutput;
use crate::Result;

pub const REPORT_FILE: &str = "report.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const NOMINAL_FILE: &str = "nominal.csv";
pub const TUBE_FILE: &str = "tube.jsonl";
pub const PATH_FILE: &str = "path.csv";
pub const BUFFERS_FILE: &str = "buffers.csv";
pub const TREE_FILE: &str = "tree.jsonl";
pub const VARIANCES_FILE: &str = "variances.csv";

#[derive(Serialize)]
struct StreamHeader<'a> {
    kind: &'a str,
    scenario_sha256: &'a str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c2: Option<f64>,
}

#[derive(Serialize)]
struct TreeRecord {
    index: usize,
    x: f64,
    y: f64,
    parent: Option<usize>,
    /// `null` for orphans.
    cost: f64,
}

#[derive(Serialize)]
struct Timings<'a> {
    mode: Mode,
    scenario_sha256: &'a str,
    stages: &'a [super::report::StageTiming],
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn csv_writer(dir: &Path, name: &str, report: &RunReport) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = create(dir, name)?;
    writeln!(f, "# scenario_sha256={} seed={}", report.scenario_sha256, report.seed)?;
    Ok(csv::Writer::from_writer(f))
}

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_json_line<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn write_nominal(dir: &Path, out: &RunOutput) -> Result<()> {
    let mut w = csv_writer(dir, NOMINAL_FILE, &out.report)?;
    let mut header = vec!["t".to_string()];
    header.extend(out.state_names.iter().cloned());
    header.extend(out.state_names.iter().map(|n| format!("var_{n}")));
    w.write_record(&header)?;
    for (k, x) in out.nominal.states.iter().enumerate() {
        let p = &out.covariance.p[k];
        let mut row = vec![num(out.nominal.grid.time(k))];
        row.extend(x.iter().map(|v| num(*v)));
        row.extend((0..x.len()).map(|i| num(p[(i, i)])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_tube(dir: &Path, out: &RunOutput) -> Result<()> {
    let mut f = create(dir, TUBE_FILE)?;
    let header = StreamHeader {
        kind: "tube",
        scenario_sha256: &out.report.scenario_sha256,
        seed: out.report.seed,
        beta: Some(out.tube.beta),
        c2: Some(out.tube.c2),
    };
    write_json_line(&mut f, &header)?;
    for r in out.tube.records() {
        write_json_line(&mut f, &r)?;
    }
    f.flush()?;
    Ok(())
}

fn write_plan(dir: &Path, out: &RunOutput) -> Result<()> {
    let Some(plan) = &out.plan else { return Ok(()) };
    let report = &out.report;

    let mut w = csv_writer(dir, PATH_FILE, report)?;
    w.write_record(["x", "y"])?;
    for p in &plan.path {
        w.write_record([num(p.x), num(p.y)])?;
    }
    w.flush()?;

    let mut w = csv_writer(dir, BUFFERS_FILE, report)?;
    w.write_record([
        "iteration",
        "obstacle",
        "before",
        "touch_distance",
        "clearance",
        "thickness",
        "critical_t",
        "saturated",
        "after",
    ])?;
    for it in &plan.iterations {
        for u in &it.updates {
            w.write_record([
                it.index.to_string(),
                u.id.clone(),
                num(u.before),
                num(u.touch_distance),
                num(u.clearance),
                num(u.thickness),
                num(u.critical_t),
                u.saturated.to_string(),
                num(u.after),
            ])?;
        }
    }
    w.flush()?;

    let mut f = create(dir, TREE_FILE)?;
    let header = StreamHeader {
        kind: "tree",
        scenario_sha256: &report.scenario_sha256,
        seed: report.seed,
        beta: None,
        c2: None,
    };
    write_json_line(&mut f, &header)?;
    for (index, n) in plan.tree.nodes.iter().enumerate().filter(|(_, n)| n.alive) {
        let rec = TreeRecord {
            index,
            x: n.coords.x,
            y: n.coords.y,
            parent: n.parent,
            cost: n.cost,
        };
        write_json_line(&mut f, &rec)?;
    }
    f.flush()?;
    Ok(())
}

fn write_variances(dir: &Path, out: &RunOutput) -> Result<()> {
    let Some(ens) = &out.ensemble else { return Ok(()) };
    let mut w = csv_writer(dir, VARIANCES_FILE, &out.report)?;
    let mut header = vec!["t".to_string()];
    header.extend(out.state_names.iter().map(|n| format!("lc_{n}")));
    header.extend(out.state_names.iter().map(|n| format!("mc_{n}")));
    w.write_record(&header)?;
    let n = out.state_names.len();
    for k in 0..out.covariance.p.len() {
        let mut row = vec![num(out.covariance.grid.time(k))];
        row.extend((0..n).map(|i| num(out.covariance.p[k][(i, i)])));
        row.extend((0..n).map(|i| num(ens.covariance.p[k][(i, i)])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every artifact of `out` into `dir` (created if missing) and
/// returns the paths written.
pub fn write_artifacts(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    write_nominal(dir, out)?;
    write_tube(dir, out)?;
    write_plan(dir, out)?;
    write_variances(dir, out)?;

    let mut f = create(dir, REPORT_FILE)?;
    serde_json::to_writer_pretty(&mut f, &out.report)?;
    f.write_all(b"\n")?;
    f.flush()?;

    let mut f = create(dir, TIMINGS_FILE)?;
    let timings = Timings {
        mode: out.report.mode,
        scenario_sha256: &out.report.scenario_sha256,
        stages: &out.report.timings,
    };
    serde_json::to_writer_pretty(&mut f, &timings)?;
    f.write_all(b"\n")?;
    f.flush()?;

    let mut names = vec![NOMINAL_FILE, TUBE_FILE];
    if out.plan.is_some() {
        names.extend([PATH_FILE, BUFFERS_FILE, TREE_FILE]);
    }
    if out.ensemble.is_some() {
        names.push(VARIANCES_FILE);
    }
    names.extend([REPORT_FILE, TIMINGS_FILE]);
    Ok(names.into_iter().map(|n| dir.join(n)).collect())
}
