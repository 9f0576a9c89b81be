use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::CuboidObstacle;
use crate::planner::{path_to_trajectory, PlannerConfig};
use crate::sim::TimeGrid;
use crate::vehicle::{AscentCruiseDescent, ClosedLoopSystem, DesiredTrajectory, LateralSinusoid, Vehicle};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// A complete run description. All quantities are SI, angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub vehicle: Vehicle,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub initial_covariance: InitialCovariance,
    /// Required by `validate` and `mc-compare`; `plan` builds its own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desired_trajectory: Option<DesiredSpec>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner: Option<PlannerConfig>,
    #[serde(default)]
    pub seed: u64,
    /// Tube sample stride of the final collision check.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_runs")]
    pub mc_runs: usize,
}

fn default_beta() -> f64 {
    0.999
}

fn default_stride() -> usize {
    1
}

fn default_runs() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKeyword {
    /// On the reference at `t0` with quiet gust filters.
    Matched,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Keyword(StateKeyword),
    Explicit(Vec<f64>),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Keyword(StateKeyword::Matched)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCovariance {
    #[default]
    Zero,
    Diagonal(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointPath {
    /// Planar vertices (x, y).
    pub points: Vec<[f64; 2]>,
    pub altitude: f64,
    pub speed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum DesiredSpec {
    AscentCruiseDescent(AscentCruiseDescent),
    LateralSinusoid(LateralSinusoid),
    Waypoints(WaypointPath),
}

impl DesiredSpec {
    pub fn build(&self) -> Result<Arc<dyn DesiredTrajectory>> {
        Ok(match self {
            DesiredSpec::AscentCruiseDescent(p) => Arc::new(p.clone()),
            DesiredSpec::LateralSinusoid(p) => Arc::new(p.clone()),
            DesiredSpec::Waypoints(w) => {
                let pts: Vec<Vector2<f64>> = w.points.iter().map(|p| Vector2::from(*p)).collect();
                Arc::new(path_to_trajectory(&pts, w.altitude, w.speed)?)
            }
        })
    }

    /// Natural end time of the profile, when it has one.
    pub fn duration(&self) -> Option<f64> {
        match self {
            DesiredSpec::AscentCruiseDescent(p) => Some(p.duration()),
            DesiredSpec::LateralSinusoid(_) => None,
            DesiredSpec::Waypoints(w) => {
                let pts: Vec<Vector2<f64>> = w.points.iter().map(|p| Vector2::from(*p)).collect();
                path_to_trajectory(&pts, w.altitude, w.speed).ok().map(|t| t.duration())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleSpec {
    Box {
        id: String,
        center: [f64; 3],
        half_extents: [f64; 3],
        #[serde(default)]
        yaw: f64,
    },
    /// `normals[i]·z <= offsets[i]`; rows need not be normalised.
    Halfspaces {
        id: String,
        normals: Vec<[f64; 3]>,
        offsets: Vec<f64>,
    },
}

impl ObstacleSpec {
    pub fn id(&self) -> &str {
        match self {
            ObstacleSpec::Box { id, .. } | ObstacleSpec::Halfspaces { id, .. } => id,
        }
    }

    pub fn build(&self) -> Result<CuboidObstacle> {
        match self {
            ObstacleSpec::Box {
                id,
                center,
                half_extents,
                yaw,
            } => CuboidObstacle::from_box(id, *center, *half_extents, *yaw),
            ObstacleSpec::Halfspaces { id, normals, offsets } => {
                CuboidObstacle::from_halfspaces(id, normals, offsets)
            }
        }
        .map_err(|e| e.for_obstacle(self.id()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub t0: f64,
    /// Defaults to the end of the desired profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tf: Option<f64>,
    pub dt: f64,
}

/// Command-line overrides applied before hashing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub beta: Option<f64>,
    pub stride: Option<usize>,
    pub runs: Option<usize>,
}

fn schema_err(e: serde_json::Error, origin: &str) -> Error {
    Error::Schema(format!("{origin}: line {}, column {}: {e}", e.line(), e.column()))
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::parse_with_origin(text, "<input>")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_with_origin(&text, &path.display().to_string())
    }

    fn parse_with_origin(text: &str, origin: &str) -> Result<Self> {
        // Check the version first so an outdated file gets a clear message
        // rather than a confusing field error.
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| schema_err(e, origin))?;
        match raw.get("schema_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(Error::Schema(format!(
                    "{origin}: unsupported schema_version {v} (expected {SCHEMA_VERSION})"
                )))
            }
            None => {
                return Err(Error::Schema(format!(
                    "{origin}: missing integer field `schema_version`"
                )))
            }
        }
        serde_json::from_str(text).map_err(|e| schema_err(e, origin))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    /// Compact serialisation used for hashing.
    pub fn canonical_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("scenario serialises")
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.canonical_json());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(b) = o.beta {
            self.beta = b;
        }
        if let Some(k) = o.stride {
            self.stride = k;
        }
        if let Some(r) = o.runs {
            self.mc_runs = r;
        }
    }

    /// Mode-independent consistency checks.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Schema(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", self.schema_version));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must be in (0, 1), got {}", self.beta));
        }
        if self.stride == 0 {
            return bad("stride must be >= 1".into());
        }
        self.vehicle.validate()?;
        let n = self.vehicle.state_dim();
        if let InitialState::Explicit(x) = &self.initial_state {
            if x.len() != n {
                return bad(format!("initial_state has {} entries, the vehicle has {n} states", x.len()));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return bad("initial_state must be finite".into());
            }
        }
        if let InitialCovariance::Diagonal(d) = &self.initial_covariance {
            if d.len() != n {
                return bad(format!("initial_covariance diagonal has {} entries, expected {n}", d.len()));
            }
            if d.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return bad("initial_covariance diagonal must be finite and >= 0".into());
            }
        }
        if !(self.grid.dt > 0.0 && self.grid.dt.is_finite()) {
            return bad(format!("grid.dt must be positive, got {}", self.grid.dt));
        }
        let mut ids = std::collections::BTreeSet::new();
        for o in &self.obstacles {
            if !ids.insert(o.id()) {
                return bad(format!("duplicate obstacle id `{}`", o.id()));
            }
            o.build()?;
        }
        if let Some(DesiredSpec::Waypoints(w)) = &self.desired_trajectory {
            if w.points.len() < 2 {
                return bad("waypoints need at least two points".into());
            }
            if let Some(p) = &self.planner {
                for q in &w.points {
                    if !p.bounds.contains(&Vector2::from(*q)) {
                        return bad(format!("waypoint {q:?} lies outside the planner bounds"));
                    }
                }
            }
        }
        if let Some(d) = &self.desired_trajectory {
            d.build()?;
        }
        if let Some(p) = &self.planner {
            p.validate().map_err(|e| Error::Schema(e.to_string()))?;
        }
        Ok(())
    }

    pub fn obstacles(&self) -> Result<Vec<CuboidObstacle>> {
        self.obstacles.iter().map(ObstacleSpec::build).collect()
    }

    pub fn initial_covariance(&self) -> DMatrix<f64> {
        let n = self.vehicle.state_dim();
        match &self.initial_covariance {
            InitialCovariance::Zero => DMatrix::zeros(n, n),
            InitialCovariance::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
        }
    }

    /// Closed loop, start state and grid for the prescribed-trajectory modes.
    pub fn closed_loop(&self) -> Result<(ClosedLoopSystem, Vec<f64>, TimeGrid)> {
        let spec = self
            .desired_trajectory
            .as_ref()
            .ok_or_else(|| Error::Schema("this mode needs `desired_trajectory`".into()))?;
        let tf = match (self.grid.tf, spec.duration()) {
            (Some(tf), _) => tf,
            (None, Some(d)) => self.grid.t0 + d,
            (None, None) => return Err(Error::Schema("grid.tf is required for this profile".into())),
        };
        let grid = TimeGrid::new(self.grid.t0, tf, self.grid.dt)?;
        let sys = ClosedLoopSystem::new(self.vehicle.clone(), spec.build()?, self.grid.dt);
        let x0 = match &self.initial_state {
            InitialState::Keyword(StateKeyword::Matched) => sys.matched_initial_state(grid.t0),
            InitialState::Explicit(x) => x.clone(),
        };
        Ok((sys, x0, grid))
    }
}
