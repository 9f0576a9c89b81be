use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model was evaluated outside the region where its equations are defined.
    #[error("model domain: {0}")]
    ModelDomain(String),

    /// A matrix that must be inverted is (numerically) singular.
    #[error("singular: {0}")]
    Singular(String),

    #[error("{source} (at t = {t} s)")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Constraint set of an obstacle is empty or unbounded.
    #[error("infeasible region: {0}")]
    InfeasibleRegion(String),

    #[error("active-set solver exceeded {0} iterations")]
    MaxIterations(usize),

    #[error("buffer tangency bracket failed: {0}")]
    BracketFailure(String),

    #[error("obstacle `{obstacle}`: {source}")]
    Obstacle {
        obstacle: String,
        #[source]
        source: Box<Error>,
    },

    #[error("no solution: {0}")]
    NoSolution(String),

    /// Start or goal sits inside a buffered obstacle.
    #[error("{which} is blocked by obstacle `{obstacle}`")]
    Blocked { which: &'static str, obstacle: String },

    #[error("scenario: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_time(self, t: f64) -> Self {
        match self {
            e @ Error::AtTime { .. } => e,
            e => Error::AtTime {
                t,
                source: Box::new(e),
            },
        }
    }

    pub fn for_obstacle(self, id: &str) -> Self {
        Error::Obstacle {
            obstacle: id.to_string(),
            source: Box::new(self),
        }
    }
}
