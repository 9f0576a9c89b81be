//! Chance-constrained path planning in the constant-altitude plane.

mod dynamic;
mod path;
mod polygon;
mod rrt;
mod sampling;
mod tree;

pub use dynamic::{
    cleanup_and_regrow, comp_obs_dist, tube_thickness, dynamic_informed_rrt_star, initial_buffer, BufferUpdate, CleanupStats, PathPropagation,
    ObstacleDistance, OuterIteration, PlanOutcome, PlanProblem,
};
pub use path::{path_to_trajectory, PolylineTrajectory};
pub use polygon::{no_collision_2d, planar_obstacles, PlanarObstacle};
pub use rrt::{add_node, informed_rrt_star, AddResult, Bounds, InnerLoopStats, PlannerConfig};
pub use sampling::sample_ellipse;
pub use tree::{PlanNode, PlanTree};
