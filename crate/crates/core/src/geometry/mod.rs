//! Ellipsoid/cuboid collision checks, the bounding-sphere prefilter and the
//! buffer-tangency solve.

mod buffer;
pub(crate) mod collision;
mod obstacle;
mod qp;

pub use buffer::{buffer_touch_distance, TouchDistance};
pub use collision::{check_tube_collision, sphere_prefilter, ClearanceReport, Verdict};
pub use obstacle::CuboidObstacle;
pub use qp::{solve_qp, solve_qp_from, QpSolution};
