//! Ground-truth environment, simulated sensing and the robot's occupancy map.

mod grid;
mod region;
mod sensors;
mod state;

pub use grid::{bayes_update, line_of_sight, update_occupancy, CellIndex, InverseSensorModel, OccupancyGrid, UNKNOWN};
pub use region::{current_region, Region, RegionGraph, RegionId};
pub use sensors::{cast_laser, detect_persons, hue_histogram, FaceObservation, LaserScan, PersonDetection, SensorConfig};
pub use state::{disk_is_free, square_meets_polygon, PersonState, Pose, WorldState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("pose ({x:.3}, {y:.3}) is outside the world bounds")]
    InvalidPose { x: f64, y: f64 },
    #[error("point ({x:.3}, {y:.3}) lies in no region")]
    NoRegion { x: f64, y: f64 },
    #[error("invalid region graph: {0}")]
    InvalidRegionGraph(String),
}
