use super::{ControllerCommand, ControllerGains};
use crate::geometry::Vec2;
use crate::world::RobotSpec;

/// Waypoint tracker for the base.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub waypoints: Vec<Vec2>,
    pub index: usize,
    pub integral: Vec2,
}

impl TrackState {
    /// `waypoints[0]` is the start; tracking begins at the next one.
    pub fn new(waypoints: Vec<Vec2>) -> Self {
        let index = usize::from(waypoints.len() > 1);
        Self { waypoints, index, integral: Vec2::zeros() }
    }
}

/// PD (optionally PID) law toward the current waypoint. Intermediate
/// waypoints are passed once the base is within 1.5 cells of them. The arm
/// is not commanded.
pub fn track_step(
    state: &mut TrackState,
    pos: Vec2,
    vel: Vec2,
    robot: &RobotSpec,
    gains: &ControllerGains,
    cell: f64,
    dt: f64,
) -> ControllerCommand {
    let last = state.waypoints.len() - 1;
    while state.index < last && (state.waypoints[state.index] - pos).norm() <= 1.5 * cell {
        state.index += 1;
    }
    let e = state.waypoints[state.index] - pos;
    if gains.ki != 0.0 {
        state.integral += e * dt;
    }
    let mut a = e * gains.kp - vel * gains.kd + state.integral * gains.ki;
    let n = a.norm();
    if n > robot.max_base_accel {
        a *= robot.max_base_accel / n;
    }
    ControllerCommand { base_accel: a, ..ControllerCommand::idle() }
}
