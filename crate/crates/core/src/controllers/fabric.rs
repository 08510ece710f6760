use super::{ControllerCommand, ControllerGains};
use crate::geometry::{wrap_angle, Vec2, Vec3};
use crate::sim::WorldState;
use crate::world::Scenario;

/// Softened quadratic well `r^2 / (1 + r)`: quadratic near the goal,
/// asymptotically linear far away so the pull saturates at `gamma`.
pub fn psi(r: f64) -> f64 {
    r * r / (1.0 + r)
}

/// Gradient of `psi(|e|)` with respect to `e`: `e (2 + r) / (1 + r)^2`.
pub fn psi_gradient<const D: usize>(e: nalgebra::SVector<f64, D>) -> nalgebra::SVector<f64, D> {
    let r = e.norm();
    e * ((2.0 + r) / ((1.0 + r) * (1.0 + r)))
}

/// Base and end-effector state in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FabricState {
    pub base_pos: Vec2,
    pub base_vel: Vec2,
    pub ee_pos: Vec3,
    pub ee_vel: Vec3,
    pub yaw: f64,
    pub yaw_rate: f64,
}

impl FabricState {
    pub fn observe(s: &WorldState) -> Self {
        Self {
            base_pos: s.base.pos,
            base_vel: s.base.vel,
            ee_pos: s.ee_position(),
            ee_vel: s.ee_world_velocity(),
            yaw: s.ee.yaw,
            yaw_rate: s.ee.yaw_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FabricGoal {
    pub pos: Vec3,
    pub yaw: f64,
}

/// World-frame accelerations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FabricAccel {
    pub base: Vec2,
    pub ee: Vec3,
    pub yaw: f64,
}

/// `q'' = -gamma grad psi(q - goal) - B q' + repulsion`, per component.
///
/// The end effector is attracted to the goal pose. The base is attracted to
/// a point at 0.85 reach from the goal only while the goal is out of reach,
/// otherwise it is only damped. Navigation obstacles closer than `d_safe` to
/// the base footprint push it away along the distance gradient. The base
/// acceleration is clamped to the robot limit.
pub fn fabric_accel(q: &FabricState, goal: &FabricGoal, scenario: &Scenario, gains: &ControllerGains) -> FabricAccel {
    let robot = &scenario.robot;
    let (gamma, b) = (gains.gamma, gains.damping);

    let to_goal = goal.pos.xy() - q.base_pos;
    let dist = to_goal.norm();
    let mut base = -q.base_vel * b;
    if dist > robot.ee_reach {
        let target = goal.pos.xy() - to_goal * (0.85 * robot.ee_reach / dist);
        base -= psi_gradient(q.base_pos - target) * gamma;
    }
    let (d, n) = scenario.sdf_nav_gradient(q.base_pos, robot.base_radius);
    if d < gains.d_safe {
        base += n * (gains.eta * (gains.d_safe - d).min(gains.d_safe) / gains.d_safe);
    }
    let norm = base.norm();
    if norm > robot.max_base_accel {
        base *= robot.max_base_accel / norm;
    }

    let ee = -psi_gradient(q.ee_pos - goal.pos) * gamma - q.ee_vel * b;
    let e_yaw = wrap_angle(q.yaw - goal.yaw);
    let yaw = -psi_gradient(nalgebra::Vector1::new(e_yaw))[0] * gamma - q.yaw_rate * b;
    FabricAccel { base, ee, yaw }
}

/// Integrates [`fabric_accel`] over one step into a command: base
/// acceleration, and end-effector velocity relative to the base clamped to
/// the arm speed limits.
pub fn fabric_step(q: &FabricState, goal: &FabricGoal, scenario: &Scenario, gains: &ControllerGains, dt: f64) -> ControllerCommand {
    let robot = &scenario.robot;
    let acc = fabric_accel(q, goal, scenario, gains);
    let base_vel_next = q.base_vel + acc.base * dt;
    let ee_vel_next = q.ee_vel + acc.ee * dt;
    let mut rel = ee_vel_next - Vec3::new(base_vel_next.x, base_vel_next.y, 0.0);
    let n = rel.norm();
    if n > robot.ee_max_speed {
        rel *= robot.ee_max_speed / n;
    }
    let yaw_rate = (q.yaw_rate + acc.yaw * dt).clamp(-robot.ee_max_yaw_rate, robot.ee_max_yaw_rate);
    ControllerCommand { base_accel: acc.base, ee_velocity: rel, ee_yaw_rate: yaw_rate, ..ControllerCommand::idle() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexPolygon;
    use crate::sim::testing::open_scenario;
    use crate::world::{HeightProfile, StaticShape};

    fn at_rest(base: Vec2, ee: Vec3) -> FabricState {
        FabricState { base_pos: base, base_vel: Vec2::zeros(), ee_pos: ee, ee_vel: Vec3::zeros(), yaw: 0.0, yaw_rate: 0.0 }
    }

    #[test]
    fn gradient_closed_form() {
        // r = 1: e (2 + 1) / 4
        let g = psi_gradient(Vec3::new(1.0, 0.0, 0.0));
        assert!((g.x - 0.75).abs() < 1e-15);
        // finite-difference check of psi
        let r = 0.7;
        let fd = (psi(r + 1e-6) - psi(r - 1e-6)) / 2e-6;
        assert!((fd - psi_gradient(nalgebra::Vector1::new(r))[0]).abs() < 1e-8);
    }

    #[test]
    fn stationary_at_goal() {
        let sc = open_scenario();
        let ee = Vec3::new(0.3, 0.1, 0.8);
        let q = at_rest(Vec2::zeros(), ee);
        let a = fabric_accel(&q, &FabricGoal { pos: ee, yaw: 0.0 }, &sc, &sc.sim.controllers);
        assert!(a.base.norm() < 1e-9 && a.ee.norm() < 1e-9 && a.yaw.abs() < 1e-9);
        let c = fabric_step(&q, &FabricGoal { pos: ee, yaw: 0.0 }, &sc, &sc.sim.controllers, 0.02);
        assert!(c.base_accel.norm() < 1e-9 && c.ee_velocity.norm() < 1e-9);
    }

    #[test]
    fn initial_pull_one_meter() {
        let sc = open_scenario();
        let mut gains = sc.sim.controllers.clone();
        gains.gamma = 4.0;
        gains.damping = 2.0;
        let ee = Vec3::new(0.0, 0.0, 0.8);
        let q = at_rest(Vec2::zeros(), ee);
        let a = fabric_accel(&q, &FabricGoal { pos: ee + Vec3::new(1.0, 0.0, 0.0), yaw: 0.0 }, &sc, &gains);
        // gamma * |grad psi(1)| = 4 * 3/4
        assert!((a.ee - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-12);
        assert!(a.base.x > 0.0 && a.base.norm() <= sc.robot.max_base_accel + 1e-12);
    }

    #[test]
    fn repulsor_pushes_away() {
        let mut sc = open_scenario();
        // obstacle face 0.3 m ahead of a 0.25 m radius base: d = 0.05 < d_safe
        sc.shapes.push(StaticShape {
            id: "wall".into(),
            footprint: ConvexPolygon::rectangle(Vec2::new(0.8, 0.0), Vec2::new(1.0, 2.0)),
            height: HeightProfile::Constant(1.0),
            nav_obstacle: true,
        });
        let base = Vec2::new(0.3 - sc.robot.base_radius - 0.05, 0.0);
        let q = at_rest(base, Vec3::new(base.x, 0.0, 0.8));
        let mut gains = sc.sim.controllers.clone();
        gains.gamma = 0.0;
        let a = fabric_accel(&q, &FabricGoal { pos: Vec3::new(3.0, 0.0, 0.8), yaw: 0.0 }, &sc, &gains);
        assert!(a.base.x < 0.0);
    }
}
