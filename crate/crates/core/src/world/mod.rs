//! Scenario geometry and the geometric queries used by planning, control and
//! simulation.
//!
//! The world is 2.5D: navigation happens in the ground plane against convex
//! footprints, while objects live on height fields given by each shape's top
//! surface (flat or a linear ramp).

mod file;

pub use file::{load_scenario, scenario_to_string, ScenarioError};

use crate::controllers::ControllerGains;
use crate::geometry::{ConvexPolygon, Rect, Vec2, Vec3};
use crate::params::ParamSpec;

/// Tolerance used when deciding whether an object rests on a surface (m).
pub const REST_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub enum HeightProfile {
    Constant(f64),
    /// Linear top surface falling from `h_high` to `h_low` along `downhill`.
    Ramp { h_low: f64, h_high: f64, downhill: Vec2 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticShape {
    pub id: String,
    pub footprint: ConvexPolygon,
    pub height: HeightProfile,
    pub nav_obstacle: bool,
}

impl StaticShape {
    /// Horizontal extent of the footprint along the downhill direction, and
    /// the projection where the ramp starts.
    fn ramp_extent(&self, downhill: Vec2) -> (f64, f64) {
        let (lo, hi) = self.footprint.projection_range(downhill);
        (lo, hi - lo)
    }

    /// Top-surface height at `p` (assumes `p` is over the footprint).
    pub fn height_at(&self, p: Vec2) -> f64 {
        match self.height {
            HeightProfile::Constant(h) => h,
            HeightProfile::Ramp { h_low, h_high, downhill } => {
                let (start, run) = self.ramp_extent(downhill);
                let frac = ((p.dot(&downhill) - start) / run).clamp(0.0, 1.0);
                h_high - (h_high - h_low) * frac
            }
        }
    }

    pub fn max_height(&self) -> f64 {
        match self.height {
            HeightProfile::Constant(h) => h,
            HeightProfile::Ramp { h_high, .. } => h_high,
        }
    }

    /// Slope angle of the top surface and its downhill direction.
    pub fn slope(&self) -> (f64, Vec2) {
        match self.height {
            HeightProfile::Constant(_) => (0.0, Vec2::zeros()),
            HeightProfile::Ramp { h_low, h_high, downhill } => {
                let (_, run) = self.ramp_extent(downhill);
                (((h_high - h_low) / run).atan(), downhill)
            }
        }
    }

    pub fn is_ramp(&self) -> bool {
        matches!(self.height, HeightProfile::Ramp { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovableObject {
    pub id: String,
    pub half_extents: Vec3,
    pub mass: f64,
    pub friction: f64,
    pub initial_position: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotSpec {
    pub base_radius: f64,
    pub max_base_speed: f64,
    pub max_base_accel: f64,
    /// Max horizontal offset of the end effector from the base center.
    pub ee_reach: f64,
    pub ee_height_range: (f64, f64),
    pub ee_max_speed: f64,
    pub ee_max_yaw_rate: f64,
    /// Contact radius of the closed gripper when it pushes objects.
    pub ee_radius: f64,
    /// End-effector rest offset relative to the base.
    pub ee_home: Vec3,
    pub grasp_tolerance: f64,
    /// Max yaw misalignment between gripper and object faces for a grasp.
    pub grasp_yaw_tolerance: f64,
    pub success_tolerance: f64,
    pub yaw_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotInit {
    pub position: Vec2,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalSpec {
    pub robot_region: Rect,
    /// (object id, shape id): object must rest on the shape's top surface.
    pub object_on_surface: (String, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub horizon: f64,
    pub dt: f64,
    /// Clearance added on top of the base radius when planning base paths.
    pub astar_padding: f64,
    pub astar_cell: f64,
    /// Planning grid extent.
    pub workspace: Rect,
    pub controllers: ControllerGains,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub shapes: Vec<StaticShape>,
    pub objects: Vec<MovableObject>,
    pub robot: RobotSpec,
    pub robot_init: RobotInit,
    pub params: Vec<ParamSpec>,
    pub goal: GoalSpec,
    pub sim: SimSettings,
}

/// Result of a support query. `shape == None` means the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub z: f64,
    pub downhill: Vec2,
    pub slope: f64,
    pub shape: Option<usize>,
}

impl Support {
    pub const GROUND: Support =
        Support { z: 0.0, downhill: Vec2::new(0.0, 0.0), slope: 0.0, shape: None };

    pub fn is_ground(&self) -> bool {
        self.shape.is_none()
    }
}

impl Scenario {
    pub fn shape_index(&self, id: &str) -> Option<usize> {
        self.shapes.iter().position(|s| s.id == id)
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn param_spec(&self, id: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.id == id)
    }

    /// Inflation used by the base planner: base radius plus the extra padding.
    pub fn nav_inflation(&self) -> f64 {
        self.robot.base_radius + self.sim.astar_padding
    }

    /// Signed distance from `p` to the nearest navigation obstacle grown by
    /// `padding`. Infinite when the scenario has no navigation obstacles.
    pub fn sdf_nav(&self, p: Vec2, padding: f64) -> f64 {
        self.shapes
            .iter()
            .filter(|s| s.nav_obstacle)
            .map(|s| s.footprint.signed_distance(p) - padding)
            .fold(f64::INFINITY, f64::min)
    }

    /// Like [`Scenario::sdf_nav`] but also returns the outward gradient of
    /// the nearest obstacle.
    pub fn sdf_nav_gradient(&self, p: Vec2, padding: f64) -> (f64, Vec2) {
        let mut best = (f64::INFINITY, Vec2::zeros());
        for s in self.shapes.iter().filter(|s| s.nav_obstacle) {
            let (d, g) = s.footprint.signed_distance_and_gradient(p);
            if d - padding < best.0 {
                best = (d - padding, g);
            }
        }
        best
    }

    /// Highest top surface at or below `z_max` whose footprint contains `p`.
    pub fn support_query(&self, p: Vec2, z_max: f64) -> Support {
        let mut best = Support::GROUND;
        for (i, s) in self.shapes.iter().enumerate() {
            if !s.footprint.contains(p) {
                continue;
            }
            let h = s.height_at(p);
            if h <= z_max && (best.shape.is_none() || h > best.z) {
                let (slope, downhill) = s.slope();
                best = Support { z: h, downhill, slope, shape: Some(i) };
            }
        }
        best
    }

    /// Highest surface over `p` regardless of height, if any.
    pub fn top_surface(&self, p: Vec2) -> Option<(usize, f64)> {
        self.shapes
            .iter()
            .enumerate()
            .filter(|(_, s)| s.footprint.contains(p))
            .map(|(i, s)| (i, s.height_at(p)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Time budget per action when none is configured.
    pub fn default_action_budget(&self, plan_len: usize) -> f64 {
        self.sim.horizon / plan_len.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::ControllerGains;

    pub(crate) fn bare_scenario(shapes: Vec<StaticShape>) -> Scenario {
        Scenario {
            shapes,
            objects: vec![],
            robot: RobotSpec {
                base_radius: 0.2,
                max_base_speed: 1.0,
                max_base_accel: 1.5,
                ee_reach: 0.8,
                ee_height_range: (0.1, 1.4),
                ee_max_speed: 1.0,
                ee_max_yaw_rate: 1.5,
                ee_radius: 0.02,
                ee_home: Vec3::new(0.2, 0.0, 0.9),
                grasp_tolerance: 0.1,
                grasp_yaw_tolerance: 0.15,
                success_tolerance: 0.1,
                yaw_tolerance: 0.1,
            },
            robot_init: RobotInit { position: Vec2::new(-5.0, -5.0), heading: 0.0 },
            params: vec![],
            goal: GoalSpec {
                robot_region: Rect::from_center_size(Vec2::zeros(), Vec2::new(1.0, 1.0)),
                object_on_surface: ("cube".into(), "table".into()),
            },
            sim: SimSettings {
                horizon: 30.0,
                dt: 0.02,
                astar_padding: 0.2,
                astar_cell: 0.05,
                workspace: Rect { min: Vec2::new(-6.0, -6.0), max: Vec2::new(6.0, 6.0) },
                controllers: ControllerGains::default(),
            },
        }
    }

    fn unit_box(center: Vec2, h: f64) -> StaticShape {
        StaticShape {
            id: "box".into(),
            footprint: ConvexPolygon::rectangle(center, Vec2::new(1.0, 1.0)),
            height: HeightProfile::Constant(h),
            nav_obstacle: true,
        }
    }

    #[test]
    fn sdf_far_field() {
        let sc = bare_scenario(vec![unit_box(Vec2::zeros(), 0.8)]);
        let d = sc.sdf_nav(Vec2::new(10.5, 0.0), 0.2);
        assert!((d - 9.8).abs() < 1e-12);
    }

    #[test]
    fn sdf_interior_negative() {
        let sc = bare_scenario(vec![unit_box(Vec2::new(1.0, 1.0), 0.8)]);
        assert!(sc.sdf_nav(Vec2::new(1.0, 1.0), 0.2) < 0.0);
    }

    #[test]
    fn sdf_on_padded_boundary() {
        // edge at x = 0.5, padding 0.2 -> boundary at x = 0.7
        let sc = bare_scenario(vec![unit_box(Vec2::zeros(), 0.8)]);
        assert!(sc.sdf_nav(Vec2::new(0.7, 0.1), 0.2).abs() < 1e-9);
        // corner arc: distance sqrt(2)*0.2/sqrt(2) along the diagonal
        let c = 0.5 + 0.2 / 2f64.sqrt();
        assert!(sc.sdf_nav(Vec2::new(c, c), 0.2).abs() < 1e-9);
    }

    #[test]
    fn sdf_without_obstacles_is_infinite() {
        let sc = bare_scenario(vec![]);
        assert_eq!(sc.sdf_nav(Vec2::zeros(), 0.2), f64::INFINITY);
    }

    #[test]
    fn flat_support() {
        let sc = bare_scenario(vec![unit_box(Vec2::zeros(), 0.8)]);
        let s = sc.support_query(Vec2::new(0.1, 0.1), 1.0);
        assert_eq!(s.z, 0.8);
        assert_eq!(s.slope, 0.0);
        assert_eq!(s.downhill, Vec2::zeros());
        assert_eq!(s.shape, Some(0));
        // below the table top: the ground is the highest admissible surface
        assert!(sc.support_query(Vec2::new(0.1, 0.1), 0.5).is_ground());
    }

    #[test]
    fn ground_outside_footprints() {
        let sc = bare_scenario(vec![unit_box(Vec2::zeros(), 0.8)]);
        assert_eq!(sc.support_query(Vec2::new(3.0, 0.0), 1.0), Support::GROUND);
    }

    #[test]
    fn ramp_midpoint() {
        let ramp = StaticShape {
            id: "ramp".into(),
            footprint: ConvexPolygon::rectangle(Vec2::new(0.6, 0.0), Vec2::new(1.2, 1.0)),
            height: HeightProfile::Ramp { h_low: 0.2, h_high: 0.8, downhill: Vec2::new(1.0, 0.0) },
            nav_obstacle: true,
        };
        let sc = bare_scenario(vec![ramp]);
        let s = sc.support_query(Vec2::new(0.6, 0.3), 2.0);
        assert!((s.z - 0.5).abs() < 1e-12);
        assert!((s.slope - 0.5f64.atan()).abs() < 1e-12);
        assert_eq!(s.downhill, Vec2::new(1.0, 0.0));
    }
}
