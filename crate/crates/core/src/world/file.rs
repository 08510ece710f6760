//! Scenario file format (JSON). See `docs/scenario.md` for the schema.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::*;
use crate::controllers::{ActionBudgets, ControllerGains};
use crate::geometry::{ConvexPolygon, Rect, Vec2, Vec3};
use crate::params::{ParamKind, ParamSpec};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario: {field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    shapes: Vec<ShapeFile>,
    objects: Vec<ObjectFile>,
    robot: RobotFile,
    params: Vec<ParamFile>,
    goal: GoalFile,
    sim: SimFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShapeFile {
    id: String,
    footprint: Vec<[f64; 2]>,
    height: HeightFile,
    nav_obstacle: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum HeightFile {
    Constant(f64),
    Ramp { h_low: f64, h_high: f64, downhill: [f64; 2] },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectFile {
    id: String,
    half_extents: [f64; 3],
    mass: f64,
    friction: f64,
    position: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotFile {
    base_radius: f64,
    max_base_speed: f64,
    max_base_accel: f64,
    ee_reach: f64,
    ee_height_range: [f64; 2],
    ee_max_speed: f64,
    ee_max_yaw_rate: f64,
    ee_radius: f64,
    ee_home: [f64; 3],
    grasp_tolerance: f64,
    grasp_yaw_tolerance: f64,
    success_tolerance: f64,
    yaw_tolerance: f64,
    init: RobotInitFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotInitFile {
    position: [f64; 2],
    heading: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamFile {
    id: String,
    kind: ParamKindFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ParamKindFile {
    Annulus { center: [f64; 2], r: f64, #[serde(rename = "R")] r_outer: f64 },
    Rect2 { center: [f64; 2], size: [f64; 2] },
    Box3Yaw { center: [f64; 3], size: [f64; 3], yaw_halfwidth: f64 },
    Yaw { center: f64, halfwidth: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RectFile {
    min: [f64; 2],
    max: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalFile {
    robot_region: RectFile,
    object_on_surface: ObjectOnSurfaceFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectOnSurfaceFile {
    object: String,
    shape: String,
}

fn default_cell() -> f64 {
    0.05
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimFile {
    horizon: f64,
    dt: f64,
    astar_padding: f64,
    #[serde(default = "default_cell")]
    astar_cell: f64,
    workspace: RectFile,
    controllers: ControllersFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllersFile {
    kp: f64,
    kd: f64,
    ki: f64,
    gamma: f64,
    damping: f64,
    eta: f64,
    d_safe: f64,
    budgets: BudgetsFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetsFile {
    move_to: Option<f64>,
    grasp: Option<f64>,
    place: Option<f64>,
    push: Option<f64>,
}

fn v2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn rect(r: &RectFile) -> Rect {
    Rect { min: v2(r.min), max: v2(r.max) }
}

fn rect_file(r: &Rect) -> RectFile {
    RectFile { min: [r.min.x, r.min.y], max: [r.max.x, r.max.y] }
}

/// Parses and validates a scenario file.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let scenario = from_file(file)?;
    validate(&scenario)?;
    Ok(scenario)
}

fn from_file(f: ScenarioFile) -> Result<Scenario, ScenarioError> {
    let mut shapes = Vec::with_capacity(f.shapes.len());
    for s in f.shapes {
        let footprint = ConvexPolygon::new(s.footprint.iter().copied().map(v2).collect())
            .map_err(|e| invalid(format!("shapes.{}.footprint", s.id), e.to_string()))?;
        let height = match s.height {
            HeightFile::Constant(h) => HeightProfile::Constant(h),
            HeightFile::Ramp { h_low, h_high, downhill } => {
                let d = v2(downhill);
                if (d.norm() - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("shapes.{}.height.downhill", s.id), "must be a unit vector"));
                }
                HeightProfile::Ramp { h_low, h_high, downhill: d }
            }
        };
        shapes.push(StaticShape { id: s.id, footprint, height, nav_obstacle: s.nav_obstacle });
    }
    let objects = f
        .objects
        .into_iter()
        .map(|o| MovableObject {
            id: o.id,
            half_extents: v3(o.half_extents),
            mass: o.mass,
            friction: o.friction,
            initial_position: v3(o.position),
        })
        .collect();
    let r = f.robot;
    let robot = RobotSpec {
        base_radius: r.base_radius,
        max_base_speed: r.max_base_speed,
        max_base_accel: r.max_base_accel,
        ee_reach: r.ee_reach,
        ee_height_range: (r.ee_height_range[0], r.ee_height_range[1]),
        ee_max_speed: r.ee_max_speed,
        ee_max_yaw_rate: r.ee_max_yaw_rate,
        ee_radius: r.ee_radius,
        ee_home: v3(r.ee_home),
        grasp_tolerance: r.grasp_tolerance,
        grasp_yaw_tolerance: r.grasp_yaw_tolerance,
        success_tolerance: r.success_tolerance,
        yaw_tolerance: r.yaw_tolerance,
    };
    let robot_init = RobotInit { position: v2(r.init.position), heading: r.init.heading };
    let params = f
        .params
        .into_iter()
        .map(|p| ParamSpec {
            id: p.id,
            kind: match p.kind {
                ParamKindFile::Annulus { center, r, r_outer } => {
                    ParamKind::Annulus { center: v2(center), r_inner: r, r_outer }
                }
                ParamKindFile::Rect2 { center, size } => ParamKind::Rect2 { center: v2(center), size: v2(size) },
                ParamKindFile::Box3Yaw { center, size, yaw_halfwidth } => {
                    ParamKind::Box3Yaw { center: v3(center), size: v3(size), yaw_halfwidth }
                }
                ParamKindFile::Yaw { center, halfwidth } => ParamKind::Yaw { center, halfwidth },
            },
        })
        .collect();
    let goal = GoalSpec {
        robot_region: rect(&f.goal.robot_region),
        object_on_surface: (f.goal.object_on_surface.object, f.goal.object_on_surface.shape),
    };
    let c = f.sim.controllers;
    let sim = SimSettings {
        horizon: f.sim.horizon,
        dt: f.sim.dt,
        astar_padding: f.sim.astar_padding,
        astar_cell: f.sim.astar_cell,
        workspace: rect(&f.sim.workspace),
        controllers: ControllerGains {
            kp: c.kp,
            kd: c.kd,
            ki: c.ki,
            gamma: c.gamma,
            damping: c.damping,
            eta: c.eta,
            d_safe: c.d_safe,
            budgets: ActionBudgets {
                move_to: c.budgets.move_to,
                grasp: c.budgets.grasp,
                place: c.budgets.place,
                push: c.budgets.push,
            },
        },
    };
    Ok(Scenario { shapes, objects, robot, robot_init, params, goal, sim })
}

fn validate(s: &Scenario) -> Result<(), ScenarioError> {
    let mut ids = std::collections::BTreeSet::new();
    for sh in &s.shapes {
        if !ids.insert(sh.id.as_str()) {
            return Err(invalid("shapes", format!("duplicate shape id {}", sh.id)));
        }
        match sh.height {
            HeightProfile::Constant(h) if h < 0.0 => {
                return Err(invalid(format!("shapes.{}.height", sh.id), "height must be non-negative"))
            }
            HeightProfile::Ramp { h_low, h_high, .. } if !(0.0 <= h_low && h_low < h_high) => {
                return Err(invalid(format!("shapes.{}.height", sh.id), "ramp needs 0 <= h_low < h_high"))
            }
            _ => {}
        }
    }
    let mut ids = std::collections::BTreeSet::new();
    for o in &s.objects {
        if !ids.insert(o.id.as_str()) {
            return Err(invalid("objects", format!("duplicate object id {}", o.id)));
        }
        let field = format!("objects.{}", o.id);
        if !(o.half_extents.iter().all(|h| *h > 0.0)) {
            return Err(invalid(field, "half_extents must be positive"));
        }
        if !(o.mass > 0.0) {
            return Err(invalid(field, "mass must be positive"));
        }
        if !(o.friction >= 0.0) {
            return Err(invalid(field, "friction must be non-negative"));
        }
    }
    let r = &s.robot;
    let positives = [
        ("base_radius", r.base_radius),
        ("max_base_speed", r.max_base_speed),
        ("max_base_accel", r.max_base_accel),
        ("ee_reach", r.ee_reach),
        ("ee_max_speed", r.ee_max_speed),
        ("ee_max_yaw_rate", r.ee_max_yaw_rate),
        ("ee_radius", r.ee_radius),
        ("grasp_tolerance", r.grasp_tolerance),
        ("grasp_yaw_tolerance", r.grasp_yaw_tolerance),
        ("success_tolerance", r.success_tolerance),
        ("yaw_tolerance", r.yaw_tolerance),
    ];
    for (name, v) in positives {
        if !(v > 0.0) {
            return Err(invalid(format!("robot.{name}"), "must be positive"));
        }
    }
    if !(r.ee_height_range.0 < r.ee_height_range.1) {
        return Err(invalid("robot.ee_height_range", "must be a nonempty interval"));
    }
    let mut ids = std::collections::BTreeSet::new();
    for p in &s.params {
        if !ids.insert(p.id.as_str()) {
            return Err(invalid("params", format!("duplicate param id {}", p.id)));
        }
        p.kind.validate().map_err(|m| invalid(format!("params.{}", p.id), m))?;
    }
    if !(s.goal.robot_region.area() > 0.0) {
        return Err(invalid("goal.robot_region", "rectangle must have positive area"));
    }
    let (obj, shape) = &s.goal.object_on_surface;
    if s.object_index(obj).is_none() {
        return Err(invalid("goal.object_on_surface.object", format!("unknown object {obj}")));
    }
    if s.shape_index(shape).is_none() {
        return Err(invalid("goal.object_on_surface.shape", format!("unknown shape {shape}")));
    }
    let sim = &s.sim;
    if !(sim.horizon > 0.0) {
        return Err(invalid("sim.horizon", "must be positive"));
    }
    if !(sim.dt > 0.0 && sim.dt <= 0.05) {
        return Err(invalid("sim.dt", "must lie in (0, 0.05] s"));
    }
    if !(sim.astar_padding >= 0.0) {
        return Err(invalid("sim.astar_padding", "must be non-negative"));
    }
    if !(sim.astar_cell > 0.0) {
        return Err(invalid("sim.astar_cell", "must be positive"));
    }
    if !(sim.workspace.area() > 0.0) {
        return Err(invalid("sim.workspace", "rectangle must have positive area"));
    }
    let c = &sim.controllers;
    for (name, v) in [("kp", c.kp), ("gamma", c.gamma), ("d_safe", c.d_safe)] {
        if !(v > 0.0) {
            return Err(invalid(format!("sim.controllers.{name}"), "must be positive"));
        }
    }
    for (name, v) in [("kd", c.kd), ("ki", c.ki), ("damping", c.damping), ("eta", c.eta)] {
        if !(v >= 0.0) {
            return Err(invalid(format!("sim.controllers.{name}"), "must be non-negative"));
        }
    }
    let b = &c.budgets;
    for (name, v) in [("move_to", b.move_to), ("grasp", b.grasp), ("place", b.place), ("push", b.push)] {
        if let Some(v) = v {
            if !(v > 0.0) {
                return Err(invalid(format!("sim.controllers.budgets.{name}"), "must be positive"));
            }
        }
    }
    if s.sdf_nav(s.robot_init.position, s.nav_inflation()) <= 0.0 {
        return Err(invalid("robot.init", "start position collides with padded obstacles"));
    }
    if !sim.workspace.contains(s.robot_init.position) {
        return Err(invalid("robot.init", "start position outside workspace"));
    }
    Ok(())
}

/// Serializes a scenario back into the file format.
pub fn scenario_to_string(s: &Scenario) -> String {
    let file = ScenarioFile {
        shapes: s
            .shapes
            .iter()
            .map(|sh| ShapeFile {
                id: sh.id.clone(),
                footprint: sh.footprint.vertices().iter().map(|v| [v.x, v.y]).collect(),
                height: match sh.height {
                    HeightProfile::Constant(h) => HeightFile::Constant(h),
                    HeightProfile::Ramp { h_low, h_high, downhill } => {
                        HeightFile::Ramp { h_low, h_high, downhill: [downhill.x, downhill.y] }
                    }
                },
                nav_obstacle: sh.nav_obstacle,
            })
            .collect(),
        objects: s
            .objects
            .iter()
            .map(|o| ObjectFile {
                id: o.id.clone(),
                half_extents: o.half_extents.into(),
                mass: o.mass,
                friction: o.friction,
                position: o.initial_position.into(),
            })
            .collect(),
        robot: RobotFile {
            base_radius: s.robot.base_radius,
            max_base_speed: s.robot.max_base_speed,
            max_base_accel: s.robot.max_base_accel,
            ee_reach: s.robot.ee_reach,
            ee_height_range: [s.robot.ee_height_range.0, s.robot.ee_height_range.1],
            ee_max_speed: s.robot.ee_max_speed,
            ee_max_yaw_rate: s.robot.ee_max_yaw_rate,
            ee_radius: s.robot.ee_radius,
            ee_home: s.robot.ee_home.into(),
            grasp_tolerance: s.robot.grasp_tolerance,
            grasp_yaw_tolerance: s.robot.grasp_yaw_tolerance,
            success_tolerance: s.robot.success_tolerance,
            yaw_tolerance: s.robot.yaw_tolerance,
            init: RobotInitFile {
                position: [s.robot_init.position.x, s.robot_init.position.y],
                heading: s.robot_init.heading,
            },
        },
        params: s
            .params
            .iter()
            .map(|p| ParamFile {
                id: p.id.clone(),
                kind: match p.kind {
                    ParamKind::Annulus { center, r_inner, r_outer } => {
                        ParamKindFile::Annulus { center: [center.x, center.y], r: r_inner, r_outer }
                    }
                    ParamKind::Rect2 { center, size } => {
                        ParamKindFile::Rect2 { center: [center.x, center.y], size: [size.x, size.y] }
                    }
                    ParamKind::Box3Yaw { center, size, yaw_halfwidth } => {
                        ParamKindFile::Box3Yaw { center: center.into(), size: size.into(), yaw_halfwidth }
                    }
                    ParamKind::Yaw { center, halfwidth } => ParamKindFile::Yaw { center, halfwidth },
                },
            })
            .collect(),
        goal: GoalFile {
            robot_region: rect_file(&s.goal.robot_region),
            object_on_surface: ObjectOnSurfaceFile {
                object: s.goal.object_on_surface.0.clone(),
                shape: s.goal.object_on_surface.1.clone(),
            },
        },
        sim: SimFile {
            horizon: s.sim.horizon,
            dt: s.sim.dt,
            astar_padding: s.sim.astar_padding,
            astar_cell: s.sim.astar_cell,
            workspace: rect_file(&s.sim.workspace),
            controllers: ControllersFile {
                kp: s.sim.controllers.kp,
                kd: s.sim.controllers.kd,
                ki: s.sim.controllers.ki,
                gamma: s.sim.controllers.gamma,
                damping: s.sim.controllers.damping,
                eta: s.sim.controllers.eta,
                d_safe: s.sim.controllers.d_safe,
                budgets: BudgetsFile {
                    move_to: s.sim.controllers.budgets.move_to,
                    grasp: s.sim.controllers.budgets.grasp,
                    place: s.sim.controllers.budgets.place,
                    push: s.sim.controllers.budgets.push,
                },
            },
        },
    };
    serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
}
