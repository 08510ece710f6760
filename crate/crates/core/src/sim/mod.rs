//! Deterministic fixed-step 2.5D simulation and the rollout engine.
//!
//! The base is a disc moving in the plane with move-and-slide contact
//! against navigation obstacles. The end effector is a point with a yaw,
//! positioned relative to the base. Objects are axis-aligned boxes that rest
//! on, slide along, or fall between the top surfaces of shapes and other
//! objects.

mod rollout;
mod trace;

pub use rollout::{BindError, EndCost, Realization, RolloutResult};
pub use trace::{classify_ramp_descent, TraceObject, TraceRecord, TRACE_VERSION};

use std::f64::consts::FRAC_PI_2;

use crate::controllers::{ControllerCommand, GripperCommand};
use crate::geometry::{wrap_angle, Vec2, Vec3};
use crate::world::{Scenario, REST_TOLERANCE};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gripper {
    Open,
    Closed,
}

/// How an object is currently held up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportMode {
    Ground,
    Shape(usize),
    /// On top of another object.
    Object(usize),
    Falling,
    Attached,
}

impl SupportMode {
    pub fn is_resting(self) -> bool {
        matches!(self, SupportMode::Ground | SupportMode::Shape(_) | SupportMode::Object(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseState {
    pub pos: Vec2,
    pub heading: f64,
    pub vel: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeState {
    /// Horizontal offset from the base center; `z` is absolute height.
    pub offset: Vec3,
    /// Velocity relative to the base.
    pub vel: Vec3,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub gripper: Gripper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectState {
    pub pos: Vec3,
    pub vel: Vec3,
    pub support: SupportMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub t: usize,
    pub base: BaseState,
    pub ee: EeState,
    pub objects: Vec<ObjectState>,
    pub holding: Option<usize>,
}

impl WorldState {
    pub fn initial(sc: &Scenario) -> Self {
        let h = sc.robot_init.heading;
        let (sin, cos) = h.sin_cos();
        let home = sc.robot.ee_home;
        let offset = Vec3::new(cos * home.x - sin * home.y, sin * home.x + cos * home.y, home.z);
        let mut s = Self {
            t: 0,
            base: BaseState { pos: sc.robot_init.position, heading: h, vel: Vec2::zeros() },
            ee: EeState { offset, vel: Vec3::zeros(), yaw: h, yaw_rate: 0.0, gripper: Gripper::Open },
            objects: sc
                .objects
                .iter()
                .map(|o| ObjectState { pos: o.initial_position, vel: Vec3::zeros(), support: SupportMode::Falling })
                .collect(),
            holding: None,
        };
        // settle supports in declaration order so stacked objects find the
        // object below them
        for _ in 0..2 {
            for i in 0..s.objects.len() {
                let o = s.objects[i];
                let hz = sc.objects[i].half_extents.z;
                let surf = surface_below(sc, &s.objects, i, o.pos.xy(), o.pos.z - hz + REST_TOLERANCE);
                if o.pos.z - hz - surf.z <= REST_TOLERANCE {
                    s.objects[i].support = surf.mode;
                }
            }
        }
        s
    }

    pub fn ee_position(&self) -> Vec3 {
        Vec3::new(self.base.pos.x + self.ee.offset.x, self.base.pos.y + self.ee.offset.y, self.ee.offset.z)
    }

    pub fn ee_world_velocity(&self) -> Vec3 {
        self.ee.vel + Vec3::new(self.base.vel.x, self.base.vel.y, 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Surface {
    z: f64,
    mode: SupportMode,
    slope: f64,
    downhill: Vec2,
}

fn in_footprint(p: Vec2, center: Vec3, half: Vec3) -> bool {
    (p.x - center.x).abs() <= half.x && (p.y - center.y).abs() <= half.y
}

/// Highest support surface (shape top, resting object top, or ground) at
/// `p` not above `z_max`, ignoring object `skip`.
fn surface_below(sc: &Scenario, objects: &[ObjectState], skip: usize, p: Vec2, z_max: f64) -> Surface {
    let s = sc.support_query(p, z_max);
    let mut best = Surface {
        z: s.z,
        mode: s.shape.map_or(SupportMode::Ground, SupportMode::Shape),
        slope: s.slope,
        downhill: s.downhill,
    };
    for (j, o) in objects.iter().enumerate() {
        if j == skip || !o.support.is_resting() {
            continue;
        }
        let half = sc.objects[j].half_extents;
        let top = o.pos.z + half.z;
        if in_footprint(p, o.pos, half) && top <= z_max && top > best.z {
            best = Surface { z: top, mode: SupportMode::Object(j), slope: 0.0, downhill: Vec2::zeros() };
        }
    }
    best
}

/// Highest shape top over `p`, or 0 over open ground.
fn shape_top(sc: &Scenario, p: Vec2) -> f64 {
    sc.top_surface(p).map_or(0.0, |(_, h)| h.max(0.0))
}

/// Distance from the face directions of an axis-aligned box (multiples of
/// 90 degrees).
pub fn face_misalignment(yaw: f64) -> f64 {
    let m = yaw.rem_euclid(FRAC_PI_2);
    m.min(FRAC_PI_2 - m)
}

fn clamp_norm2(v: Vec2, max: f64) -> Vec2 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

fn clamp_norm3(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

fn step_base(s: &mut WorldState, cmd: &ControllerCommand, sc: &Scenario, dt: f64) {
    let r = &sc.robot;
    let a = clamp_norm2(cmd.base_accel, r.max_base_accel);
    let mut v = clamp_norm2(s.base.vel + a * dt, r.max_base_speed);
    let mut p = s.base.pos + v * dt;
    // move and slide: project out of obstacles, drop the inward velocity
    for _ in 0..4 {
        let (d, n) = sc.sdf_nav_gradient(p, r.base_radius);
        if d >= 0.0 {
            break;
        }
        p += n * (-d);
        let vn = v.dot(&n);
        if vn < 0.0 {
            v -= n * vn;
        }
    }
    if v.norm() > 1e-3 {
        s.base.heading = v.y.atan2(v.x);
    }
    s.base.pos = p;
    s.base.vel = v;
}

fn step_ee(s: &mut WorldState, cmd: &ControllerCommand, sc: &Scenario, dt: f64) {
    let r = &sc.robot;
    s.ee.yaw_rate = cmd.ee_yaw_rate.clamp(-r.ee_max_yaw_rate, r.ee_max_yaw_rate);
    s.ee.yaw = wrap_angle(s.ee.yaw + s.ee.yaw_rate * dt);
    let mut vel = clamp_norm3(cmd.ee_velocity, r.ee_max_speed);
    let mut off = s.ee.offset + vel * dt;
    let h = off.xy();
    let hn = h.norm();
    if hn > r.ee_reach {
        let radial = h / hn;
        off.x = radial.x * r.ee_reach;
        off.y = radial.y * r.ee_reach;
        let out = vel.xy().dot(&radial);
        if out > 0.0 {
            vel.x -= radial.x * out;
            vel.y -= radial.y * out;
        }
    }
    let held = s.holding.map_or(0.0, |i| sc.objects[i].half_extents.z);
    let floor = shape_top(sc, s.base.pos + off.xy()) + held;
    let lo = r.ee_height_range.0.max(floor);
    let z = off.z.min(r.ee_height_range.1).max(lo);
    if z != off.z {
        vel.z = 0.0;
    }
    off.z = z;
    s.ee.offset = off;
    s.ee.vel = vel;
}

fn step_gripper(s: &mut WorldState, cmd: &ControllerCommand, sc: &Scenario) {
    match (cmd.gripper, s.ee.gripper) {
        (GripperCommand::Close, Gripper::Open) => {
            s.ee.gripper = Gripper::Closed;
            if face_misalignment(s.ee.yaw) > sc.robot.grasp_yaw_tolerance {
                return;
            }
            let ee = s.ee_position();
            let pick = s
                .objects
                .iter()
                .enumerate()
                .map(|(i, o)| (i, (o.pos - ee).norm()))
                .filter(|&(_, d)| d <= sc.robot.grasp_tolerance)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((i, _)) = pick {
                s.holding = Some(i);
                s.objects[i].support = SupportMode::Attached;
                s.objects[i].pos = ee;
                s.objects[i].vel = s.ee_world_velocity();
            }
        }
        (GripperCommand::Open, Gripper::Closed) => {
            s.ee.gripper = Gripper::Open;
            if let Some(i) = s.holding.take() {
                s.objects[i].support = SupportMode::Falling;
                s.objects[i].vel = s.ee_world_velocity();
            }
        }
        _ => {}
    }
}

/// Horizontal distance from `p` to an axis-aligned rectangle.
fn rect_distance(p: Vec2, center: Vec2, half: Vec2) -> f64 {
    let d = (p - center).abs() - half;
    Vec2::new(d.x.max(0.0), d.y.max(0.0)).norm()
}

/// A closed gripper shoves resting objects it overlaps out of the way along
/// its direction of travel. Returns which objects were moved.
fn push_objects(s: &mut WorldState, sc: &Scenario) -> Vec<bool> {
    let mut pushed = vec![false; s.objects.len()];
    let ee = s.ee_position();
    let r = sc.robot.ee_radius;
    let v = s.ee_world_velocity();
    for (i, o) in s.objects.iter_mut().enumerate() {
        if !o.support.is_resting() {
            continue;
        }
        let half = sc.objects[i].half_extents;
        let vertical = ee.z + r > o.pos.z - half.z && ee.z - r < o.pos.z + half.z;
        if !vertical || rect_distance(ee.xy(), o.pos.xy(), half.xy()) >= r {
            continue;
        }
        let vh = v.xy();
        let dir = if vh.norm() > 1e-9 {
            vh.normalize()
        } else {
            let away = o.pos.xy() - ee.xy();
            if away.norm() > 1e-12 {
                away.normalize()
            } else {
                Vec2::x()
            }
        };
        // smallest shift along dir that clears the contact
        let (mut lo, mut hi) = (0.0, r + half.xy().norm() + (o.pos.xy() - ee.xy()).norm());
        for _ in 0..48 {
            let mid = 0.5 * (lo + hi);
            if rect_distance(ee.xy(), o.pos.xy() + dir * mid, half.xy()) >= r {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let new_xy = o.pos.xy() + dir * hi;
        if shape_top(sc, new_xy) > o.pos.z - half.z + REST_TOLERANCE {
            o.vel = Vec3::zeros();
            continue;
        }
        o.pos.x = new_xy.x;
        o.pos.y = new_xy.y;
        let along = vh.dot(&dir).max(0.0);
        o.vel = Vec3::new(dir.x * along, dir.y * along, 0.0);
        pushed[i] = true;
    }
    pushed
}

fn step_object(s: &mut WorldState, sc: &Scenario, i: usize, pushed: bool, dt: f64) {
    let spec = &sc.objects[i];
    let hz = spec.half_extents.z;
    let o = s.objects[i];
    let bottom = o.pos.z - hz;
    let g = GRAVITY;

    if o.support == SupportMode::Falling {
        let mut v = o.vel - Vec3::new(0.0, 0.0, g * dt);
        let dp = o.vel * dt - Vec3::new(0.0, 0.0, 0.5 * g * dt * dt);
        let mut xy = o.pos.xy() + dp.xy();
        if shape_top(sc, xy) > bottom + REST_TOLERANCE {
            // hit the side of a taller shape
            xy = o.pos.xy();
            v.x = 0.0;
            v.y = 0.0;
        }
        let z = o.pos.z + dp.z;
        let surf = surface_below(sc, &s.objects, i, xy, bottom + REST_TOLERANCE);
        let obj = &mut s.objects[i];
        if z - hz <= surf.z {
            obj.pos = Vec3::new(xy.x, xy.y, surf.z + hz);
            obj.vel = Vec3::zeros();
            obj.support = surf.mode;
        } else {
            obj.pos = Vec3::new(xy.x, xy.y, z);
            obj.vel = v;
        }
        return;
    }

    let here = surface_below(sc, &s.objects, i, o.pos.xy(), bottom + REST_TOLERANCE);
    if bottom - here.z > REST_TOLERANCE {
        s.objects[i].support = SupportMode::Falling;
        return;
    }
    let (sin, cos) = here.slope.sin_cos();
    let d = here.downhill;
    let u = Vec3::new(d.x * cos, d.y * cos, -sin);
    let n = Vec3::new(d.x * sin, d.y * sin, cos);
    let v = o.vel - n * o.vel.dot(&n);
    let (v_new, dp) = if pushed {
        (v, Vec3::zeros())
    } else {
        let trial = v + u * (g * sin * dt);
        let friction = spec.friction * g * cos * dt;
        let tn = trial.norm();
        let v_new = if tn <= friction { Vec3::zeros() } else { trial * (1.0 - friction / tn) };
        // exact for constant acceleration within the step
        (v_new, (v + v_new) * (0.5 * dt))
    };
    if dp == Vec3::zeros() {
        s.objects[i].vel = v_new;
        s.objects[i].support = here.mode;
        return;
    }
    let xy = o.pos.xy() + dp.xy();
    let bottom_new = bottom + dp.z;
    // a step may overshoot the end of a slope by a fraction of dt; surfaces
    // no higher than where the object started are still reachable
    let reach = bottom.max(bottom_new) + REST_TOLERANCE;
    if shape_top(sc, xy) > reach {
        s.objects[i].vel = Vec3::zeros();
        return;
    }
    let surf = surface_below(sc, &s.objects, i, xy, reach);
    let obj = &mut s.objects[i];
    obj.vel = v_new;
    if surf.z >= bottom_new - REST_TOLERANCE {
        obj.pos = Vec3::new(xy.x, xy.y, surf.z + hz);
        obj.support = surf.mode;
    } else {
        obj.pos = Vec3::new(xy.x, xy.y, bottom_new + hz);
        obj.support = SupportMode::Falling;
    }
}

/// Advances the world by one step of `dt` under `cmd`.
pub fn step(state: &WorldState, cmd: &ControllerCommand, sc: &Scenario, dt: f64) -> WorldState {
    let mut s = state.clone();
    s.t += 1;
    step_base(&mut s, cmd, sc, dt);
    step_ee(&mut s, cmd, sc, dt);
    step_gripper(&mut s, cmd, sc);
    if let Some(h) = s.holding {
        s.objects[h].pos = s.ee_position();
        s.objects[h].vel = s.ee_world_velocity();
    }
    let pushed = if s.ee.gripper == Gripper::Closed { push_objects(&mut s, sc) } else { vec![false; s.objects.len()] };
    for (i, &was_pushed) in pushed.iter().enumerate() {
        if s.objects[i].support != SupportMode::Attached {
            step_object(&mut s, sc, i, was_pushed, dt);
        }
    }
    assert!(
        s.base.pos.iter().chain(s.ee.offset.iter()).chain(s.objects.iter().flat_map(|o| o.pos.iter())).all(|x| x.is_finite()),
        "non-finite state at step {}",
        s.t
    );
    s
}
