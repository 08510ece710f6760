use serde::{Deserialize, Serialize};

use super::{Gripper, SupportMode, WorldState};
use crate::world::Scenario;

/// Schema version written in every record.
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceObject {
    pub id: String,
    pub pos: [f64; 3],
    pub vel: [f64; 3],
    /// `ground`, `shape:<id>`, `object:<id>`, `falling` or `attached`.
    pub support: String,
}

/// One downsampled simulation state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub v: u32,
    pub t: usize,
    pub time: f64,
    /// Index of the action being executed, `None` after the plan ended.
    pub active_action: Option<usize>,
    pub base: [f64; 2],
    pub heading: f64,
    pub base_vel: [f64; 2],
    pub ee: [f64; 3],
    pub ee_yaw: f64,
    pub gripper: String,
    pub objects: Vec<TraceObject>,
}

fn support_name(sc: &Scenario, m: SupportMode) -> String {
    match m {
        SupportMode::Ground => "ground".into(),
        SupportMode::Shape(i) => format!("shape:{}", sc.shapes[i].id),
        SupportMode::Object(i) => format!("object:{}", sc.objects[i].id),
        SupportMode::Falling => "falling".into(),
        SupportMode::Attached => "attached".into(),
    }
}

impl TraceRecord {
    pub fn capture(s: &WorldState, sc: &Scenario, active_action: Option<usize>) -> Self {
        let ee = s.ee_position();
        Self {
            v: TRACE_VERSION,
            t: s.t,
            time: s.t as f64 * sc.sim.dt,
            active_action,
            base: [s.base.pos.x, s.base.pos.y],
            heading: s.base.heading,
            base_vel: [s.base.vel.x, s.base.vel.y],
            ee: [ee.x, ee.y, ee.z],
            ee_yaw: s.ee.yaw,
            gripper: match s.ee.gripper {
                Gripper::Open => "open".into(),
                Gripper::Closed => "closed".into(),
            },
            objects: s
                .objects
                .iter()
                .zip(&sc.objects)
                .map(|(o, spec)| TraceObject {
                    id: spec.id.clone(),
                    pos: [o.pos.x, o.pos.y, o.pos.z],
                    vel: [o.vel.x, o.vel.y, o.vel.z],
                    support: support_name(sc, o.support),
                })
                .collect(),
        }
    }
}

/// True if `object` slid down a ramp on its own: consecutive records where
/// it rests on a ramp shape show a net descent and never a rise.
pub fn classify_ramp_descent(trace: &[TraceRecord], sc: &Scenario, object: &str) -> bool {
    let ramps: Vec<String> = sc.shapes.iter().filter(|s| s.is_ramp()).map(|s| format!("shape:{}", s.id)).collect();
    let on_ramp = |r: &TraceRecord| r.objects.iter().find(|o| o.id == object).filter(|o| ramps.contains(&o.support)).map(|o| o.pos[2]);
    let mut descended = false;
    for w in trace.windows(2) {
        if let (Some(a), Some(b)) = (on_ramp(&w[0]), on_ramp(&w[1])) {
            if b > a + 1e-9 {
                return false;
            }
            descended |= b < a - 1e-6;
        }
    }
    descended
}
