#![allow(dead_code)]

use std::path::PathBuf;

use realize_core::symbolic::{parse_domain, parse_problem, plan, Domain, Problem};
use realize_core::{load_scenario, Realization, Scenario, SymbolicPlan};

pub fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(asset(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn scenario(name: &str) -> Scenario {
    load_scenario(&read(&format!("scenarios/{name}.json"))).unwrap()
}

pub fn domain_problem(stem: &str) -> (Domain, Problem) {
    let d = parse_domain(&read(&format!("pddl/{stem}_domain.pddl"))).unwrap();
    let p = parse_problem(&d, &read(&format!("pddl/{stem}_problem.pddl"))).unwrap();
    (d, p)
}

pub fn pick_and_place(scenario_name: &str) -> Realization {
    let (d, p) = domain_problem("pick_and_place");
    let pl: SymbolicPlan = plan(&d, &p).unwrap();
    Realization::new(scenario(scenario_name), &p, pl).unwrap()
}

pub fn push() -> Realization {
    let (d, p) = domain_problem("push");
    let pl = plan(&d, &p).unwrap();
    Realization::new(scenario("push"), &p, pl).unwrap()
}

/// Ramp-mode realization: approach Table_2 from the south and drop the cube
/// on the upper part of the ramp.
pub const RAMP_MODE: [f64; 11] = [-1.5, -1.2, 0.0, 0.0, 0.8, 0.0, 1.75, 0.9, 0.0, 1.8, -0.2];

/// Around-obstacle realization: place from the north side of Table_2.
pub const NORTH_MODE: [f64; 11] = [-1.5, -1.2, 0.0, 0.0, 3.6, 0.0, 2.3, 0.9, 0.0, 1.8, -0.2];

pub const PUSH_OK: [f64; 6] = [0.8, -1.0, 0.8, 0.05, 0.53, 0.0];

/// Empty floor, one far-away non-navigation table for the goal.
pub fn open_world() -> Scenario {
    load_scenario(
        r#"{
  "shapes": [{"id": "table", "footprint": [[4.0, 4.0], [4.5, 4.0], [4.5, 4.5], [4.0, 4.5]],
              "height": {"constant": 0.5}, "nav_obstacle": false}],
  "objects": [{"id": "cube", "half_extents": [0.05, 0.05, 0.05], "mass": 0.2, "friction": 0.3,
               "position": [4.25, 4.25, 0.55]}],
  "robot": {
    "base_radius": 0.25, "max_base_speed": 1.0, "max_base_accel": 1.5,
    "ee_reach": 0.8, "ee_height_range": [0.2, 1.4], "ee_max_speed": 1.0,
    "ee_max_yaw_rate": 2.0, "ee_radius": 0.02, "ee_home": [0.2, 0.0, 0.9],
    "grasp_tolerance": 0.05, "grasp_yaw_tolerance": 0.1,
    "success_tolerance": 0.1, "yaw_tolerance": 0.1,
    "init": {"position": [0.0, 0.0], "heading": 0.0}
  },
  "params": [],
  "goal": {"robot_region": {"min": [-1.0, -1.0], "max": [1.0, 1.0]},
           "object_on_surface": {"object": "cube", "shape": "table"}},
  "sim": {"horizon": 30.0, "dt": 0.02, "astar_padding": 0.2, "astar_cell": 0.1,
          "workspace": {"min": [-5.0, -5.0], "max": [5.0, 5.0]},
          "controllers": {"kp": 2.0, "kd": 2.8284271247461903, "ki": 0.0, "gamma": 4.0, "damping": 6.0,
                          "eta": 2.0, "d_safe": 0.1,
                          "budgets": {"move_to": null, "grasp": null, "place": null, "push": null}}}
}"#,
    )
    .unwrap()
}
