//! Fixtures shared by the benchmarks in `benches/`.

use std::path::PathBuf;

use realize_core::symbolic::{parse_domain, parse_problem, plan, Domain, Problem};
use realize_core::{load_scenario, Realization, Scenario};

pub fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(rel)
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(asset(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn scenario(name: &str) -> Scenario {
    load_scenario(&read(&format!("scenarios/{name}.json"))).expect("shipped scenario loads")
}

pub fn domain_problem(stem: &str) -> (Domain, Problem) {
    let d = parse_domain(&read(&format!("pddl/{stem}_domain.pddl"))).expect("domain parses");
    let p = parse_problem(&d, &read(&format!("pddl/{stem}_problem.pddl"))).expect("problem parses");
    (d, p)
}

pub fn pick_and_place(scenario_name: &str) -> Realization {
    let (d, p) = domain_problem("pick_and_place");
    let pl = plan(&d, &p).expect("plan exists");
    Realization::new(scenario(scenario_name), &p, pl).expect("plan binds")
}

/// Drops the cube on the upper part of the ramp, approaching from the south.
pub const RAMP_MODE: [f64; 11] = [-1.5, -1.2, 0.0, 0.0, 0.8, 0.0, 1.75, 0.9, 0.0, 1.8, -0.2];
