mod common;

use common::domain_problem;
use realize_core::symbolic::{ground, plan, validate_plan, ControllerId};

fn names(p: &realize_core::SymbolicPlan) -> Vec<String> {
    p.actions.iter().map(|a| a.to_string()).collect()
}

#[test]
fn pick_and_place_domain_has_three_schemas() {
    let (d, _) = domain_problem("pick_and_place");
    let mut schemas: Vec<&str> = d.actions.iter().map(|a| a.name.as_str()).collect();
    schemas.sort();
    assert_eq!(schemas, ["grasp", "moveTo", "place"]);
}

#[test]
fn pick_and_place_grounding_contains_the_plan_actions() {
    let (d, p) = domain_problem("pick_and_place");
    let g = ground(&d, &p);
    let shown: Vec<String> = g.iter().map(|a| a.to_string()).collect();
    for want in ["moveTo(Table_1)", "grasp(Cube)", "moveTo(Table_2)", "place(Target)", "moveTo(Exit)"] {
        assert!(shown.iter().any(|s| s == want), "missing {want}");
    }
}

#[test]
fn pick_and_place_plan_is_the_five_step_sequence() {
    let (d, p) = domain_problem("pick_and_place");
    let pl = plan(&d, &p).unwrap();
    assert_eq!(names(&pl), ["moveTo(Table_1)", "grasp(Cube)", "moveTo(Table_2)", "place(Target)", "moveTo(Exit)"]);
    let controllers: Vec<ControllerId> = pl.actions.iter().map(|a| a.controller).collect();
    use ControllerId::*;
    assert_eq!(controllers, [AStarTrack, FabricReach, AStarTrack, FabricRelease, AStarTrack]);
    validate_plan(&p, &pl).unwrap();
}

#[test]
fn push_plan() {
    let (d, p) = domain_problem("push");
    let pl = plan(&d, &p).unwrap();
    assert_eq!(names(&pl), ["moveTo(rod_loc)", "push(rod_pose)"]);
    validate_plan(&p, &pl).unwrap();
}

#[test]
fn planning_is_deterministic() {
    let (d, p) = domain_problem("pick_and_place");
    let a = plan(&d, &p).unwrap();
    for _ in 0..5 {
        assert_eq!(plan(&d, &p).unwrap(), a);
    }
}
