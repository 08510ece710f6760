mod common;

use common::{pick_and_place, push, NORTH_MODE, PUSH_OK, RAMP_MODE};
use realize_core::controllers::ActionFailure;
use realize_core::params::{derive_seed, sample_rng, DistributionState};
use realize_core::sim::classify_ramp_descent;
use realize_core::Realization;

fn vector(r: &Realization, v: &[f64]) -> realize_core::ParamVector {
    r.space.vector(v.to_vec())
}

#[test]
fn ramp_mode_realization_slides_the_cube() {
    let r = pick_and_place("ramp");
    let res = r.rollout_traced(&vector(&r, &RAMP_MODE), 0, 1);
    assert!(res.all_actions_ok && res.goal_ok, "{:?}", res.failure);
    let trace = res.trace.as_ref().unwrap();
    assert!(classify_ramp_descent(trace, &r.scenario, "Cube"));
    let last = trace.last().unwrap();
    assert_eq!(last.objects[0].support, "shape:Table_2");
}

#[test]
fn north_realization_goes_around() {
    let r = pick_and_place("ramp");
    let res = r.rollout_traced(&vector(&r, &NORTH_MODE), 0, 1);
    assert!(res.goal_ok, "{:?}", res.failure);
    assert!(!classify_ramp_descent(res.trace.as_ref().unwrap(), &r.scenario, "Cube"));
    let ramp = r.rollout(&vector(&r, &RAMP_MODE), 0);
    assert!(ramp.total_cost < res.total_cost);
}

#[test]
fn box_blocks_the_ramp_drop() {
    let r = pick_and_place("box");
    let res = r.rollout_traced(&vector(&r, &RAMP_MODE), 0, 1);
    assert!(!res.goal_ok);
    let trace = res.trace.as_ref().unwrap();
    assert!(!classify_ramp_descent(trace, &r.scenario, "Cube"));
    // the flat top sits where the ramp was highest: the drop pose is below it
    assert_eq!(res.failure.map(|f| f.0), Some(3));
}

#[test]
fn box_base_never_enters_the_obstacle() {
    let r = pick_and_place("box");
    let res = r.rollout_traced(&vector(&r, &NORTH_MODE), 0, 1);
    assert!(res.goal_ok);
    let obstacle = &r.scenario.shapes[r.scenario.shape_index("Obstacle").unwrap()];
    for rec in res.trace.as_ref().unwrap() {
        let p = realize_core::Vec2::new(rec.base[0], rec.base[1]);
        assert!(!obstacle.footprint.contains(p));
    }
}

#[test]
fn move_to_current_position_is_free() {
    let r = pick_and_place("ramp");
    let mut v = RAMP_MODE;
    let init = r.scenario.robot_init.position;
    (v[0], v[1]) = (init.x, init.y);
    let res = r.rollout(&vector(&r, &v), 0);
    assert!(res.action_success[0]);
    assert_eq!(res.action_cost[0], 0.0);
    assert_eq!(res.action_steps[0], 0);
}

#[test]
fn move_into_padding_fails_at_once() {
    let r = pick_and_place("ramp");
    let mut v = RAMP_MODE;
    // 0.1 m south of Table_1: inside the padded footprint
    (v[0], v[1]) = (-1.5, -0.4);
    let res = r.rollout(&vector(&r, &v), 0);
    assert_eq!(res.failure, Some((0, ActionFailure::Unreachable)));
    assert_eq!(res.action_success, vec![false; 5]);
    assert_eq!(res.total_cost, 0.0);
    assert!(!res.all_actions_ok && !res.goal_ok);
}

#[test]
fn zero_vector_fails() {
    let r = pick_and_place("ramp");
    let res = r.rollout(&vector(&r, &[0.0; 11]), 0);
    assert!(!res.goal_ok);
    assert!(res.failure.is_some());
}

#[test]
fn cost_is_one_per_unsuccessful_step() {
    let r = pick_and_place("ramp");
    let res = r.rollout(&vector(&r, &NORTH_MODE), 0);
    for (c, s) in res.action_cost.iter().zip(&res.action_steps) {
        assert_eq!(*c, *s as f64);
    }
    assert_eq!(res.total_cost, res.action_cost.iter().sum::<f64>());
}

#[test]
fn trace_records_are_ordered() {
    let r = pick_and_place("ramp");
    let res = r.rollout_traced(&vector(&r, &RAMP_MODE), 0, 7);
    let tr = res.trace.unwrap();
    assert_eq!(tr[0].t, 0);
    assert!(tr.windows(2).all(|w| w[0].t < w[1].t));
    assert!(tr.iter().all(|x| x.v == realize_core::sim::TRACE_VERSION));
    let total: usize = res.action_steps.iter().sum();
    assert!(tr.last().unwrap().t >= total);
}

#[test]
fn push_knocks_the_block_into_the_box() {
    let r = push();
    let res = r.rollout_traced(&vector(&r, &PUSH_OK), 0, 1);
    assert!(res.goal_ok, "{:?}", res.failure);
    let last = res.trace.unwrap().pop().unwrap();
    assert_eq!(last.objects[1].support, "shape:box_floor");
}

#[test]
fn rollouts_are_deterministic() {
    let r = pick_and_place("ramp");
    let a = r.rollout_traced(&vector(&r, &RAMP_MODE), 11, 3);
    let b = r.rollout_traced(&vector(&r, &RAMP_MODE), 11, 3);
    assert_eq!(a, b);
}

#[test]
fn batch_matches_serial_on_100_samples() {
    let r = pick_and_place("ramp");
    let dist = DistributionState::initial(&r.space, 1e-3);
    let params: Vec<_> = (0..100).map(|i| dist.sample(&r.space, &mut sample_rng(42, &[i]))).collect();
    let batch = r.rollout_batch(&params, 9);
    assert_eq!(batch.len(), 100);
    for (i, (p, b)) in params.iter().zip(&batch).enumerate() {
        assert_eq!(*b, r.rollout(p, derive_seed(9, &[i as u64])));
    }
    let goal = batch.iter().filter(|x| x.goal_ok).count();
    let failed = batch.iter().filter(|x| x.failure.is_some()).count();
    assert!(failed > 0, "sample set should mix outcomes ({goal} goal-feasible)");
}
