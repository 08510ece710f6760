use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use super::trace::TraceRecord;
use super::{step, SupportMode, WorldState};
use crate::controllers::{action_cost_step, ActionController, ActionFailure, ControllerCommand, NavGrid};
use crate::geometry::Vec3;
use crate::params::{derive_seed, ParamKind, ParamSpace, ParamVector};
use crate::symbolic::{ControllerId, Problem, SymbolicPlan};
use crate::world::{Scenario, REST_TOLERANCE};

/// Terminal cost on the final state.
pub type EndCost = Arc<dyn Fn(&WorldState, &Scenario) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BindError {
    #[error("object `{0}` has no entry in the problem's :params block")]
    MissingParam(String),
    #[error("object `{object}` maps to unknown parameter spec `{spec}`")]
    UnknownSpec { object: String, spec: String },
    #[error("action {action}: controller {controller} cannot take a {kind} parameter")]
    KindMismatch { action: String, controller: ControllerId, kind: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    pub action_success: Vec<bool>,
    pub action_cost: Vec<f64>,
    /// Steps executed per action.
    pub action_steps: Vec<usize>,
    /// First failing action and why.
    pub failure: Option<(usize, ActionFailure)>,
    pub all_actions_ok: bool,
    /// Goal on the final state, checked whether or not every action
    /// succeeded.
    pub goal_ok: bool,
    pub total_cost: f64,
    pub seed: u64,
    pub trace: Option<Vec<TraceRecord>>,
}

fn settled(s: &WorldState) -> bool {
    s.objects.iter().all(|o| o.support == SupportMode::Attached || (o.support.is_resting() && o.vel == Vec3::zeros()))
}

fn kind_fits(controller: ControllerId, kind: &ParamKind) -> bool {
    matches!(
        (controller, kind),
        (ControllerId::AStarTrack, ParamKind::Annulus { .. } | ParamKind::Rect2 { .. })
            | (ControllerId::FabricReach, ParamKind::Yaw { .. })
            | (ControllerId::FabricRelease | ControllerId::Push, ParamKind::Box3Yaw { .. })
    )
}

/// A symbolic plan bound to a scenario: one parameter block per action, in
/// plan order, plus everything a rollout needs precomputed.
pub struct Realization {
    pub scenario: Scenario,
    pub plan: SymbolicPlan,
    pub space: ParamSpace,
    grid: NavGrid,
    budget_steps: Vec<usize>,
    horizon_steps: usize,
    goal_object: usize,
    goal_shape: usize,
    end_cost: Option<EndCost>,
}

impl fmt::Debug for Realization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Realization").field("plan", &self.plan.to_string()).field("dim", &self.space.dim()).finish()
    }
}

impl Realization {
    pub fn new(scenario: Scenario, problem: &Problem, plan: SymbolicPlan) -> Result<Self, BindError> {
        let mut specs = Vec::with_capacity(plan.len());
        for a in &plan.actions {
            let obj = &a.controller_arg;
            let spec_id = problem.params.get(obj).ok_or_else(|| BindError::MissingParam(obj.clone()))?;
            let spec = scenario
                .param_spec(spec_id)
                .ok_or_else(|| BindError::UnknownSpec { object: obj.clone(), spec: spec_id.clone() })?;
            if !kind_fits(a.controller, &spec.kind) {
                return Err(BindError::KindMismatch {
                    action: a.to_string(),
                    controller: a.controller,
                    kind: spec.kind.name(),
                });
            }
            specs.push(spec.clone());
        }
        let dt = scenario.sim.dt;
        let default_budget = scenario.default_action_budget(plan.len());
        let budget_steps = plan
            .actions
            .iter()
            .map(|a| {
                let secs = scenario.sim.controllers.budgets.for_controller(a.controller).unwrap_or(default_budget);
                (secs / dt).round() as usize
            })
            .collect();
        let (obj_id, shape_id) = &scenario.goal.object_on_surface;
        let goal_object = scenario.object_index(obj_id).expect("validated goal object");
        let goal_shape = scenario.shape_index(shape_id).expect("validated goal shape");
        Ok(Self {
            grid: NavGrid::new(&scenario),
            horizon_steps: (scenario.sim.horizon / dt).round() as usize,
            space: ParamSpace::new(specs),
            scenario,
            plan,
            budget_steps,
            goal_object,
            goal_shape,
            end_cost: None,
        })
    }

    pub fn with_end_cost(mut self, f: EndCost) -> Self {
        self.end_cost = Some(f);
        self
    }

    pub fn grid(&self) -> &NavGrid {
        &self.grid
    }

    /// Robot inside the goal region and the goal object resting on the goal
    /// surface.
    pub fn goal_satisfied(&self, s: &WorldState) -> bool {
        let sc = &self.scenario;
        if !sc.goal.robot_region.contains(s.base.pos) {
            return false;
        }
        let o = &s.objects[self.goal_object];
        if o.support == SupportMode::Attached {
            return false;
        }
        let shape = &sc.shapes[self.goal_shape];
        let c = o.pos.xy();
        let bottom = o.pos.z - sc.objects[self.goal_object].half_extents.z;
        shape.footprint.contains(c) && (bottom - shape.height_at(c)).abs() <= REST_TOLERANCE
    }

    pub fn rollout(&self, params: &ParamVector, seed: u64) -> RolloutResult {
        self.run(params, seed, None)
    }

    /// Rollout that also records every `stride`-th state and the final one.
    pub fn rollout_traced(&self, params: &ParamVector, seed: u64, stride: usize) -> RolloutResult {
        self.run(params, seed, Some(stride.max(1)))
    }

    /// Independent rollouts; `results[i]` uses seed `derive_seed(master, [i])`
    /// and the output order matches the input order.
    pub fn rollout_batch(&self, params: &[ParamVector], master_seed: u64) -> Vec<RolloutResult> {
        params
            .par_iter()
            .enumerate()
            .map(|(i, p)| self.rollout(p, derive_seed(master_seed, &[i as u64])))
            .collect()
    }

    /// The simulator is deterministic, so `seed` is only recorded.
    fn run(&self, params: &ParamVector, seed: u64, stride: Option<usize>) -> RolloutResult {
        assert_eq!(params.len(), self.space.dim(), "parameter vector does not match the plan layout");
        let sc = &self.scenario;
        let dt = sc.sim.dt;
        let k = self.plan.len();
        let mut s = WorldState::initial(sc);
        let mut trace = stride.map(|_| vec![TraceRecord::capture(&s, sc, (k > 0).then_some(0))]);
        let mut success = vec![false; k];
        let mut cost = vec![0.0; k];
        let mut steps = vec![0usize; k];
        let mut failure = None;

        'actions: for (i, action) in self.plan.actions.iter().enumerate() {
            let mut ctrl =
                match ActionController::start(action.controller, action.success, params.block(i), sc, &self.grid, &s) {
                    Ok(c) => c,
                    Err(f) => {
                        failure = Some((i, f));
                        break;
                    }
                };
            loop {
                if ctrl.succeeded(&s, &sc.robot) {
                    success[i] = true;
                    break;
                }
                let fail = if steps[i] >= self.budget_steps[i] {
                    Some(ActionFailure::Timeout)
                } else if s.t >= self.horizon_steps {
                    Some(ActionFailure::Horizon)
                } else {
                    None
                };
                let cmd = match fail.map_or_else(|| ctrl.command(&s, sc, dt), Err) {
                    Ok(c) => c,
                    Err(f) => {
                        failure = Some((i, f));
                        break 'actions;
                    }
                };
                s = step(&s, &cmd, sc, dt);
                steps[i] += 1;
                cost[i] += action_cost_step(action.cost, false);
                if let (Some(tr), Some(st)) = (trace.as_mut(), stride) {
                    if s.t.is_multiple_of(st) {
                        tr.push(TraceRecord::capture(&s, sc, Some(i)));
                    }
                }
            }
        }
        if failure.is_none() {
            // let released or knocked objects come to rest before the goal
            // check; the robot idles and no cost is charged
            let idle = ControllerCommand::idle();
            while s.t < self.horizon_steps && !settled(&s) {
                s = step(&s, &idle, sc, dt);
                if let (Some(tr), Some(st)) = (trace.as_mut(), stride) {
                    if s.t.is_multiple_of(st) {
                        tr.push(TraceRecord::capture(&s, sc, None));
                    }
                }
            }
        }
        if let Some(tr) = trace.as_mut() {
            if tr.last().is_none_or(|r| r.t != s.t) {
                tr.push(TraceRecord::capture(&s, sc, None));
            }
        }
        let all_actions_ok = success.iter().all(|&b| b);
        let goal_ok = self.goal_satisfied(&s);
        let end = self.end_cost.as_ref().map_or(0.0, |f| f(&s, sc));
        RolloutResult {
            total_cost: cost.iter().sum::<f64>() + end,
            action_success: success,
            action_cost: cost,
            action_steps: steps,
            failure,
            all_actions_ok,
            goal_ok,
            seed,
            trace,
        }
    }
}
