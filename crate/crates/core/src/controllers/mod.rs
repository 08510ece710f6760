//! Per-action low-level controllers, their success predicates and running
//! costs.
//!
//! * `AStarTrack`: grid A* for the base, then PD waypoint tracking.
//! * `FabricReach` / `FabricRelease` / `Push`: a second-order attractor with
//!   damping and obstacle repulsion driving base and end effector jointly.

mod astar;
mod fabric;
mod track;

pub use astar::{astar_plan, grid_astar, Cell, GridPath, NavGrid, PlanFailure};
pub use fabric::{fabric_accel, fabric_step, psi, psi_gradient, FabricAccel, FabricGoal, FabricState};
pub use track::{track_step, TrackState};

use thiserror::Error;

use crate::geometry::{wrap_angle, Vec2, Vec3};
use crate::sim::{Gripper, WorldState};
use crate::symbolic::{ControllerId, CostId, SuccessId};
use crate::world::{RobotSpec, Scenario};

/// Per-action time budgets (s). `None` means horizon / plan length.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActionBudgets {
    pub move_to: Option<f64>,
    pub grasp: Option<f64>,
    pub place: Option<f64>,
    pub push: Option<f64>,
}

impl ActionBudgets {
    pub fn for_controller(&self, id: ControllerId) -> Option<f64> {
        match id {
            ControllerId::AStarTrack => self.move_to,
            ControllerId::FabricReach => self.grasp,
            ControllerId::FabricRelease => self.place,
            ControllerId::Push => self.push,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub kp: f64,
    pub kd: f64,
    pub ki: f64,
    /// Attractor weight.
    pub gamma: f64,
    /// Damping `B`.
    pub damping: f64,
    /// Repulsor weight.
    pub eta: f64,
    pub d_safe: f64,
    pub budgets: ActionBudgets,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kp: 2.0,
            kd: 2.0 * 2f64.sqrt(),
            ki: 0.0,
            gamma: 4.0,
            damping: 6.0,
            eta: 2.0,
            d_safe: 0.1,
            budgets: ActionBudgets::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GripperCommand {
    Open,
    Close,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerCommand {
    pub base_accel: Vec2,
    /// End-effector velocity relative to the base.
    pub ee_velocity: Vec3,
    pub ee_yaw_rate: f64,
    pub gripper: GripperCommand,
}

impl ControllerCommand {
    pub fn idle() -> Self {
        Self { base_accel: Vec2::zeros(), ee_velocity: Vec3::zeros(), ee_yaw_rate: 0.0, gripper: GripperCommand::Hold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ActionFailure {
    #[error("base goal unreachable")]
    Unreachable,
    #[error("gripper closed without an object")]
    GraspMissed,
    #[error("no graspable object")]
    NothingToGrasp,
    #[error("action budget exhausted")]
    Timeout,
    #[error("plan horizon exhausted")]
    Horizon,
    #[error("not executed")]
    NotExecuted,
}

/// Where an action wants the robot to be.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionTarget {
    Base(Vec2),
    Ee { pos: Vec3, yaw: f64 },
}

pub fn base_in(state: &WorldState, z: Vec2, eps: f64) -> bool {
    (state.base.pos - z).norm() <= eps
}

pub fn ee_in(state: &WorldState, pos: Vec3, yaw: f64, robot: &RobotSpec) -> bool {
    (state.ee_position() - pos).norm() <= robot.success_tolerance
        && wrap_angle(state.ee.yaw - yaw).abs() <= robot.yaw_tolerance
}

/// Cost increment of one executed step.
pub fn action_cost_step(cost: CostId, succeeded: bool) -> f64 {
    match cost {
        CostId::Time => {
            if succeeded {
                0.0
            } else {
                1.0
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Phase {
    Track(TrackState),
    Reach { object: usize },
    Release { released: bool },
    Push { closed: bool, released: bool },
}

/// Controller instance for one action of one rollout.
#[derive(Debug, Clone)]
pub struct ActionController {
    pub controller: ControllerId,
    pub success: SuccessId,
    pub target: ActionTarget,
    phase: Phase,
}

impl ActionController {
    /// Instantiates the controller from its parameter block. Base targets are
    /// planned here, so an unreachable goal fails before the first step.
    pub fn start(
        controller: ControllerId,
        success: SuccessId,
        params: &[f64],
        scenario: &Scenario,
        grid: &NavGrid,
        state: &WorldState,
    ) -> Result<Self, ActionFailure> {
        let (target, phase) = match controller {
            ControllerId::AStarTrack => {
                let goal = Vec2::new(params[0], params[1]);
                let waypoints = astar_plan(scenario, grid, state.base.pos, goal).map_err(|_| ActionFailure::Unreachable)?;
                (ActionTarget::Base(goal), Phase::Track(TrackState::new(waypoints)))
            }
            ControllerId::FabricReach => {
                let ee = state.ee_position();
                let object = state
                    .objects
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| state.holding != Some(*i))
                    .min_by(|a, b| (a.1.pos - ee).norm().total_cmp(&(b.1.pos - ee).norm()))
                    .map(|(i, _)| i)
                    .ok_or(ActionFailure::NothingToGrasp)?;
                (ActionTarget::Ee { pos: state.objects[object].pos, yaw: params[0] }, Phase::Reach { object })
            }
            ControllerId::FabricRelease => (
                ActionTarget::Ee { pos: Vec3::new(params[0], params[1], params[2]), yaw: params[3] },
                Phase::Release { released: false },
            ),
            ControllerId::Push => (
                ActionTarget::Ee { pos: Vec3::new(params[0], params[1], params[2]), yaw: params[3] },
                Phase::Push { closed: false, released: false },
            ),
        };
        Ok(Self { controller, success, target, phase })
    }

    /// The action's success predicate on `state`.
    pub fn succeeded(&self, state: &WorldState, robot: &RobotSpec) -> bool {
        match (self.success, self.target) {
            (SuccessId::BaseIn, ActionTarget::Base(z)) => base_in(state, z, robot.success_tolerance),
            (SuccessId::BaseIn, ActionTarget::Ee { pos, .. }) => {
                base_in(state, pos.xy(), robot.success_tolerance)
            }
            (_, ActionTarget::Base(_)) => false,
            (SuccessId::EeClosedIn, ActionTarget::Ee { pos, yaw }) => {
                state.ee.gripper == Gripper::Closed && state.holding.is_some() && ee_in(state, pos, yaw, robot)
            }
            (SuccessId::EeInReleased, ActionTarget::Ee { pos, yaw }) => {
                let released = match self.phase {
                    Phase::Release { released } | Phase::Push { released, .. } => released,
                    _ => true,
                };
                released && state.ee.gripper == Gripper::Open && ee_in(state, pos, yaw, robot)
            }
        }
    }

    pub fn command(&mut self, state: &WorldState, scenario: &Scenario, dt: f64) -> Result<ControllerCommand, ActionFailure> {
        let robot = &scenario.robot;
        let gains = &scenario.sim.controllers;
        if let Phase::Track(track) = &mut self.phase {
            return Ok(track_step(track, state.base.pos, state.base.vel, robot, gains, scenario.sim.astar_cell, dt));
        }
        let ActionTarget::Ee { pos, yaw } = self.target else { unreachable!("fabric controllers target the end effector") };
        let goal = FabricGoal { pos, yaw };
        let mut cmd = fabric_step(&FabricState::observe(state), &goal, scenario, gains, dt);
        let err = (state.ee_position() - pos).norm();
        let yaw_err = wrap_angle(state.ee.yaw - yaw).abs();
        let settled = |tol: f64| err <= 0.5 * tol && yaw_err <= 0.5 * robot.yaw_tolerance;
        match &mut self.phase {
            Phase::Track(_) => unreachable!(),
            Phase::Reach { .. } => {
                if state.ee.gripper == Gripper::Closed {
                    if state.holding.is_none() {
                        return Err(ActionFailure::GraspMissed);
                    }
                } else if settled(robot.grasp_tolerance) {
                    cmd.gripper = GripperCommand::Close;
                }
            }
            Phase::Release { released } => {
                if settled(robot.success_tolerance) {
                    cmd.gripper = GripperCommand::Open;
                    *released = true;
                }
            }
            Phase::Push { closed, released } => {
                if !*closed {
                    cmd.gripper = GripperCommand::Close;
                    *closed = true;
                } else if settled(robot.success_tolerance) {
                    cmd.gripper = GripperCommand::Open;
                    *released = true;
                }
            }
        }
        Ok(cmd)
    }

    /// Object chosen at start by a grasp controller.
    pub fn grasp_object(&self) -> Option<usize> {
        match self.phase {
            Phase::Reach { object } => Some(object),
            _ => None,
        }
    }
}
