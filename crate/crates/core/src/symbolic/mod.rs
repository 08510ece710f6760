//! PDDL subset (`:strips`, `:typing`, `:negative-preconditions`) with a
//! controller-binding extension, grounding and forward A* planning.
//!
//! Two non-standard keys tie the symbolic layer to the continuous one:
//!
//! * `:controller (<ControllerId> ?param)` inside an action names the low-level
//!   controller and the action parameter that feeds it;
//! * `(:params (<object> <param-spec-id>) ...)` in a problem maps PDDL objects to
//!   the continuous parameter regions declared in the scenario file.

mod ground;
mod pddl;
mod search;
pub mod sexpr;

pub use ground::{ground, GroundAction};
pub use pddl::{parse_domain, parse_problem};
pub use search::{plan, plan_with_limit, validate_plan, PlanError, DEFAULT_NODE_LIMIT};

use std::collections::BTreeMap;
use std::fmt;

use sexpr::Pos;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SymbolicError {
    #[error("lexer error at {pos}: {message}")]
    Lex { pos: Pos, message: String },
    #[error("parse error at {pos}: {message}")]
    Parse { pos: Pos, message: String },
    #[error("unknown predicate `{name}` at {pos}")]
    UnknownPredicate { name: String, pos: Pos },
    #[error("unknown type `{name}` at {pos}")]
    UnknownType { name: String, pos: Pos },
    #[error("unknown object or variable `{name}` at {pos}")]
    UnknownTerm { name: String, pos: Pos },
    #[error("predicate `{name}` expects {expected} arguments, got {found} at {pos}")]
    Arity { name: String, expected: usize, found: usize, pos: Pos },
    #[error("action `{action}`: {message}")]
    InvalidAction { action: String, message: String },
    #[error("problem: {0}")]
    InvalidProblem(String),
}

/// Low-level controller selected by an action schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControllerId {
    AStarTrack,
    FabricReach,
    FabricRelease,
    Push,
}

impl ControllerId {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "AStarTrack" => Some(Self::AStarTrack),
            "FabricReach" => Some(Self::FabricReach),
            "FabricRelease" => Some(Self::FabricRelease),
            "Push" => Some(Self::Push),
            _ => None,
        }
    }

    pub fn default_success(self) -> SuccessId {
        match self {
            Self::AStarTrack => SuccessId::BaseIn,
            Self::FabricReach => SuccessId::EeClosedIn,
            Self::FabricRelease | Self::Push => SuccessId::EeInReleased,
        }
    }
}

impl fmt::Display for ControllerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::AStarTrack => "AStarTrack",
            Self::FabricReach => "FabricReach",
            Self::FabricRelease => "FabricRelease",
            Self::Push => "Push",
        };
        f.write_str(s)
    }
}

/// Running cost selector. `Time` charges one unit per step until success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostId {
    Time,
}

/// Success predicate selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SuccessId {
    /// Base within tolerance of the target point.
    BaseIn,
    /// End effector at the grasp pose with the gripper closed on the object.
    EeClosedIn,
    /// End effector at the pose and the gripper opened there.
    EeInReleased,
}

impl SuccessId {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "in" | "base-in" => Some(Self::BaseIn),
            "ee-closed-in" => Some(Self::EeClosedIn),
            "ee-in-released" | "ee-in" => Some(Self::EeInReleased),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub positive: bool,
    pub predicate: String,
    pub args: Vec<Term>,
}

/// Ground atom `predicate(args...)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundLiteral {
    pub positive: bool,
    pub atom: Atom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSchema {
    pub name: String,
    /// (variable, type) per slot, in declaration order.
    pub params: Vec<(String, String)>,
    pub controller: ControllerId,
    /// Index into `params` of the slot feeding the controller.
    pub controller_param: usize,
    pub cost: CostId,
    pub success: SuccessId,
    pub pre: Vec<Literal>,
    pub add: Vec<Literal>,
    pub del: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub name: String,
    /// type -> parent type (`object` is the implicit root).
    pub types: BTreeMap<String, String>,
    /// predicate -> argument types.
    pub predicates: BTreeMap<String, Vec<String>>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    /// True if `t` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, t: &str, ancestor: &str) -> bool {
        let mut cur = t;
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match self.types.get(cur) {
                Some(parent) => cur = parent,
                None => return ancestor == "object",
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    /// (object, type) in declaration order.
    pub objects: Vec<(String, String)>,
    pub init: Vec<Atom>,
    pub goal: Vec<GroundLiteral>,
    /// PDDL object -> parameter spec id.
    pub params: BTreeMap<String, String>,
}

/// Ordered ground actions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolicPlan {
    pub actions: Vec<GroundAction>,
}

impl SymbolicPlan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

impl fmt::Display for SymbolicPlan {
    /// One action per line, e.g. `moveTo(Table_1)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.actions {
            writeln!(f, "{a}")?;
        }
        Ok(())
    }
}
