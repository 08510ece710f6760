use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use thiserror::Error;

use super::*;

pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("UNSOLVABLE: search space exhausted without reaching the goal")]
    Unsolvable,
    #[error("node limit of {0} expansions exceeded")]
    NodeLimit(usize),
}

type State = BTreeSet<Atom>;

fn applicable(s: &State, a: &GroundAction) -> bool {
    a.pre_pos.iter().all(|p| s.contains(p)) && a.pre_neg.iter().all(|p| !s.contains(p))
}

fn apply(s: &State, a: &GroundAction) -> State {
    let mut next = s.clone();
    for d in &a.del {
        next.remove(d);
    }
    next.extend(a.add.iter().cloned());
    next
}

fn unsatisfied(s: &State, goal: &[GroundLiteral]) -> usize {
    goal.iter().filter(|g| s.contains(&g.atom) != g.positive).count()
}

pub fn plan(domain: &Domain, problem: &Problem) -> Result<SymbolicPlan, PlanError> {
    plan_with_limit(domain, problem, DEFAULT_NODE_LIMIT)
}

/// A* over ground-atom states with the goal-count heuristic and unit action
/// cost. Successors are generated in (name, args) order and ties in the open
/// list are broken by (h, generation order), which makes the result
/// deterministic.
pub fn plan_with_limit(domain: &Domain, problem: &Problem, node_limit: usize) -> Result<SymbolicPlan, PlanError> {
    let actions = ground(domain, problem);
    let init: State = problem.init.iter().cloned().collect();

    let mut states: Vec<State> = vec![init.clone()];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None];
    let mut best_g: HashMap<State, usize> = HashMap::from([(init.clone(), 0)]);
    let mut open = BinaryHeap::new();
    let h0 = unsatisfied(&init, &problem.goal);
    open.push(Reverse((h0, h0, 0usize, 0usize, 0usize)));
    let mut seq = 1usize;
    let mut expanded = 0usize;

    while let Some(Reverse((_, h, _, g, node))) = open.pop() {
        if best_g.get(&states[node]).is_some_and(|&bg| bg < g) {
            continue;
        }
        if h == 0 {
            let mut out = Vec::new();
            let mut cur = node;
            while let Some((p, a)) = parent[cur] {
                out.push(actions[a].clone());
                cur = p;
            }
            out.reverse();
            return Ok(SymbolicPlan { actions: out });
        }
        expanded += 1;
        if expanded > node_limit {
            return Err(PlanError::NodeLimit(node_limit));
        }
        for (ai, a) in actions.iter().enumerate() {
            if !applicable(&states[node], a) {
                continue;
            }
            let next = apply(&states[node], a);
            let ng = g + 1;
            if best_g.get(&next).is_some_and(|&bg| bg <= ng) {
                continue;
            }
            best_g.insert(next.clone(), ng);
            let nh = unsatisfied(&next, &problem.goal);
            states.push(next);
            parent.push(Some((node, ai)));
            open.push(Reverse((ng + nh, nh, seq, ng, states.len() - 1)));
            seq += 1;
        }
    }
    Err(PlanError::Unsolvable)
}

/// Replays a plan symbolically from the problem's initial state, checking
/// every precondition and the goal.
pub fn validate_plan(problem: &Problem, plan: &SymbolicPlan) -> Result<(), String> {
    let mut s: State = problem.init.iter().cloned().collect();
    for (i, a) in plan.actions.iter().enumerate() {
        if let Some(p) = a.pre_pos.iter().find(|p| !s.contains(*p)) {
            return Err(format!("step {i} {}: precondition {p} does not hold", a.full_name()));
        }
        if let Some(p) = a.pre_neg.iter().find(|p| s.contains(*p)) {
            return Err(format!("step {i} {}: precondition (not {p}) does not hold", a.full_name()));
        }
        s = apply(&s, a);
    }
    if unsatisfied(&s, &problem.goal) > 0 {
        return Err("goal not satisfied at the end of the plan".into());
    }
    Ok(())
}
