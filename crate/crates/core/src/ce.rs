//! Cross-entropy search over plan parameters.
//!
//! Iteration 0 samples uniformly from the parameter regions. Every later
//! iteration samples independent normals, evaluates the batch, keeps the
//! cheapest goal-feasible samples (or, when there are none, the cheapest
//! samples whose actions all succeeded) and refits the normals to them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{derive_seed, fit_elites, sample_rng, DistributionMode, DistributionState, ParamSpace, ParamVector};
use crate::sim::{Realization, RolloutResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CeConfig {
    pub n_start: usize,
    pub n_end: usize,
    /// Iterations over which the batch size shrinks linearly.
    pub ramp_iters: usize,
    pub n_elite: usize,
    pub max_iters: usize,
    pub convergence_std_tol: f64,
    pub std_floor: f64,
    pub noise_injection_std: f64,
    #[serde(default)]
    pub master_seed: u64,
}

impl Default for CeConfig {
    fn default() -> Self {
        Self {
            n_start: 3000,
            n_end: 300,
            ramp_iters: 10,
            n_elite: 50,
            max_iters: 30,
            convergence_std_tol: 0.01,
            std_floor: 1e-3,
            noise_injection_std: 0.05,
            master_seed: 0,
        }
    }
}

impl CeConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.n_start >= self.n_end && self.n_end >= self.n_elite && self.n_elite >= 1) {
            return Err(format!(
                "need n_start >= n_end >= n_elite >= 1 (got {}, {}, {})",
                self.n_start, self.n_end, self.n_elite
            ));
        }
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        for (name, v) in [
            ("convergence_std_tol", self.convergence_std_tol),
            ("std_floor", self.std_floor),
            ("noise_injection_std", self.noise_injection_std),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        Ok(())
    }

    /// Batch size at iteration `j`.
    pub fn n_env(&self, j: usize) -> usize {
        if self.ramp_iters == 0 {
            return self.n_end;
        }
        let frac = j.min(self.ramp_iters) as f64 / self.ramp_iters as f64;
        let (a, b) = (self.n_start as f64, self.n_end as f64);
        (a + (b - a) * frac).round() as usize
    }
}

/// What the optimizer needs from one evaluated sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    /// Goal-feasible: the elite tier above `all_actions_ok`.
    pub goal_ok: bool,
    pub all_actions_ok: bool,
    pub total_cost: f64,
}

impl From<&RolloutResult> for Outcome {
    /// A rollout is goal-feasible only if every action also succeeded.
    fn from(r: &RolloutResult) -> Self {
        Self { goal_ok: r.goal_ok && r.all_actions_ok, all_actions_ok: r.all_actions_ok, total_cost: r.total_cost }
    }
}

/// Batch evaluation backend.
pub trait Evaluator {
    fn space(&self) -> &ParamSpace;
    fn evaluate(&self, params: &[ParamVector], master_seed: u64) -> Vec<Outcome>;
}

impl Evaluator for Realization {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn evaluate(&self, params: &[ParamVector], master_seed: u64) -> Vec<Outcome> {
        self.rollout_batch(params, master_seed).iter().map(Outcome::from).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    /// Goal satisfied.
    Goal,
    /// Every action succeeded but the goal failed.
    Actions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliteSelection {
    pub indices: Vec<usize>,
    pub tier: Tier,
    /// A single elite: the refit uses the noise-injection std.
    pub noise_injection: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no sample succeeded at every action")]
pub struct NoElites;

/// Cheapest `n_elite` samples of the best non-empty tier, ties broken by
/// index.
pub fn select_elites(outcomes: &[Outcome], n_elite: usize) -> Result<EliteSelection, NoElites> {
    let pick = |pred: &dyn Fn(&Outcome) -> bool| -> Vec<usize> {
        outcomes.iter().enumerate().filter(|(_, o)| pred(o)).map(|(i, _)| i).collect()
    };
    let (mut idx, tier) = match pick(&|o| o.goal_ok) {
        v if !v.is_empty() => (v, Tier::Goal),
        _ => match pick(&|o| o.all_actions_ok) {
            v if !v.is_empty() => (v, Tier::Actions),
            _ => return Err(NoElites),
        },
    };
    idx.sort_by(|&a, &b| outcomes[a].total_cost.total_cmp(&outcomes[b].total_cost).then(a.cmp(&b)));
    idx.truncate(n_elite);
    Ok(EliteSelection { noise_injection: idx.len() == 1, indices: idx, tier })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub n_sampled: usize,
    pub n_goal_feasible: usize,
    pub n_actions_ok: usize,
    /// Cheapest goal-feasible cost seen up to and including this iteration.
    pub best_cost_so_far: Option<f64>,
    pub elite_tier: Option<Tier>,
    pub n_elite: usize,
    pub noise_injected: bool,
    /// Distribution the batch was drawn from.
    pub sampled_from: DistributionMode,
    /// Distribution after the refit.
    pub theta: DistributionState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub iter: usize,
    pub index: usize,
    pub values: Vec<f64>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CeReport {
    /// Cheapest goal-feasible sample over all iterations.
    pub best: Option<Sample>,
    /// Cheapest sample whose actions all succeeded, for when `best` is empty.
    pub best_effort: Option<Sample>,
    pub history: Vec<IterationRecord>,
    pub final_distribution: DistributionState,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum CeError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("no goal-feasible realization after {} iterations", .0.history.len())]
    NoFeasibleRealization(Box<CeReport>),
}

/// Seed of the evaluation batch at iteration `j`.
pub fn batch_seed(master: u64, j: usize) -> u64 {
    derive_seed(master, &[j as u64, 1])
}

fn better(candidate: &Outcome, current: &Option<Sample>) -> bool {
    current.as_ref().is_none_or(|b| candidate.total_cost < b.outcome.total_cost)
}

pub fn optimize<E: Evaluator + ?Sized>(eval: &E, config: &CeConfig) -> Result<CeReport, CeError> {
    optimize_with(eval, config, |_, _, _| {})
}

/// [`optimize`] with a callback receiving each iteration's record, samples
/// and outcomes once the iteration is complete.
pub fn optimize_with<E, F>(eval: &E, config: &CeConfig, mut observe: F) -> Result<CeReport, CeError>
where
    E: Evaluator + ?Sized,
    F: FnMut(&IterationRecord, &[ParamVector], &[Outcome]),
{
    config.validate().map_err(CeError::InvalidConfig)?;
    let space = eval.space();
    let initial = DistributionState::initial(space, config.std_floor);
    let mut dist = initial.clone();
    let mut best: Option<Sample> = None;
    let mut best_effort: Option<Sample> = None;
    let mut history = Vec::new();
    let mut converged = false;

    for j in 0..config.max_iters {
        let n = config.n_env(j);
        let samples: Vec<ParamVector> = (0..n)
            .map(|i| dist.sample(space, &mut sample_rng(config.master_seed, &[j as u64, 0, i as u64])))
            .collect();
        let outcomes = eval.evaluate(&samples, batch_seed(config.master_seed, j));

        for (i, o) in outcomes.iter().enumerate() {
            let slot = if o.goal_ok {
                &mut best
            } else if o.all_actions_ok {
                &mut best_effort
            } else {
                continue;
            };
            if better(o, slot) {
                *slot = Some(Sample { iter: j, index: i, values: samples[i].values.clone(), outcome: *o });
            }
        }

        let sampled_from = dist.mode;
        let selection = select_elites(&outcomes, config.n_elite);
        dist = match &selection {
            Ok(sel) => {
                let elites: Vec<ParamVector> = sel.indices.iter().map(|&i| samples[i].clone()).collect();
                fit_elites(&elites, &dist, config.noise_injection_std)
            }
            Err(NoElites) => initial.clone(),
        };
        history.push(IterationRecord {
            iter: j,
            n_sampled: n,
            n_goal_feasible: outcomes.iter().filter(|o| o.goal_ok).count(),
            n_actions_ok: outcomes.iter().filter(|o| o.all_actions_ok).count(),
            best_cost_so_far: best.as_ref().map(|b| b.outcome.total_cost),
            elite_tier: selection.as_ref().ok().map(|s| s.tier),
            n_elite: selection.as_ref().map_or(0, |s| s.indices.len()),
            noise_injected: selection.as_ref().is_ok_and(|s| s.noise_injection),
            sampled_from,
            theta: dist.clone(),
        });
        observe(history.last().expect("just pushed"), &samples, &outcomes);
        if dist.max_std() <= config.convergence_std_tol {
            converged = true;
            break;
        }
    }

    let report = CeReport { best, best_effort, history, final_distribution: dist, converged };
    if report.best.is_none() {
        return Err(CeError::NoFeasibleRealization(Box::new(report)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ParamKind, ParamSpec};
    use crate::geometry::Vec2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn outcome(goal_ok: bool, all_actions_ok: bool, total_cost: f64) -> Outcome {
        Outcome { goal_ok, all_actions_ok, total_cost }
    }

    #[test]
    fn schedule_endpoints() {
        let c = CeConfig::default();
        assert_eq!(c.n_env(0), 3000);
        assert_eq!(c.n_env(5), 1650);
        assert_eq!(c.n_env(10), 300);
        assert_eq!(c.n_env(25), 300);
    }

    #[test]
    fn takes_cheapest_goal_feasible() {
        let outs: Vec<Outcome> = (0..60).map(|i| outcome(true, true, (60 - i) as f64)).collect();
        let s = select_elites(&outs, 50).unwrap();
        assert_eq!(s.tier, Tier::Goal);
        assert_eq!(s.indices.len(), 50);
        assert_eq!(s.indices[0], 59);
        assert!(!s.indices.contains(&0));
    }

    #[test]
    fn falls_back_to_action_tier() {
        let mut outs: Vec<Outcome> = (0..20).map(|_| outcome(false, false, 1.0)).collect();
        for i in [1, 3, 5, 7, 9, 11, 13] {
            outs[i] = outcome(false, true, i as f64);
        }
        let s = select_elites(&outs, 50).unwrap();
        assert_eq!(s.tier, Tier::Actions);
        assert_eq!(s.indices, vec![1, 3, 5, 7, 9, 11, 13]);
    }

    #[test]
    fn single_elite_flags_noise() {
        let mut outs: Vec<Outcome> = (0..20).map(|_| outcome(false, true, 1.0)).collect();
        outs[4] = outcome(true, true, 9.0);
        let s = select_elites(&outs, 50).unwrap();
        assert_eq!((s.indices.clone(), s.tier, s.noise_injection), (vec![4], Tier::Goal, true));
    }

    #[test]
    fn no_elites() {
        let outs = vec![outcome(false, false, 0.0); 5];
        assert_eq!(select_elites(&outs, 3), Err(NoElites));
    }

    #[test]
    fn rejects_bad_config() {
        let c = CeConfig { n_elite: 400, ..CeConfig::default() };
        assert!(c.validate().is_err());
    }

    /// Cost |z - z*|^2, feasible inside a 2x2 square.
    struct Quadratic {
        space: ParamSpace,
        target: [f64; 2],
    }

    impl Evaluator for Quadratic {
        fn space(&self) -> &ParamSpace {
            &self.space
        }
        fn evaluate(&self, params: &[ParamVector], _: u64) -> Vec<Outcome> {
            params
                .iter()
                .map(|p| {
                    let (x, y) = (p.values[0], p.values[1]);
                    let inside = x.abs() <= 1.0 && y.abs() <= 1.0;
                    let c = (x - self.target[0]).powi(2) + (y - self.target[1]).powi(2);
                    outcome(inside, inside, c)
                })
                .collect()
        }
    }

    fn square_space() -> ParamSpace {
        ParamSpace::new(vec![ParamSpec {
            id: "z".into(),
            kind: ParamKind::Rect2 { center: Vec2::zeros(), size: Vec2::new(2.0, 2.0) },
        }])
    }

    #[test]
    fn history_is_reproducible_and_monotone() {
        let q = Quadratic { space: square_space(), target: [0.3, -0.2] };
        let cfg = CeConfig { n_start: 200, n_end: 60, ramp_iters: 4, n_elite: 10, master_seed: 3, ..CeConfig::default() };
        let a = optimize(&q, &cfg).unwrap();
        let b = optimize(&q, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        let costs: Vec<f64> = a.history.iter().map(|r| r.best_cost_so_far.unwrap_or(f64::INFINITY)).collect();
        assert!(costs.windows(2).all(|w| w[1] <= w[0]));
        for r in &a.history {
            assert!(r.n_goal_feasible <= r.n_actions_ok && r.n_actions_ok <= r.n_sampled);
            assert_eq!(r.n_sampled, cfg.n_env(r.iter));
        }
    }

    #[test]
    fn scaling_costs_keeps_elites() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(1..80);
            let outs: Vec<Outcome> = (0..n)
                .map(|_| outcome(rng.random_bool(0.3), rng.random_bool(0.6), rng.random_range(0.0..100.0)))
                .collect();
            let k: f64 = rng.random_range(1e-3..1e3);
            let scaled: Vec<Outcome> = outs.iter().map(|o| Outcome { total_cost: o.total_cost * k, ..*o }).collect();
            let ne = rng.random_range(1..30);
            assert_eq!(select_elites(&outs, ne), select_elites(&scaled, ne));
        }
    }
}
