use std::fmt;
use std::path::Path;

use realize_core::symbolic::{parse_domain, parse_problem, plan, Problem};
use realize_core::{load_scenario, CeConfig, Realization, Scenario, SymbolicPlan};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Process outcome with its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input (exit 1).
    Input(String),
    /// No symbolic plan (exit 2).
    Unsolvable(String),
    /// No goal-feasible realization or replay (exit 3).
    Infeasible(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Unsolvable(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Unsolvable(m) => write!(f, "no symbolic plan: {m}"),
            Failure::Infeasible(m) => write!(f, "infeasible: {m}"),
        }
    }
}

pub fn input_err(path: &Path, e: impl fmt::Display) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

/// A file as it was read: path as given plus content hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read(path: &Path) -> Result<(String, FileRef), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input_err(path, e))?;
    let file = FileRef { path: path.display().to_string(), sha256: sha256_hex(text.as_bytes()) };
    Ok((text, file))
}

/// Reads `path` and fails if its content no longer matches `expected`.
pub fn read_checked(path: &Path, expected: &str) -> Result<String, Failure> {
    let (text, file) = read(path)?;
    if file.sha256 != expected {
        return Err(input_err(path, "content hash differs from the one recorded for the run"));
    }
    Ok(text)
}

pub struct Inputs {
    pub scenario: Scenario,
    pub problem: Problem,
    pub plan: SymbolicPlan,
    pub scenario_file: FileRef,
    pub domain_file: FileRef,
    pub problem_file: FileRef,
}

pub fn load_plan(domain: &Path, problem: &Path) -> Result<(Problem, SymbolicPlan, FileRef, FileRef), Failure> {
    let (dt, df) = read(domain)?;
    let (pt, pf) = read(problem)?;
    let d = parse_domain(&dt).map_err(|e| input_err(domain, e))?;
    let p = parse_problem(&d, &pt).map_err(|e| input_err(problem, e))?;
    let pl = plan(&d, &p).map_err(|e| Failure::Unsolvable(e.to_string()))?;
    Ok((p, pl, df, pf))
}

pub fn load_inputs(scenario: &Path, domain: &Path, problem: &Path) -> Result<Inputs, Failure> {
    let (st, sf) = read(scenario)?;
    let sc = load_scenario(&st).map_err(|e| input_err(scenario, e))?;
    let (p, pl, df, pf) = load_plan(domain, problem)?;
    Ok(Inputs { scenario: sc, problem: p, plan: pl, scenario_file: sf, domain_file: df, problem_file: pf })
}

impl Inputs {
    pub fn realization(&self) -> Result<Realization, Failure> {
        Realization::new(self.scenario.clone(), &self.problem, self.plan.clone())
            .map_err(|e| Failure::Input(format!("binding plan parameters: {e}")))
    }

    pub fn plan_lines(&self) -> Vec<String> {
        self.plan.actions.iter().map(|a| a.to_string()).collect()
    }
}

/// Optimizer settings; the full-scale defaults when no file is given.
pub fn load_config(path: Option<&Path>) -> Result<(CeConfig, Option<FileRef>), Failure> {
    let Some(path) = path else { return Ok((CeConfig::default(), None)) };
    let (text, file) = read(path)?;
    let cfg: CeConfig = serde_json::from_str(&text).map_err(|e| input_err(path, e))?;
    cfg.validate().map_err(|e| input_err(path, e))?;
    Ok((cfg, Some(file)))
}
