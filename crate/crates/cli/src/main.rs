//! `realize`: symbolic planning, cross-entropy plan realization, replay and
//! plotting.
//!
//! Exit codes: 0 success, 1 input error, 2 no symbolic plan, 3 no
//! goal-feasible realization (or a replay that misses the goal).

mod history;
mod inputs;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use realize_core::ce::{optimize_with, CeError, Sample};
use realize_core::{ParamKind, Realization, Vec2};

use history::{
    read_history, read_sample_values, read_trace, BestFile, BestLine, Header, HistoryLine, LayoutLine, LineWriter,
    Manifest, Outputs, SampleLine, SamplesLine, Status, TraceHeader, HISTORY_VERSION, TRACE_KIND,
};
use inputs::{input_err, load_config, load_inputs, load_plan, read, read_checked, sha256_hex, Failure, FileRef, Inputs};

#[derive(Parser)]
#[command(name = "realize", version, about = "Plan realization for mobile manipulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the symbolic plan, one action per line.
    Plan {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
    },
    /// Search the plan parameters with the cross-entropy method.
    Realize(RealizeArgs),
    /// Re-run one parameter vector and report each action.
    Replay(ReplayArgs),
    /// Draw a run history or a trace as a top-down SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RealizeArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    /// Optimizer settings (JSON). Defaults to the full-scale batch sizes.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for history.jsonl, best.json and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Samples per iteration kept in the history for plotting.
    #[arg(long, default_value_t = 50)]
    plot_samples: usize,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long)]
    problem: Option<PathBuf>,
    /// best.json from a run, or a bare JSON array of values.
    #[arg(long)]
    sample: Option<PathBuf>,
    /// Take inputs and sample from a run manifest; hashes are checked.
    #[arg(long, conflicts_with_all = ["scenario", "domain", "problem", "sample"])]
    manifest: Option<PathBuf>,
    /// Write a JSON-lines trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Record every n-th simulation step in the trace.
    #[arg(long, default_value_t = 5)]
    stride: usize,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, conflicts_with = "trace", required_unless_present = "trace")]
    history: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Scenario path; defaults to the one recorded in the input.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Iteration to draw from a history; defaults to the last one.
    #[arg(long)]
    iter: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan { domain, problem } => cmd_plan(&domain, &problem),
        Command::Realize(a) => cmd_realize(&a),
        Command::Replay(a) => cmd_replay(&a),
        Command::Plot(a) => cmd_plot(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("realize: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<FileRef, Failure> {
    std::fs::write(path, bytes).map_err(|e| input_err(path, e))?;
    Ok(FileRef { path: path.display().to_string(), sha256: sha256_hex(bytes) })
}

fn cmd_plan(domain: &Path, problem: &Path) -> Result<(), Failure> {
    let (_, plan, _, _) = load_plan(domain, problem)?;
    print!("{plan}");
    Ok(())
}

fn layout_lines(r: &Realization) -> Vec<LayoutLine> {
    r.space
        .layout
        .iter()
        .zip(&r.space.specs)
        .map(|(e, s)| LayoutLine { spec: e.spec.clone(), kind: s.kind.name().into(), offset: e.offset, dim: e.dim })
        .collect()
}

fn cmd_realize(a: &RealizeArgs) -> Result<(), Failure> {
    let started = now_ms();
    let inputs = load_inputs(&a.scenario, &a.domain, &a.problem)?;
    let (mut config, config_file) = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        config.master_seed = s;
    }
    let r = inputs.realization()?;
    std::fs::create_dir_all(&a.out).map_err(|e| input_err(&a.out, e))?;
    let history_path = a.out.join("history.jsonl");
    let mut w = LineWriter::create(&history_path)?;
    let io = |e: std::io::Error| input_err(&history_path, e);
    let plan = inputs.plan_lines();
    let layout = layout_lines(&r);
    w.write(&HistoryLine::Header(Header {
        version: HISTORY_VERSION,
        scenario: inputs.scenario_file.clone(),
        domain: inputs.domain_file.clone(),
        problem: inputs.problem_file.clone(),
        plan: plan.clone(),
        layout: layout.clone(),
        config: config.clone(),
        plot_samples: a.plot_samples,
    }))
    .map_err(io)?;

    let mut write_err = None;
    let result = optimize_with(&r, &config, |rec, samples, outcomes| {
        let best = rec.best_cost_so_far.map_or_else(|| "-".to_string(), |c| format!("{c}"));
        eprintln!(
            "iter {:>3}: {:>5} sampled, {:>4} goal-feasible, {:>4} actions ok, best {best}",
            rec.iter, rec.n_sampled, rec.n_goal_feasible, rec.n_actions_ok
        );
        if write_err.is_some() {
            return;
        }
        let kept = samples.iter().zip(outcomes).take(a.plot_samples).enumerate();
        let line = SamplesLine { iter: rec.iter, samples: kept.map(|(i, (p, o))| SampleLine::new(i, p, o)).collect() };
        write_err = w
            .write(&HistoryLine::Iteration(rec.clone()))
            .and_then(|_| w.write(&HistoryLine::Samples(line)))
            .err();
    });
    if let Some(e) = write_err {
        return Err(io(e));
    }
    let report = match result {
        Ok(rep) => rep,
        Err(CeError::NoFeasibleRealization(rep)) => *rep,
        Err(CeError::InvalidConfig(m)) => return Err(Failure::Input(m)),
    };
    let (status, chosen): (Status, Option<&Sample>) = match (&report.best, &report.best_effort) {
        (Some(b), _) => (Status::Feasible, Some(b)),
        (None, Some(b)) => (Status::BestEffort, Some(b)),
        (None, None) => (Status::None, None),
    };
    let sample_line = |s: &Sample| SampleLine {
        index: s.index,
        values: s.values.clone(),
        goal_ok: s.outcome.goal_ok,
        all_actions_ok: s.outcome.all_actions_ok,
        total_cost: s.outcome.total_cost,
    };
    w.write(&HistoryLine::Best(BestLine {
        status,
        converged: report.converged,
        iterations: report.history.len(),
        iter: chosen.map(|s| s.iter),
        sample: chosen.map(sample_line),
    }))
    .map_err(io)?;
    drop(w);
    let history_bytes = std::fs::read(&history_path).map_err(io)?;
    let history_ref = FileRef { path: history_path.display().to_string(), sha256: sha256_hex(&history_bytes) };

    let best_ref = match chosen {
        Some(s) => {
            let best = BestFile {
                status,
                plan: plan.clone(),
                layout,
                iter: s.iter,
                index: s.index,
                total_cost: s.outcome.total_cost,
                values: s.values.clone(),
            };
            let text = serde_json::to_string_pretty(&best).expect("best sample serializes") + "\n";
            Some(write_file(&a.out.join("best.json"), text.as_bytes())?)
        }
        None => None,
    };
    let manifest = Manifest {
        tool: "realize".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: inputs.scenario_file.clone(),
        domain: inputs.domain_file.clone(),
        problem: inputs.problem_file.clone(),
        config_file,
        config,
        status,
        outputs: Outputs { history: history_ref, best: best_ref },
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&a.out.join("manifest.json"), text.as_bytes())?;

    println!("plan: {}", plan.join(" "));
    let conv = if report.converged { "converged" } else { "iteration cap" };
    println!("iterations: {} ({conv})", report.history.len());
    match (status, chosen) {
        (Status::Feasible, Some(s)) => {
            println!("best cost: {} (iteration {}, sample {})", s.outcome.total_cost, s.iter, s.index);
            Ok(())
        }
        (Status::BestEffort, Some(s)) => Err(Failure::Infeasible(format!(
            "no goal-feasible sample; best effort costs {} (iteration {}, sample {})",
            s.outcome.total_cost, s.iter, s.index
        ))),
        _ => Err(Failure::Infeasible("no sample succeeded at every action".into())),
    }
}

struct ReplayInputs {
    inputs: Inputs,
    values: Vec<f64>,
}

fn replay_inputs(a: &ReplayArgs) -> Result<ReplayInputs, Failure> {
    if let Some(mp) = &a.manifest {
        let (text, _) = read(mp)?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| input_err(mp, e))?;
        let best = m.outputs.best.ok_or_else(|| input_err(mp, "run has no best sample"))?;
        for f in [&m.scenario, &m.domain, &m.problem] {
            read_checked(Path::new(&f.path), &f.sha256)?;
        }
        let inputs = load_inputs(Path::new(&m.scenario.path), Path::new(&m.domain.path), Path::new(&m.problem.path))?;
        let bp = Path::new(&best.path);
        let values = read_sample_values(bp, &read_checked(bp, &best.sha256)?)?;
        return Ok(ReplayInputs { inputs, values });
    }
    let need = |p: &Option<PathBuf>, flag: &str| {
        p.clone().ok_or_else(|| Failure::Input(format!("replay needs --{flag} (or --manifest)")))
    };
    let (s, d, p, sp) = (need(&a.scenario, "scenario")?, need(&a.domain, "domain")?, need(&a.problem, "problem")?, need(&a.sample, "sample")?);
    let inputs = load_inputs(&s, &d, &p)?;
    let (text, _) = read(&sp)?;
    Ok(ReplayInputs { inputs, values: read_sample_values(&sp, &text)? })
}

fn cmd_replay(a: &ReplayArgs) -> Result<(), Failure> {
    let ri = replay_inputs(a)?;
    let r = ri.inputs.realization()?;
    if ri.values.len() != r.space.dim() {
        return Err(Failure::Input(format!(
            "sample has {} values, the plan needs {}",
            ri.values.len(),
            r.space.dim()
        )));
    }
    let params = r.space.vector(ri.values.clone());
    let res = if a.trace.is_some() { r.rollout_traced(&params, 0, a.stride) } else { r.rollout(&params, 0) };

    let plan = ri.inputs.plan_lines();
    let width = plan.iter().map(String::len).max().unwrap_or(0);
    for (i, name) in plan.iter().enumerate() {
        let status = if res.action_success[i] {
            "ok".to_string()
        } else {
            match res.failure {
                Some((j, f)) if j == i => format!("failed: {f}"),
                _ => "not executed".to_string(),
            }
        };
        println!("{name:<width$}  {:>6} steps  cost {:>8}  {status}", res.action_steps[i], res.action_cost[i]);
    }
    let feasible = res.goal_ok && res.all_actions_ok;
    println!("goal: {}", if res.goal_ok { "satisfied" } else { "not satisfied" });
    println!("total cost: {}", res.total_cost);

    if let (Some(path), Some(records)) = (&a.trace, &res.trace) {
        let mut w = LineWriter::create(path)?;
        let io = |e: std::io::Error| input_err(path, e);
        w.write(&TraceHeader {
            kind: TRACE_KIND.into(),
            v: realize_core::sim::TRACE_VERSION,
            scenario: ri.inputs.scenario_file.clone(),
            plan,
            values: ri.values,
            stride: a.stride.max(1),
            goal_ok: res.goal_ok,
            total_cost: res.total_cost,
        })
        .map_err(io)?;
        for rec in records {
            w.write(rec).map_err(io)?;
        }
    }
    if feasible {
        Ok(())
    } else {
        Err(Failure::Infeasible("replayed sample does not realize the goal".into()))
    }
}

/// Scenario for a plot: the explicit path, else the recorded one, with the
/// recorded hash enforced.
fn plot_scenario(explicit: &Option<PathBuf>, recorded: &FileRef) -> Result<realize_core::Scenario, Failure> {
    let path = explicit.clone().unwrap_or_else(|| PathBuf::from(&recorded.path));
    let text = read_checked(&path, &recorded.sha256)?;
    realize_core::load_scenario(&text).map_err(|e| input_err(&path, e))
}

/// Planar markers of one sample: every location and the position part of
/// every pose.
fn markers(r: &Realization, values: &[f64]) -> Vec<Vec2> {
    r.space
        .layout
        .iter()
        .zip(&r.space.specs)
        .filter(|(_, s)| !matches!(s.kind, ParamKind::Yaw { .. }))
        .map(|(e, _)| Vec2::new(values[e.offset], values[e.offset + 1]))
        .collect()
}

fn base_path(r: &Realization, values: &[f64]) -> Vec<Vec2> {
    let res = r.rollout_traced(&r.space.vector(values.to_vec()), 0, 5);
    res.trace.unwrap_or_default().iter().map(|t| Vec2::new(t.base[0], t.base[1])).collect()
}

fn cmd_plot(a: &PlotArgs) -> Result<(), Failure> {
    let svg = if let Some(hp) = &a.history {
        let (text, _) = read(hp)?;
        let h = read_history(hp, &text)?;
        let sc = plot_scenario(&a.scenario, &h.header.scenario)?;
        let (problem, plan, _, _) = {
            let d = Path::new(&h.header.domain.path);
            let p = Path::new(&h.header.problem.path);
            read_checked(d, &h.header.domain.sha256)?;
            read_checked(p, &h.header.problem.sha256)?;
            load_plan(d, p)?
        };
        let lines: Vec<String> = plan.actions.iter().map(|x| x.to_string()).collect();
        if lines != h.header.plan {
            return Err(input_err(hp, "recorded plan differs from the one the inputs give now"));
        }
        let r = Realization::new(sc, &problem, plan).map_err(|e| input_err(hp, e))?;
        let want = a.iter.or_else(|| h.samples.last().map(|s| s.iter));
        let it = want
            .and_then(|j| h.samples.iter().find(|s| s.iter == j))
            .ok_or_else(|| input_err(hp, format!("no samples recorded for iteration {want:?}")))?;
        let paths: Vec<svg::SamplePath> = it
            .samples
            .iter()
            .map(|s| {
                if s.values.len() != r.space.dim() {
                    return Err(input_err(hp, format!("sample {} has the wrong length", s.index)));
                }
                Ok(svg::SamplePath { feasible: s.goal_ok, base: base_path(&r, &s.values), markers: markers(&r, &s.values) })
            })
            .collect::<Result<_, _>>()?;
        let best = h.best.as_ref().and_then(|b| b.sample.as_ref()).filter(|s| s.goal_ok).map(|s| base_path(&r, &s.values));
        let title = format!("iteration {}: {} samples", it.iter, it.samples.len());
        svg::history_svg(&r.scenario, &title, &paths, best.as_deref())
    } else {
        let tp = a.trace.as_ref().expect("clap requires --history or --trace");
        let (header, records) = read_trace(tp)?;
        let sc = plot_scenario(&a.scenario, &header.scenario)?;
        let title = format!("trace: {} records, goal {}", records.len(), if header.goal_ok { "ok" } else { "failed" });
        svg::trace_svg(&sc, &title, &records)
    };
    write_file(&a.out, svg.as_bytes())?;
    Ok(())
}
