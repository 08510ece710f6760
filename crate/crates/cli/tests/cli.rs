use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn asset(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(rel)
}

fn realize(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_realize")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"{"n_start":60,"n_end":20,"ramp_iters":2,"n_elite":5,"max_iters":4,
"convergence_std_tol":0.01,"std_floor":0.001,"noise_injection_std":0.05}"#;

struct Push {
    dir: tempfile::TempDir,
    scenario: PathBuf,
    domain: PathBuf,
    problem: PathBuf,
    config: PathBuf,
}

fn push_inputs() -> Push {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.json");
    std::fs::write(&config, SMALL).unwrap();
    Push {
        scenario: asset("scenarios/push.json"),
        domain: asset("pddl/push_domain.pddl"),
        problem: asset("pddl/push_problem.pddl"),
        config,
        dir,
    }
}

fn run_push(p: &Push, out: &Path, seed: &str) -> Output {
    realize(&[
        "realize",
        "--scenario",
        s(&p.scenario),
        "--domain",
        s(&p.domain),
        "--problem",
        s(&p.problem),
        "--config",
        s(&p.config),
        "--seed",
        seed,
        "--out",
        s(out),
    ])
}

#[test]
fn plan_prints_one_action_per_line() {
    let d = asset("pddl/pick_and_place_domain.pddl");
    let p = asset("pddl/pick_and_place_problem.pddl");
    let o = realize(&["plan", "--domain", s(&d), "--problem", s(&p)]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "moveTo(Table_1)\ngrasp(Cube)\nmoveTo(Table_2)\nplace(Target)\nmoveTo(Exit)\n"
    );
}

#[test]
fn unsolvable_problem_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(asset("pddl/push_problem.pddl")).unwrap();
    // no push_from fact: push is never applicable
    let text = text.replace("(push_from rod_pose rod_loc)", "");
    let p = dir.path().join("problem.pddl");
    std::fs::write(&p, text).unwrap();
    let o = realize(&["plan", "--domain", s(&asset("pddl/push_domain.pddl")), "--problem", s(&p)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pddl");
    std::fs::write(&bad, "(define (domain").unwrap();
    let o = realize(&["plan", "--domain", s(&bad), "--problem", s(&asset("pddl/push_problem.pddl"))]);
    assert_eq!(code(&o), 1);
    let o = realize(&["plan", "--domain", s(&dir.path().join("missing.pddl")), "--problem", s(&bad)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn elite_count_above_batch_size_exits_1() {
    let p = push_inputs();
    std::fs::write(&p.config, SMALL.replace("\"n_elite\":5", "\"n_elite\":21")).unwrap();
    let out = p.dir.path().join("run");
    assert_eq!(code(&run_push(&p, &out, "0")), 1);
}

#[test]
fn same_seed_gives_identical_history_bytes() {
    let p = push_inputs();
    let a = p.dir.path().join("a");
    let b = p.dir.path().join("b");
    let c = p.dir.path().join("c");
    for (out, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let o = run_push(&p, out, seed);
        assert!(matches!(code(&o), 0 | 3), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "history.jsonl"), read(&b, "history.jsonl"));
    assert_eq!(read(&a, "best.json"), read(&b, "best.json"));
    assert_ne!(read(&a, "history.jsonl"), read(&c, "history.jsonl"));
}

#[test]
fn history_lines_are_ordered_and_best_cost_never_rises() {
    let p = push_inputs();
    let out = p.dir.path().join("run");
    run_push(&p, &out, "3");
    let text = std::fs::read_to_string(out.join("history.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["kind"], "header");
    assert_eq!(lines.last().unwrap()["kind"], "best");
    let mut last = f64::INFINITY;
    for l in lines.iter().filter(|l| l["kind"] == "iteration") {
        if let Some(c) = l["best_cost_so_far"].as_f64() {
            assert!(c <= last);
            last = c;
        }
        assert!(l["n_goal_feasible"].as_u64() <= l["n_actions_ok"].as_u64());
    }
    let samples = lines.iter().filter(|l| l["kind"] == "samples").count();
    assert_eq!(samples, lines.iter().filter(|l| l["kind"] == "iteration").count());
}

#[test]
fn unreachable_goal_exits_3_and_still_writes_history() {
    let p = push_inputs();
    let text = std::fs::read_to_string(&p.scenario).unwrap();
    let far = r#""robot_region": {"min": [-2.4, 1.8], "max": [-2.3, 1.9]}"#;
    let text = text.replace(r#""robot_region": {"min": [-2.5, -2.5], "max": [3.0, 2.0]}"#, far);
    let sc = p.dir.path().join("far.json");
    std::fs::write(&sc, text).unwrap();
    let p = Push { scenario: sc, ..p };
    let out = p.dir.path().join("run");
    assert_eq!(code(&run_push(&p, &out, "0")), 3);
    let history = std::fs::read_to_string(out.join("history.jsonl")).unwrap();
    assert!(history.lines().count() > 2);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_ne!(m["status"], "feasible");
}

#[test]
fn zero_vector_replay_reports_each_action_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("zero.json");
    std::fs::write(&sample, serde_json::to_string(&vec![0.0; 11]).unwrap()).unwrap();
    let o = realize(&[
        "replay",
        "--scenario",
        s(&asset("scenarios/ramp.json")),
        "--domain",
        s(&asset("pddl/pick_and_place_domain.pddl")),
        "--problem",
        s(&asset("pddl/pick_and_place_problem.pddl")),
        "--sample",
        s(&sample),
    ]);
    assert_eq!(code(&o), 3);
    let out = String::from_utf8(o.stdout).unwrap();
    let action_lines: Vec<&str> = out.lines().take(5).collect();
    assert!(action_lines[0].starts_with("moveTo(Table_1)"));
    let failed = action_lines.iter().position(|l| l.contains("failed:")).expect("one action fails");
    assert!(action_lines[failed + 1..].iter().all(|l| l.contains("not executed")), "{out}");
    assert!(out.contains("goal: not satisfied"));
}

#[test]
fn wrong_length_sample_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("short.json");
    std::fs::write(&sample, "[0.0, 1.0]").unwrap();
    let o = realize(&[
        "replay",
        "--scenario",
        s(&asset("scenarios/push.json")),
        "--domain",
        s(&asset("pddl/push_domain.pddl")),
        "--problem",
        s(&asset("pddl/push_problem.pddl")),
        "--sample",
        s(&sample),
    ]);
    assert_eq!(code(&o), 1);
}

/// Replay of a hand-picked push realization, traced and plotted twice.
#[test]
fn replay_trace_and_plot_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("push.json");
    std::fs::write(&sample, "[0.8, -1.0, 0.8, 0.05, 0.53, 0.0]").unwrap();
    let replay = |trace: &Path| {
        realize(&[
            "replay",
            "--scenario",
            s(&asset("scenarios/push.json")),
            "--domain",
            s(&asset("pddl/push_domain.pddl")),
            "--problem",
            s(&asset("pddl/push_problem.pddl")),
            "--sample",
            s(&sample),
            "--trace",
            s(trace),
            "--stride",
            "3",
        ])
    };
    let (t1, t2) = (dir.path().join("t1.jsonl"), dir.path().join("t2.jsonl"));
    assert_eq!(code(&replay(&t1)), 0);
    assert_eq!(code(&replay(&t2)), 0);
    assert_eq!(std::fs::read(&t1).unwrap(), std::fs::read(&t2).unwrap());

    let (s1, s2) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    assert_eq!(code(&realize(&["plot", "--trace", s(&t1), "--out", s(&s1)])), 0);
    assert_eq!(code(&realize(&["plot", "--trace", s(&t2), "--out", s(&s2)])), 0);
    let svg = std::fs::read_to_string(&s1).unwrap();
    assert_eq!(svg, std::fs::read_to_string(&s2).unwrap());
    assert!(svg.starts_with("<svg") && svg.contains("id=\"base\"") && svg.contains("id=\"padding\""));
}

#[test]
fn history_plot_has_separate_classes_and_is_deterministic() {
    let p = push_inputs();
    let out = p.dir.path().join("run");
    run_push(&p, &out, "1");
    let h = out.join("history.jsonl");
    let (a, b) = (out.join("a.svg"), out.join("b.svg"));
    assert_eq!(code(&realize(&["plot", "--history", s(&h), "--iter", "0", "--out", s(&a)])), 0);
    assert_eq!(code(&realize(&["plot", "--history", s(&h), "--iter", "0", "--out", s(&b)])), 0);
    let svg = std::fs::read_to_string(&a).unwrap();
    assert_eq!(svg, std::fs::read_to_string(&b).unwrap());
    // uniform push samples are roughly half goal-feasible
    assert!(svg.contains("id=\"failed\"") && svg.contains("id=\"feasible\""));
    assert!(svg.contains("id=\"feasible-samples\"") && svg.contains("id=\"regions\""));
}

#[test]
fn plot_rejects_schema_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("h.jsonl");
    std::fs::write(&bogus, "{\"kind\":\"header\",\"version\":99}\n").unwrap();
    let svg = dir.path().join("x.svg");
    assert_eq!(code(&realize(&["plot", "--history", s(&bogus), "--out", s(&svg)])), 1);
    std::fs::write(&bogus, "{\"kind\":\"trace\",\"v\":99}\n").unwrap();
    assert_eq!(code(&realize(&["plot", "--trace", s(&bogus), "--out", s(&svg)])), 1);
}

#[test]
fn plot_rejects_edited_scenario() {
    let p = push_inputs();
    let out = p.dir.path().join("run");
    run_push(&p, &out, "2");
    let edited = p.dir.path().join("edited.json");
    let text = std::fs::read_to_string(&p.scenario).unwrap().replace("\"horizon\": 30.0", "\"horizon\": 31.0");
    std::fs::write(&edited, text).unwrap();
    let svg = out.join("x.svg");
    let o = realize(&["plot", "--history", s(&out.join("history.jsonl")), "--scenario", s(&edited), "--out", s(&svg)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn manifest_replay_matches_best_cost() {
    let p = push_inputs();
    let out = p.dir.path().join("run");
    let o = run_push(&p, &out, "4");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let best: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("best.json")).unwrap()).unwrap();
    let o = realize(&["replay", "--manifest", s(&out.join("manifest.json"))]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    let line = stdout.lines().find_map(|l| l.strip_prefix("total cost: ")).unwrap();
    assert_eq!(line.parse::<f64>().unwrap(), best["total_cost"].as_f64().unwrap());
}
