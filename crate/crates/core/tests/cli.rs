//! Exit-code and output contract of the `nashflow` binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use nashflow::cli::{run, EXIT_INVALID, EXIT_OK, EXIT_PARSE};
use nashflow::io;
use nashflow::validator::mutations::mutation_fixtures;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn nashflow(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("nashflow").chain(args.iter().copied()), &mut out, &mut err);
    Outcome { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn solve_into(dir: &Path, name: &str) -> (PathBuf, Outcome) {
    let path = dir.join(format!("{name}.trajectory.json"));
    let outcome = nashflow(&["solve", &fixture(&format!("{name}.json")), "--out", path.to_str().unwrap()]);
    (path, outcome)
}

#[test]
fn validate_accepts_and_rejects() {
    for name in ["n1_left.json", "n1_right.json", "diamond.json"] {
        let r = nashflow(&["validate", &fixture(name)]);
        assert_eq!(r.code, EXIT_OK, "{name}: {}", r.err);
        assert!(r.out.starts_with("ok: "));
    }
    let r = nashflow(&["validate", &fixture("invalid_storage.json")]);
    assert_eq!(r.code, EXIT_INVALID);
    assert_eq!(r.out.lines().filter(|l| l.starts_with("violation: ")).count(), 2);
}

#[test]
fn malformed_input_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"nodes\": [\"s\", ").unwrap();
    for cmd in ["validate", "solve", "thin-flow", "check", "plot"] {
        let mut args = vec![cmd, broken.to_str().unwrap()];
        if cmd == "plot" {
            args.extend(["--out", "/dev/null"]);
        }
        assert_eq!(nashflow(&args).code, EXIT_PARSE, "{cmd}");
    }
    assert_eq!(nashflow(&["solve", &fixture("n1_left.json"), "--horizon", "soon"]).code, EXIT_PARSE);
    assert_eq!(nashflow(&["solve", &fixture("n1_left.json"), "--horizon", "-1"]).code, EXIT_PARSE);
}

#[test]
fn invalid_network_does_not_solve() {
    let r = nashflow(&["solve", &fixture("invalid_storage.json")]);
    assert_eq!(r.code, EXIT_INVALID);
    assert!(r.out.is_empty());
}

#[test]
fn solve_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let (_, left) = solve_into(dir.path(), "n1_left");
    assert_eq!(left.code, EXIT_OK);
    assert!(left.out.starts_with("2 phases; boundary θ=3; steady state\n"), "{}", left.out);
    let (_, right) = solve_into(dir.path(), "n1_right");
    assert!(right.out.starts_with("2 phases; boundary θ=6; steady state\n"), "{}", right.out);
    assert!(right.out.contains("c_v = 2/3"));
    let capped = nashflow(&["solve", &fixture("diamond.json"), "--phase-cap", "2"]);
    assert_eq!(capped.code, EXIT_OK);
    assert!(capped.err.starts_with("2 phases;") && capped.err.contains("phase cap reached"), "{}", capped.err);
    assert!(capped.out.contains("\"phase_cap\""));
}

#[test]
fn check_passes_solver_output_and_flags_edits() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["n1_left", "n1_right", "diamond"] {
        let (path, _) = solve_into(dir.path(), name);
        let r = nashflow(&["check", path.to_str().unwrap()]);
        assert_eq!(r.code, EXIT_OK, "{name}: {}", r.err);
        assert!(!r.err.contains("FAIL"));
        let report: serde_json::Value = serde_json::from_str(&r.out).unwrap();
        assert!(report.is_object());
    }

    // Phase rates are recorded alongside the functions, so editing one loads
    // fine and then fails the derivative check.
    let (path, _) = solve_into(dir.path(), "n1_left");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["phases"][0]["flow_rates"][2] = "1".into();
    let edited = dir.path().join("edited.json");
    std::fs::write(&edited, serde_json::to_string(&doc).unwrap()).unwrap();
    let r = nashflow(&["check", edited.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_INVALID);
    assert!(r.err.contains("FAIL"));

    // A derived table that disagrees with the primary functions is refused
    // before any check runs.
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["arcs"][0]["queue"] = doc["arcs"][0]["load"].clone();
    std::fs::write(&edited, serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(nashflow(&["check", edited.to_str().unwrap()]).code, EXIT_PARSE);

    // Consistently broken trajectories load and fail the checks.
    for m in mutation_fixtures() {
        let file = dir.path().join(format!("{}.json", m.name));
        std::fs::write(&file, io::trajectory_to_json(&m.trajectory)).unwrap();
        let r = nashflow(&["check", file.to_str().unwrap()]);
        assert_eq!(r.code, EXIT_INVALID, "{}: {}", m.name, r.err);
        assert!(r.err.contains("FAIL"));
    }
}

#[test]
fn thin_flow_reports_the_factor() {
    let r = nashflow(&["thin-flow", &fixture("n1_right_phase2.json")]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let doc: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(doc["valid"], true);
    let v = doc["nodes"].as_array().unwrap().iter().find(|n| n["node"] == "v").unwrap();
    assert_eq!(v["factor"], "2/3");
    assert_eq!(nashflow(&["thin-flow", &fixture("n1_left.json")]).code, EXIT_PARSE);
}

#[test]
fn plot_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let (path, _) = solve_into(dir.path(), "n1_right");
    for what in ["labels", "queues", "loads"] {
        let svg = dir.path().join(format!("{what}.svg"));
        let r = nashflow(&["plot", path.to_str().unwrap(), "--what", what, "--out", svg.to_str().unwrap()]);
        assert_eq!(r.code, EXIT_OK, "{}", r.err);
        assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    }
    let svg = dir.path().join("x.svg");
    let r = nashflow(&["plot", path.to_str().unwrap(), "--out", svg.to_str().unwrap(), "--plot-horizon", "0"]);
    assert_eq!(r.code, EXIT_PARSE);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_nashflow");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let ok = status(&["validate", &fixture("n1_left.json")]);
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert_eq!(status(&["validate", &fixture("invalid_storage.json")]).status.code(), Some(EXIT_INVALID));
    assert_eq!(status(&["validate", "/nonexistent/net.json"]).status.code(), Some(EXIT_PARSE));
    let solved = status(&["solve", &fixture("n1_right.json")]);
    assert_eq!(solved.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&solved.stderr).contains("c_v = 2/3"));
    assert!(String::from_utf8_lossy(&solved.stdout).starts_with('{'));
}
