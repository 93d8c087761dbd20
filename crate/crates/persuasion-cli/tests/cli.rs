//! End-to-end tests of the `persuasion` binary: printed payoffs, report
//! files, the four exit codes, and parallelism-invariant experiment tables.

use std::path::Path;
use std::process::{Command, Output};

fn fixture() -> &'static str {
    concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../persuasion/fixtures/fig1.json"
    )
}

/// The binary under test, with ambient thread configuration stripped so
/// tests control it explicitly.
fn persuasion() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_persuasion"));
    cmd.env_remove("PERSUASION_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    persuasion()
        .args(args)
        .output()
        .expect("binary launches")
}

fn stdout_of(output: &Output) -> String {
    assert!(
        output.status.success(),
        "expected success, got {:?}; stderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process exits normally")
}

#[test]
fn solve_prints_the_bundled_example_payoffs() {
    let out = run(&["solve", "-i", fixture(), "--method", "myop"]);
    assert_eq!(stdout_of(&out), "6.000000\n");

    let out = run(&["solve", "-i", fixture(), "--method", "nosig-fs"]);
    assert_eq!(stdout_of(&out), "0.000000\n");
}

#[test]
fn solve_threat_and_am_print_equal_payoffs() {
    let parse = |out: &Output| -> f64 {
        stdout_of(out)
            .trim()
            .parse()
            .expect("payoff parses as a float")
    };
    let threat = parse(&run(&["solve", "-i", fixture(), "--method", "threat"]));
    let am = parse(&run(&["solve", "-i", fixture(), "--method", "am"]));
    // 1e-6 solver slack plus the 6-decimal print rounding.
    assert!(
        (threat - am).abs() <= 2e-6,
        "threat prints {threat}, advice-myopic prints {am}"
    );
    assert!((threat - 6.0).abs() <= 1e-5);
}

#[test]
fn solve_writes_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "solve",
        "-i",
        fixture(),
        "--method",
        "myop",
        "-o",
        report_path.to_str().unwrap(),
    ]);
    stdout_of(&out);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["method"], "myop");
    let payoff = report["principal_payoff"].as_f64().unwrap();
    assert!((payoff - 6.0).abs() <= 1e-6);
    assert!(
        report["strategy"].is_object(),
        "report should carry the committed strategy"
    );
}

#[test]
fn evaluate_reports_exact_and_monte_carlo_payoffs() {
    let dir = tempfile::tempdir().unwrap();
    let eval_path = dir.path().join("eval.json");
    let out = run(&[
        "evaluate",
        "-i",
        fixture(),
        "--method",
        "myop",
        "--samples",
        "500",
        "--seed",
        "1",
        "-o",
        eval_path.to_str().unwrap(),
    ]);
    let text = stdout_of(&out);
    assert!(text.contains("principal payoff: 6.000000"), "stdout: {text}");
    assert!(text.contains("monte carlo (500 samples"), "stdout: {text}");

    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&eval_path).unwrap()).unwrap();
    assert!((written["exact"]["principal_payoff"].as_f64().unwrap() - 6.0).abs() <= 1e-6);
    assert_eq!(
        written["monte_carlo"]["monte_carlo"]["n_samples"]
            .as_u64()
            .unwrap(),
        500
    );
}

#[test]
fn generate_writes_instances_that_solve() {
    let dir = tempfile::tempdir().unwrap();

    let random_path = dir.path().join("random.json");
    let out = run(&[
        "generate", "random", "--states", "4", "--actions", "3", "--thetas", "2",
        "--terminals", "1", "--seed", "3",
        "-o", random_path.to_str().unwrap(),
    ]);
    assert!(stdout_of(&out).contains("4 states"));
    let out = run(&["solve", "-i", random_path.to_str().unwrap(), "--method", "am"]);
    stdout_of(&out);

    let roadnav_path = dir.path().join("roadnav.json");
    let out = run(&[
        "generate", "roadnav", "--nodes", "8", "--edges", "12", "--thetas", "2",
        "--seed", "1",
        "-o", roadnav_path.to_str().unwrap(),
    ]);
    assert!(stdout_of(&out).contains("edges"));
    let out = run(&["solve", "-i", roadnav_path.to_str().unwrap(), "--method", "nosig-myop"]);
    stdout_of(&out);

    let graph_path = dir.path().join("k3.edges");
    std::fs::write(&graph_path, "3 3\n0 1\n1 2\n0 2\n").unwrap();
    let gadget_path = dir.path().join("indset.json");
    let out = run(&[
        "generate", "indset",
        "--graph", graph_path.to_str().unwrap(),
        "--gamma-tilde", "0.4",
        "-o", gadget_path.to_str().unwrap(),
    ]);
    let text = stdout_of(&out);
    assert!(text.contains("10 states"), "K3 gadget has 3·3+1 states: {text}");
    assert!(gadget_path.exists());
    assert!(dir.path().join("indset.map.json").exists());
}

#[test]
fn usage_errors_exit_2() {
    // Unknown method (rejected by argument parsing).
    let out = run(&["solve", "-i", fixture(), "--method", "sorcery"]);
    assert_eq!(exit_code(&out), 2);

    // Structurally impossible spec.
    let out = run(&["generate", "random", "--states", "0"]);
    assert_eq!(exit_code(&out), 2);

    // A sweep needs at least two instances per point.
    let out = run(&[
        "experiment", "random", "--param", "beta", "--grid", "0,1", "--instances", "1",
    ]);
    assert_eq!(exit_code(&out), 2);

    // Simulation of full control is meaningless: there is no agent policy.
    let out = run(&[
        "evaluate", "-i", fixture(), "--method", "full-control", "--samples", "10",
    ]);
    assert_eq!(exit_code(&out), 2);

    // Malformed thread configuration.
    let out = persuasion()
        .env("PERSUASION_THREADS", "many")
        .args(["solve", "-i", fixture(), "--method", "myop"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn io_errors_exit_3() {
    let out = run(&["solve", "-i", "/nonexistent/instance.json", "--method", "myop"]);
    assert_eq!(exit_code(&out), 3);

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ this is not an instance").unwrap();
    let out = run(&["solve", "-i", broken.to_str().unwrap(), "--method", "myop"]);
    assert_eq!(exit_code(&out), 3);

    let out = run(&["generate", "indset", "--graph", "/nonexistent/k3.edges"]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn computation_errors_exit_4_and_name_the_failure() {
    // An agent discount of 1 − 2⁻⁵³ passes validation, but on a rewarded
    // self-loop it puts the fixed point near 6.3·10¹⁵ and the per-iteration
    // change never falls to the convergence threshold within the iteration
    // budget: the solve must fail with the computation exit code and say
    // why.
    let stubborn = r#"{
        "states": [{ "name": "s0", "terminal": false }],
        "actions": ["a"],
        "thetas": ["t0"],
        "available_actions": [[0]],
        "transition": [[[1.0]]],
        "prior": [[1.0]],
        "principal_reward": [[[0.0]]],
        "agent_reward": [[[0.7]]],
        "gamma": 0.5,
        "gamma_tilde": 0.9999999999999999,
        "init_dist": [1.0]
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stubborn.json");
    std::fs::write(&path, stubborn).unwrap();

    let out = run(&["solve", "-i", path.to_str().unwrap(), "--method", "nosig-fs"]);
    assert_eq!(exit_code(&out), 4);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("did not converge"),
        "stderr should name the failure: {stderr}"
    );
}

fn tiny_experiment(output: &Path, threads: Option<&str>) -> Vec<String> {
    let mut args: Vec<&str> = vec![
        "experiment", "random",
        "--states", "3", "--actions", "2", "--thetas", "2", "--terminals", "1",
        "--param", "beta", "--grid", "0,0.5", "--instances", "2", "--seed", "5",
    ];
    let out_str = output.to_str().unwrap().to_owned();
    args.extend(["-o", &out_str]);
    if let Some(n) = threads {
        args.extend(["--threads", n]);
    }
    let out = run(&args);
    stdout_of(&out);
    std::fs::read_to_string(output)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn experiment_output_is_parallelism_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let serial = tiny_experiment(&dir.path().join("serial.dat"), Some("1"));
    let parallel = tiny_experiment(&dir.path().join("parallel.dat"), Some("8"));
    assert_eq!(serial, parallel, "thread count changed the table");

    assert_eq!(
        serial[0],
        "x\tnoSigMyop\tnoSigFS\toptSigMyop\toptSigAM\t\
         StdDev_noSigMyop\tStdDev_noSigFS\tStdDev_optSigMyop\tStdDev_optSigAM"
    );
    assert_eq!(serial.len(), 3, "header plus one row per grid value");

    // The environment variable is an alternative spelling of --threads.
    let via_env_path = dir.path().join("env.dat");
    let out = persuasion()
        .env("PERSUASION_THREADS", "2")
        .args([
            "experiment", "random",
            "--states", "3", "--actions", "2", "--thetas", "2", "--terminals", "1",
            "--param", "beta", "--grid", "0,0.5", "--instances", "2", "--seed", "5",
            "-o", via_env_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let via_env: Vec<String> = std::fs::read_to_string(&via_env_path)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect();
    assert_eq!(serial, via_env);
}
