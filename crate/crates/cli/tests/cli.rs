//! End-to-end tests of the binary: the gen/run/verify/sweep workflow, the
//! exit-status contract, and byte determinism of generated files.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bitelect"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn gen_run_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "gen", "--family", "ring", "--nodes", "9", "--ids", "random", "--seed", "5", "-o",
            "ring.graph",
        ],
    );
    assert_exit(&out, 0);

    let out = run_in(
        dir.path(),
        &[
            "run",
            "ring.graph",
            "--trace-out",
            "ring.trace",
            "--assertion-level",
            "full",
        ],
    );
    assert_exit(&out, 0);
    let summary = stdout(&out);
    for field in [
        "n=9",
        "m=9",
        "D=4",
        "max_id=",
        "alpha_len=",
        "rounds_election=",
        "rounds_quiescent=",
        "bound=",
        "margin=",
        "elected_id=9",
        "outcome=completed",
    ] {
        assert!(summary.contains(field), "missing {field} in: {summary}");
    }

    let out = run_in(dir.path(), &["verify", "ring.trace", "ring.graph"]);
    assert_exit(&out, 0);
    let report = stdout(&out);
    for check in [
        "spreading-convergence: pass",
        "election: pass",
        "spanning-tree: pass",
        "neighbor-forms: pass",
        "action-sequences: pass",
        "trace-replay: pass",
    ] {
        assert!(report.contains(check), "missing {check} in: {report}");
    }
}

#[test]
fn corrupted_trace_fails_verification_with_locator() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &run_in(
            dir.path(),
            &["gen", "--family", "path", "--nodes", "5", "-o", "p.graph"],
        ),
        0,
    );
    assert_exit(
        &run_in(dir.path(), &["run", "p.graph", "--trace-out", "p.trace"]),
        0,
    );

    let path = dir.path().join("p.trace");
    let text = std::fs::read_to_string(&path).unwrap();
    // Flip one letter of one recorded word.
    let target = "node 2 z=11 ";
    assert!(text.contains(target), "fixture drifted");
    std::fs::write(&path, text.replacen(target, "node 2 z=10 ", 1)).unwrap();

    let out = run_in(dir.path(), &["verify", "p.trace", "p.graph"]);
    assert_exit(&out, 1);
    let report = stdout(&out);
    assert!(report.contains("FAIL"), "{report}");
    assert!(report.contains("round"), "no locator in: {report}");
}

#[test]
fn timed_out_trace_is_refused_distinctly() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &run_in(
            dir.path(),
            &["gen", "--family", "path", "--nodes", "6", "-o", "p.graph"],
        ),
        0,
    );
    let out = run_in(
        dir.path(),
        &[
            "run",
            "p.graph",
            "--max-rounds",
            "3",
            "--trace-out",
            "partial.trace",
        ],
    );
    assert_exit(&out, 1);
    assert!(stdout(&out).contains("outcome=timeout"));

    let out = run_in(dir.path(), &["verify", "partial.trace", "p.graph"]);
    assert_exit(&out, 3);
}

#[test]
fn mismatched_pair_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    for (family, name) in [("path", "a.graph"), ("ring", "b.graph")] {
        assert_exit(
            &run_in(
                dir.path(),
                &["gen", "--family", family, "--nodes", "6", "-o", name],
            ),
            0,
        );
    }
    assert_exit(
        &run_in(dir.path(), &["run", "a.graph", "--trace-out", "a.trace"]),
        0,
    );
    let out = run_in(dir.path(), &["verify", "a.trace", "b.graph"]);
    assert_exit(&out, 2);
}

#[test]
fn generation_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "gen", "--family", "gnp", "--nodes", "20", "--p", "0.2", "--seed", "7", "--ids", "random",
    ];
    let mut outputs = Vec::new();
    for name in ["x.graph", "y.graph"] {
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["-o", name]);
        assert_exit(&run_in(dir.path(), &full), 0);
        outputs.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    for (graph, trace) in [("x.graph", "x.trace"), ("y.graph", "y.trace")] {
        assert_exit(
            &run_in(dir.path(), &["run", graph, "--trace-out", trace]),
            0,
        );
    }
    let a = std::fs::read(dir.path().join("x.trace")).unwrap();
    let b = std::fs::read(dir.path().join("y.trace")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn custom_ids_and_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "gen",
            "--family",
            "path",
            "--nodes",
            "3",
            "--ids",
            "custom",
            "--custom-ids",
            "23,5,99",
            "-o",
            "c.graph",
        ],
    );
    assert_exit(&out, 0);
    let text = std::fs::read_to_string(dir.path().join("c.graph")).unwrap();
    assert!(text.contains("0 23") && text.contains("2 99"));

    // Duplicate identifiers are a load error.
    let out = run_in(
        dir.path(),
        &[
            "gen",
            "--family",
            "path",
            "--nodes",
            "3",
            "--ids",
            "custom",
            "--custom-ids",
            "7,7,2",
        ],
    );
    assert_exit(&out, 2);
}

#[test]
fn adversarial_assignment_places_max_at_an_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &run_in(
            dir.path(),
            &[
                "gen",
                "--family",
                "path",
                "--nodes",
                "16",
                "--ids",
                "adversarial",
                "-o",
                "adv.graph",
            ],
        ),
        0,
    );
    let text = std::fs::read_to_string(dir.path().join("adv.graph")).unwrap();
    // On a path only the endpoints have full eccentricity; node 0 wins ties.
    assert!(text.lines().any(|l| l == "0 16"), "{text}");

    let out = run_in(
        dir.path(),
        &["run", "adv.graph", "--assertion-level", "full"],
    );
    assert_exit(&out, 0);
    assert!(stdout(&out).contains("elected_id=16"));
}

#[test]
fn sweep_writes_the_pinned_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "sweep",
            "--axis",
            "diameter",
            "--values",
            "4,8",
            "--repetitions",
            "2",
            "-o",
            "sweep.csv",
        ],
    );
    assert_exit(&out, 0);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("family,n,m,D,id_bits,trial,rounds_election,rounds_quiescent,bound,margin")
    );
    assert_eq!(lines.count(), 4);
}

#[test]
fn final_only_traces_verify_with_skips() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &run_in(
            dir.path(),
            &["gen", "--family", "star", "--nodes", "7", "-o", "s.graph"],
        ),
        0,
    );
    assert_exit(
        &run_in(
            dir.path(),
            &[
                "run",
                "s.graph",
                "--granularity",
                "final-only",
                "--trace-out",
                "s.trace",
            ],
        ),
        0,
    );
    let out = run_in(dir.path(), &["verify", "s.trace", "s.graph"]);
    assert_exit(&out, 0);
    let report = stdout(&out);
    assert!(report.contains("neighbor-forms: skipped"), "{report}");
    assert!(report.contains("election: pass"), "{report}");
}

#[test]
fn missing_required_input_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    // gnp without --p
    let out = run_in(dir.path(), &["gen", "--family", "gnp", "--nodes", "5"]);
    assert_exit(&out, 2);
    // nonexistent graph file
    let out = run_in(dir.path(), &["run", "missing.graph"]);
    assert_exit(&out, 2);
}

fn _unused(_: PathBuf) {}
