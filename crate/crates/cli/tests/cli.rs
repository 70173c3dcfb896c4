//! End-to-end runs of the batch driver: full configs through the runner
//! (and twice through the installed binary), checking exit codes, record
//! payloads, CSV layout, and determinism.

use loglat_cli::runner::execute;
use std::path::Path;
use std::process::Command;

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn read_record(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("record.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn solve_config(out_dir: &Path, seed: u64) -> String {
    format!(
        r#"
[graph]
kind = "lattice"
dimension = 1
sides = [32]
boundary = "torus"

[potential]
class = "periodic"
period = 2
tile = [0.0, 0.5]

[solver]
p = 2.0
seed = {seed}

[action]
kind = "solve"

[output]
directory = "{}"
"#,
        out_dir.display()
    )
}

#[test]
fn solve_writes_record_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = write_config(tmp.path(), "run.toml", &solve_config(&out, 3));
    assert_eq!(execute(&config, None), 0);

    let record = read_record(&out);
    assert_eq!(record["results"]["kind"], "solve");
    let result = &record["results"]["result"];
    assert_eq!(result["converged"], true);
    assert!(result["residual_sup"].as_f64().unwrap() < 1e-8);
    let class = result["sign_class"].as_str().unwrap();
    assert!(class == "positive" || class == "negative", "{class}");
    // Serialization-faithfulness: the reloaded field reproduces the
    // recorded residual exactly.
    assert_eq!(
        record["results"]["reverification_drift"].as_f64().unwrap(),
        0.0
    );
    assert_eq!(record["version"], loglat_core::version());
    // Echoed config keeps the seed.
    assert_eq!(record["config"]["solver"]["seed"], 3);

    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 33);
    assert_eq!(lines[0], "index,x0,u,potential,residual");
    // Every row carries 5 fields and a parseable full-precision value.
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 5);
        let u: f64 = fields[2].parse().unwrap();
        assert!(u.is_finite());
    }
}

#[test]
fn identical_configs_reproduce_identical_results() {
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    let config_a = write_config(tmp.path(), "a.toml", &solve_config(&out_a, 11));
    let config_b = write_config(tmp.path(), "b.toml", &solve_config(&out_b, 11));
    assert_eq!(execute(&config_a, None), 0);
    assert_eq!(execute(&config_b, None), 0);
    let ra = read_record(&out_a);
    let rb = read_record(&out_b);
    // Timestamps differ; the numeric payloads must not.
    assert_eq!(ra["results"], rb["results"]);
    assert_eq!(
        std::fs::read_to_string(out_a.join("solution.csv")).unwrap(),
        std::fs::read_to_string(out_b.join("solution.csv")).unwrap()
    );
}

#[test]
fn seed_override_changes_the_echoed_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = write_config(tmp.path(), "run.toml", &solve_config(&out, 5));
    assert_eq!(execute(&config, Some(21)), 0);
    let record = read_record(&out);
    assert_eq!(record["config"]["solver"]["seed"], 21);
}

#[test]
fn verify_action_passes_and_tabulates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = format!(
        r#"
[graph]
kind = "lattice"
dimension = 2
sides = [4, 4]
boundary = "torus"

[potential]
class = "explicit"
values = [0.0, 0.1, 0.2, 0.3, 0.0, 0.1, 0.2, 0.3, 0.0, 0.1, 0.2, 0.3, 0.0, 0.1, 0.2, 0.3]

[solver]
seed = 1

[action]
kind = "verify"
checks = ["log_sobolev", "norm_equivalence", "scaling_identity", "sign_inequality", "lambda_shift", "max_at_one", "grad_check"]
cases = 5

[output]
directory = "{}"
"#,
        out.display()
    );
    let config = write_config(tmp.path(), "verify.toml", &body);
    assert_eq!(execute(&config, None), 0);
    let record = read_record(&out);
    assert_eq!(record["results"]["all_satisfied"], true);
    let reports = record["results"]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 7 * 5);
    let csv = std::fs::read_to_string(out.join("checks.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7 * 5);
    assert!(csv.starts_with("name,case,lhs,rhs,tolerance,satisfied\n"));
}

#[test]
fn appendix_action_records_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = format!(
        r#"
[action]
kind = "appendix"
p = 2.0
n_max = 10000

[output]
directory = "{}"
"#,
        out.display()
    );
    let config = write_config(tmp.path(), "series.toml", &body);
    assert_eq!(execute(&config, None), 0);
    let record = read_record(&out);
    let checkpoints = record["results"]["report"]["checkpoints"]
        .as_array()
        .unwrap();
    let ns: Vec<u64> = checkpoints
        .iter()
        .map(|c| c["n"].as_u64().unwrap())
        .collect();
    assert_eq!(ns, vec![10, 100, 1000, 10000]);
    let mass = record["results"]["report"]["mass_partial"].as_f64().unwrap();
    assert!((mass - 0.960485279658).abs() < 1e-9);
    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn compare_action_reports_strict_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // Side a: the periodic background lowered by a localized dip — its
    // ground level must sit strictly below the background's.
    let body = format!(
        r#"
[graph]
kind = "lattice"
dimension = 1
sides = [16]
boundary = "torus"

[potential]
class = "asymptotically_periodic"
period = 2
tile = [0.0, 0.5]
decay = [0.0, 0.0, 0.0, 0.0, 0.3, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]

[solver]
seed = 2

[action]
kind = "compare"
starts = 3

[action.potential_b]
class = "periodic"
period = 2
tile = [0.0, 0.5]

[output]
directory = "{}"
"#,
        out.display()
    );
    let config = write_config(tmp.path(), "compare.toml", &body);
    assert_eq!(execute(&config, None), 0);
    let record = read_record(&out);
    let cmp = &record["results"]["comparison"];
    assert_eq!(cmp["strict"], true);
    assert!(cmp["gap"].as_f64().unwrap() > 1e-6);
}

#[test]
fn general_graph_config_with_edge_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    std::fs::write(tmp.path().join("ring.csv"), "0,1\n1,2\n2,3\n3,4\n4,0\n").unwrap();
    let body = format!(
        r#"
[graph]
kind = "general"
vertices = 5
edge_file = "ring.csv"

[potential]
class = "explicit"
values = [0.0, 0.0, 0.0, 0.0, 0.0]

[solver]
seed = 7

[action]
kind = "solve"

[output]
directory = "{}"
"#,
        out.display()
    );
    let config = write_config(tmp.path(), "ring.toml", &body);
    assert_eq!(execute(&config, None), 0);
    let record = read_record(&out);
    assert_eq!(record["results"]["result"]["converged"], true);
    // General graphs dump by index, no coordinate columns.
    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(csv.starts_with("index,u,potential,residual\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn invalid_configs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    // Unparseable TOML.
    let bad = write_config(tmp.path(), "bad.toml", "this is not toml [");
    assert_eq!(execute(&bad, None), 2);
    // Parseable but invalid: solve without a graph.
    let body = r#"
[action]
kind = "solve"

[output]
directory = "out"
"#;
    let missing = write_config(tmp.path(), "missing.toml", body);
    assert_eq!(execute(&missing, None), 2);
    // Nonexistent config path.
    assert_eq!(execute(&tmp.path().join("nope.toml"), None), 2);
    // Inadmissible potential (inf V ≤ −1).
    let out = tmp.path().join("out");
    let body = format!(
        r#"
[graph]
kind = "lattice"
dimension = 1
sides = [4]
boundary = "torus"

[potential]
class = "explicit"
values = [-2.0, 0.0, 0.0, 0.0]

[action]
kind = "solve"

[output]
directory = "{}"
"#,
        out.display()
    );
    let inadmissible = write_config(tmp.path(), "inadmissible.toml", &body);
    assert_eq!(execute(&inadmissible, None), 2);
}

#[test]
fn starved_solver_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = format!(
        r#"
[graph]
kind = "lattice"
dimension = 1
sides = [32]
boundary = "torus"

[potential]
class = "periodic"
period = 2
tile = [0.0, 0.5]

[solver]
seed = 3
max_iterations = 1

[action]
kind = "solve"

[output]
directory = "{}"
"#,
        out.display()
    );
    let config = write_config(tmp.path(), "starved.toml", &body);
    assert_eq!(execute(&config, None), 3);
    // The record is still written, marked unconverged.
    let record = read_record(&out);
    assert_eq!(record["results"]["result"]["converged"], false);
}

#[test]
fn binary_runs_config_and_reports_usage_errors() {
    let bin = env!("CARGO_BIN_EXE_loglat");
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = write_config(tmp.path(), "run.toml", &solve_config(&out, 9));
    let ok = Command::new(bin).arg(&config).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("record.json").exists());

    // --seed override through the real argument parser.
    let seeded = Command::new(bin)
        .arg(&config)
        .arg("--seed")
        .arg("40")
        .output()
        .unwrap();
    assert_eq!(seeded.status.code(), Some(0));
    let record = read_record(&out);
    assert_eq!(record["config"]["solver"]["seed"], 40);

    // No arguments: usage error from the parser, nonzero exit.
    let none = Command::new(bin).output().unwrap();
    assert_ne!(none.status.code(), Some(0));
}
