use std::process::{Command, Output};

const D8: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/d8.csv");

fn fairaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairaudit"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn measure_db() {
    let o = fairaudit(&[
        "measure",
        "--name",
        "db",
        "--input",
        D8,
        "--predictions",
        "pred",
        "--sensitive",
        "gender",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0.666667\n");
}

#[test]
fn measure_json_has_trace() {
    let o = fairaudit(&[
        "measure",
        "--name",
        "one_minus_prule",
        "--input",
        D8,
        "--predictions",
        "pred",
        "--sensitive",
        "gender",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let cell = doc["cells"]
        .as_object()
        .unwrap()
        .values()
        .next()
        .unwrap()
        .clone();
    assert_eq!(cell["value"].to_string(), "0.666667");
    assert_eq!(doc["metadata"]["n"], 8);
}

#[test]
fn audit_multi_json() {
    let o = fairaudit(&[
        "audit",
        "--input",
        D8,
        "--predictions",
        "pred",
        "--labels",
        "label",
        "--sensitive",
        "gender",
        "--report",
        "multi",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["cells"]["pr/minratio"]["value"].to_string(), "0.333333");
}

#[test]
fn missing_predictions_is_usage_error() {
    let o = fairaudit(&["audit", "--input", D8, "--sensitive", "gender"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--predictions"));
}

#[test]
fn validation_errors_exit_one_and_name_the_flag() {
    let o = fairaudit(&[
        "audit",
        "--input",
        D8,
        "--predictions",
        "score",
        "--labels",
        "label",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("--predictions") && err.contains("row 1"),
        "{err}"
    );

    let o = fairaudit(&[
        "audit",
        "--input",
        "/no/such/file.csv",
        "--predictions",
        "pred",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--input"));

    let o = fairaudit(&[
        "measure",
        "--name",
        "nope",
        "--input",
        D8,
        "--predictions",
        "pred",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--name"));

    let o = fairaudit(&[
        "audit",
        "--input",
        D8,
        "--predictions",
        "pred",
        "--sensitive",
        "gender",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nothing to report"));

    let o = fairaudit(&[
        "measure",
        "--name",
        "ib",
        "--input",
        D8,
        "--predictions",
        "pred",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--features"), "{}", stderr(&o));
}

#[test]
fn epsilon_zero_is_no_flag() {
    let base = [
        "audit",
        "--input",
        D8,
        "--predictions",
        "pred",
        "--labels",
        "label",
        "--scores",
        "score",
        "--sensitive",
        "gender,race",
        "--format",
        "json",
    ];
    let without = fairaudit(&base);
    let mut with: Vec<&str> = base.to_vec();
    with.extend(["--epsilon", "0"]);
    assert_eq!(without.stdout, fairaudit(&with).stdout);
}

#[test]
fn explain_cell() {
    let o = fairaudit(&[
        "explain",
        "--input",
        D8,
        "--predictions",
        "pred",
        "--labels",
        "label",
        "--sensitive",
        "gender",
        "--row",
        "pr",
        "--col",
        "minratio",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("winner: (gender=f, gender=m)"), "{text}");

    let o = fairaudit(&[
        "explain",
        "--input",
        D8,
        "--predictions",
        "pred",
        "--labels",
        "label",
        "--sensitive",
        "gender",
        "--row",
        "pr",
        "--col",
        "nope",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--row/--col"));
}

#[test]
fn output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let o = fairaudit(&[
        "audit",
        "--input",
        D8,
        "--predictions",
        "pred",
        "--labels",
        "label",
        "--sensitive",
        "gender",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(path).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "measure,min,wmean,max,maxdiff,minratio"
    );
}

#[test]
fn individual_measure_without_groups() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ind.csv");
    std::fs::write(&path, "pred,x1,x2\n1,0,0\n0,3,4\n1,6,8\n").unwrap();
    let o = fairaudit(&[
        "measure",
        "--name",
        "ib",
        "--input",
        path.to_str().unwrap(),
        "--predictions",
        "pred",
        "--features",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0.200000\n");
}
