use std::fs::File;

use fairaudit::engine::{evaluate, named_measure, MeasureSpec};
use fairaudit::report::{
    combine, explain, multireport, serialize, to_json, unireport, Format, ReportConfig,
};
use fairaudit::{load_table, ColumnSpec, Error, GroupSet, Outcome};

const D8: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/d8.csv");

fn columns(sensitive: &[&str]) -> ColumnSpec {
    ColumnSpec {
        predictions: "pred".into(),
        labels: Some("label".into()),
        scores: Some("score".into()),
        sensitive: sensitive.iter().map(|s| s.to_string()).collect(),
        ..ColumnSpec::default()
    }
}

fn d8(sensitive: &[&str]) -> (fairaudit::Dataset, GroupSet) {
    let (ds, cats) = load_table(File::open(D8).unwrap(), &columns(sensitive)).unwrap();
    (ds, GroupSet::from_categories(&cats).unwrap())
}

#[test]
fn fixture_loads() {
    let (ds, gs) = d8(&["gender", "race"]);
    assert_eq!(ds.len(), 8);
    assert_eq!(gs.names(), vec!["gender=m", "gender=f", "race=w", "race=b"]);
    assert_eq!(
        ds.column_names(),
        ["pred", "label", "score", "gender", "race"]
    );
}

#[test]
fn prule_winner_is_the_minority_ratio() {
    let (ds, gs) = d8(&["gender"]);
    let spec = MeasureSpec::parse("pr", "compl", "ratio", "min").unwrap();
    let r = evaluate(&spec, &ds, &gs).unwrap();
    assert!((r.value.finite().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    let w = r.trace.winner().unwrap();
    assert_eq!(r.trace.groups[w.left_group].measure.value, Some(0.25));
}

#[test]
fn delta_eo_and_fpsf() {
    let (ds, gs) = d8(&["gender"]);
    // tpr m = 1, f = 1/2
    let eo = evaluate(&named_measure("delta_eo").unwrap(), &ds, &gs).unwrap();
    assert_eq!(eo.value, Outcome::Finite(0.5));
    // fpr m = 1/2, f = 0, all = 1/4
    let fpsf = evaluate(&named_measure("fpsf").unwrap(), &ds, &gs).unwrap();
    assert_eq!(fpsf.value, Outcome::Finite(0.25));
}

#[test]
fn wcb_of_any_base() {
    let (ds, gs) = d8(&["gender"]);
    let db = evaluate(&named_measure("db").unwrap(), &ds, &gs).unwrap();
    let wcb = evaluate(&named_measure("wcb:pr").unwrap(), &ds, &gs).unwrap();
    assert_eq!(db.value, wcb.value);
    assert!(named_measure("wcb:nope").is_err());
}

#[test]
fn intersectional_db_sees_empty_rate_subgroups() {
    let (ds, gs) = d8(&["gender", "race"]);
    let spec = named_measure("db").unwrap().intersectional(true);
    let r = evaluate(&spec, &ds, &gs).unwrap();
    // gender=f&race=b never predicts positive: 1 - 0/x = 1
    assert_eq!(r.value, Outcome::Finite(1.0));
    assert_eq!(r.trace.groups.len(), 8);
}

#[test]
fn epsilon_zero_matches_default() {
    let (ds, gs) = d8(&["gender", "race"]);
    let plain = multireport(&ds, &gs, &ReportConfig::default()).unwrap();
    let zero = multireport(
        &ds,
        &gs,
        &ReportConfig {
            epsilon: 0.0,
            ..ReportConfig::default()
        },
    )
    .unwrap();
    assert_eq!(
        serialize(&plain, Format::Json),
        serialize(&zero, Format::Json)
    );

    let loose = multireport(
        &ds,
        &gs,
        &ReportConfig {
            epsilon: 0.3,
            ..ReportConfig::default()
        },
    )
    .unwrap();
    let before = plain.value("pr", "maxdiff").unwrap().finite().unwrap();
    let after = loose.value("pr", "maxdiff").unwrap().finite().unwrap();
    assert!((after - (before - 0.3)).abs() < 1e-12);
    // plain-value and ratio columns are untouched
    assert_eq!(
        plain.value("pr", "minratio").unwrap(),
        loose.value("pr", "minratio").unwrap()
    );
    assert_eq!(
        plain.value("pr", "max").unwrap(),
        loose.value("pr", "max").unwrap()
    );
}

#[test]
fn rows_follow_available_columns() {
    let spec = ColumnSpec {
        scores: None,
        ..columns(&["gender"])
    };
    let (ds, cats) = load_table(File::open(D8).unwrap(), &spec).unwrap();
    let gs = GroupSet::from_categories(&cats).unwrap();
    let r = unireport(&ds, &gs, &ReportConfig::default()).unwrap();
    assert_eq!(r.rows, vec!["pr", "accuracy", "tpr", "tnr", "fpr", "fnr"]);

    let spec = ColumnSpec {
        labels: None,
        ..columns(&["gender"])
    };
    let (ds, cats) = load_table(File::open(D8).unwrap(), &spec).unwrap();
    let gs = GroupSet::from_categories(&cats).unwrap();
    let r = unireport(
        &ds,
        &gs,
        &ReportConfig {
            top_k: Some(3),
            ..ReportConfig::default()
        },
    )
    .unwrap();
    assert_eq!(r.rows, vec!["ar@3", "topk@3"]);
}

#[test]
fn combined_report_serializes_every_cell() {
    let (ds, gs) = d8(&["gender"]);
    let cfg = ReportConfig::default();
    let both = combine(&[
        multireport(&ds, &gs, &cfg).unwrap(),
        unireport(&ds, &gs, &cfg).unwrap(),
    ])
    .unwrap();
    let doc = to_json(&both);
    assert_eq!(
        doc["cells"].as_object().unwrap().len(),
        both.rows.len() * both.columns.len()
    );
    assert_eq!(doc["metadata"]["n"], 8);
    let csv = serialize(&both, Format::Csv);
    assert!(csv.starts_with("measure,multi:min,"));
    assert_eq!(csv.lines().count(), both.rows.len() + 1);
}

#[test]
fn explain_curve_cell() {
    let (ds, gs) = d8(&["race"]);
    let r = multireport(&ds, &gs, &ReportConfig::default()).unwrap();
    let text = explain(&r, "auc", "maxdiff").unwrap();
    assert!(text.contains("continuous curve"), "{text}");
    assert!(text.contains("winner:"), "{text}");
}

#[test]
fn input_errors_name_the_problem() {
    let bad = "pred,g\n1,a\n2,b\n";
    let spec = ColumnSpec {
        predictions: "pred".into(),
        sensitive: vec!["g".into()],
        ..ColumnSpec::default()
    };
    let err = load_table(bad.as_bytes(), &spec).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("row 2") && msg.contains("pred"), "{msg}");

    let err = load_table("pred\n".as_bytes(), &spec).unwrap_err();
    assert!(matches!(err, Error::MissingColumn(c) if c == "g"));

    let spec = ColumnSpec {
        predictions: "pred".into(),
        ..ColumnSpec::default()
    };
    assert!(matches!(
        load_table("pred\n".as_bytes(), &spec),
        Err(Error::EmptyDataset)
    ));
}
