use std::process::Command;

use fracito::harness::{self, summarize, ExperimentConfig, ExperimentReport, Format, Verdict, CSV_HEADER};
use fracito::Error;

fn small(id: &str) -> ExperimentConfig {
    let mut c = harness::lookup(id).unwrap().default_config();
    if c.paths > 0 {
        c.paths = 100;
    }
    c.grid = match id {
        "covariance_check" => vec![40],
        "kernel_geometry" => vec![1],
        "picard" | "bsde_residual" | "kernel_variance" | "generator_agreement" | "wis_zero_mean" => vec![32],
        _ => vec![16, 32],
    };
    c
}

fn schema() -> jsonschema::Validator {
    let text = include_str!("../schema/report.schema.json");
    jsonschema::validator_for(&serde_json::from_str(text).unwrap()).unwrap()
}

fn assert_valid(report: &ExperimentReport) {
    let v = schema();
    let instance = serde_json::to_value(report).unwrap();
    let errors: Vec<String> = v.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", report.experiment);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracito"))
}

#[test]
fn catalog_lists_every_verification() {
    let ids: Vec<&str> = harness::list_experiments().iter().map(|e| e.id).collect();
    for id in [
        "theorem32",
        "theorem50",
        "prop43",
        "prop45",
        "prop54",
        "theorem20",
        "bm_stratonovich",
        "bsde_residual",
        "picard",
    ] {
        assert!(ids.contains(&id), "{id}");
    }
    assert!(harness::list_experiments().iter().all(|e| !e.anchor.is_empty()));
    assert!(matches!(harness::lookup("nope"), Err(Error::UnknownExperiment(_))));
}

#[test]
fn same_seed_same_statistics() {
    let mut c = small("covariance_check");
    c.seed = 7;
    let a = harness::run(&c).unwrap();
    let b = harness::run(&c).unwrap();
    assert_eq!(a.fingerprint(), b.fingerprint());
    c.seed = 8;
    assert_ne!(harness::run(&c).unwrap().fingerprint(), a.fingerprint());
}

#[test]
fn theorem50_reports_every_resolution() {
    let mut c = small("theorem50");
    c.functional = Some("square".into());
    c.grid = vec![64, 128, 256];
    let r = harness::run(&c).unwrap();
    for n in [64, 128, 256] {
        let s = r.statistic("rms_residual", Some(n)).unwrap();
        assert!(s.se.is_some());
        assert_ne!(s.verdict, Verdict::Fail);
        assert!(r.statistic("wis_mean", Some(n)).is_some());
    }
    assert_valid(&r);
}

#[test]
fn every_experiment_validates_against_the_schema() {
    for info in harness::list_experiments() {
        let r = harness::run(&small(info.id)).unwrap();
        assert!(r.error.is_none(), "{}: {:?}", info.id, r.error);
        assert!(!r.statistics.is_empty(), "{}", info.id);
        for s in &r.statistics {
            if matches!(s.rule, harness::Rule::WithinSe { .. }) {
                assert!(s.se.is_some(), "{} {}", info.id, s.name);
            }
        }
        assert_valid(&r);
        let back: ExperimentReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}

#[test]
fn numerical_failure_becomes_an_error_record() {
    let mut c = small("wis_zero_mean");
    c.functional = Some("running_max".into());
    let r = harness::run(&c).unwrap();
    let e = r.error.as_ref().unwrap();
    assert_eq!(e.kind, "DerivativeUnavailable");
    assert_eq!(r.exit_code(), 1);
    assert_valid(&r);
}

#[test]
fn invalid_configs_are_usage_errors() {
    let mut c = small("theorem50");
    c.paths = 99;
    assert!(matches!(harness::run(&c), Err(Error::Config(_))));
    let mut c = small("theorem50");
    c.functional = Some("nope".into());
    assert!(matches!(harness::run(&c), Err(Error::UnknownFunctional(_))));
    let mut c = small("theorem50");
    c.grid = vec![32, 16];
    assert!(harness::run(&c).is_err());
    let mut c = small("prop54");
    c.hurst = 0.5;
    assert!(harness::run(&c).unwrap().error.is_some());
}

#[test]
fn summarize_empty_report_is_header_only() {
    let mut r = harness::run(&small("kernel_geometry")).unwrap();
    r.statistics.clear();
    let table = summarize(&r);
    assert_eq!(table.lines().count(), 1);
    assert!(table.starts_with("statistic"));
    let full = summarize(&harness::run(&small("kernel_geometry")).unwrap());
    let lines: Vec<&str> = full.lines().collect();
    let col = lines[0].find("verdict").unwrap();
    assert!(lines[1..].iter().all(|l| l[col..].starts_with("pass")));
}

#[test]
fn csv_projection_has_fixed_columns() {
    let r = harness::run(&small("quadratic_variation")).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, CSV_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), r.statistics.len());
    assert_eq!(&rows[0][0], "quadratic_variation");
    assert_eq!(&rows[0][2], "100");
    assert_eq!(&rows[0][1], "16");
}

#[test]
fn cli_exit_codes() {
    let ok = bin()
        .args(["--experiment", "kernel_geometry", "--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("experiment,n,M,H,statistic"));

    let fail = bin()
        .args(["--experiment", "kernel_geometry", "--param", "tol=-1"])
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(2));

    let unknown = bin().args(["--experiment", "nope"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("nope"));
}

#[test]
fn cli_names_missing_config_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"experiment":"theorem50","horizon":1,"grid":[64],"paths":100,"seed":1}"#).unwrap();
    let out = bin().arg("--config").arg(&path).output().unwrap();
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hurst"));
}

#[test]
fn cli_writes_to_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--experiment", "covariance_check", "--paths", "100", "--grid", "40", "--threads", "2"])
        .env(harness::OUT_DIR_ENV, dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("covariance_check.json")).unwrap();
    let report: ExperimentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.config.grid, vec![40]);
    assert_eq!(report.config.format, Format::Json);
    assert_valid(&report);

    let config = dir.path().join("config.json");
    let mut c = report.config.clone();
    c.out = Some(dir.path().join("nested/report.csv"));
    c.format = Format::Csv;
    std::fs::write(&config, serde_json::to_string(&c).unwrap()).unwrap();
    let out = bin().arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("nested/report.csv").exists());
}
