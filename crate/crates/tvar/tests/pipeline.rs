use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use tvar::config::{BackendChoice, Delta2, PipelineConfig};
use tvar::io::ValueKind;
use tvar::pipeline::{run_pipeline, PipelineError, OUTPUT_FILES};
use tvar::report::SCHEMA;
use tvar_core::random::{std_normal, stream_rng};

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixture_config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        input: manifest().join("data/fixture_prices.csv"),
        out: out.to_path_buf(),
        ..Default::default()
    }
}

/// report.json with the machine-specific paths blanked.
fn normalized_report(dir: &Path) -> Value {
    let mut v: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    v["config"]["input"] = Value::from("fixture_prices.csv");
    v["config"]["out"] = Value::from("out");
    v
}

fn normalized_files(dir: &Path) -> Vec<(String, String)> {
    OUTPUT_FILES
        .iter()
        .map(|name| {
            let body = if *name == "report.json" {
                serde_json::to_string_pretty(&normalized_report(dir)).unwrap() + "\n"
            } else {
                fs::read_to_string(dir.join(name)).unwrap()
            };
            (name.to_string(), body)
        })
        .collect()
}

#[test]
fn fixture_matches_golden_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    run_pipeline(&fixture_config(tmp.path())).unwrap();
    let golden = manifest().join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (name, body) in normalized_files(tmp.path()) {
        let path = golden.join(&name);
        if update {
            fs::create_dir_all(&golden).unwrap();
            fs::write(&path, &body).unwrap();
            continue;
        }
        let expected = fs::read_to_string(&path)
            .unwrap_or_else(|_| panic!("{} missing; rerun with UPDATE_GOLDEN=1", path.display()));
        assert!(
            body == expected,
            "{name} differs from golden copy; rerun with UPDATE_GOLDEN=1 if intended"
        );
    }
}

#[test]
fn report_conforms_to_schema() {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let mut configs = vec![fixture_config(tmp.path())];
    configs.push(PipelineConfig {
        boot_reps: 0,
        delta2: Delta2::Fixed(0.05),
        backend: BackendChoice::Kalman,
        trend: tvar::config::Trend::C,
        center_regressors: true,
        ..fixture_config(tmp.path())
    });
    for cfg in configs {
        run_pipeline(&cfg).unwrap();
        let report: Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap())
                .unwrap();
        let errors: Vec<String> = validator
            .iter_errors(&report)
            .map(|e| format!("{e} at {}", e.instance_path()))
            .collect();
        assert!(errors.is_empty(), "{errors:#?}");
    }
}

#[test]
fn schema_rejects_malformed_reports() {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    run_pipeline(&fixture_config(tmp.path())).unwrap();
    let good = normalized_report(tmp.path());
    assert!(validator.is_valid(&good));

    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("tvar");
    assert!(!validator.is_valid(&missing));
    let mut extra = good.clone();
    extra["efficiency"]["surprise"] = Value::from(1);
    assert!(!validator.is_valid(&extra));
    let mut bad_level = good;
    bad_level["unit_root"]["critical_values"]["1%"] = Value::from(-3.0);
    assert!(!validator.is_valid(&bad_level));
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        boot_reps: 199,
        ..fixture_config(a.path())
    };
    run_pipeline(&cfg).unwrap();
    run_pipeline(&PipelineConfig {
        out: b.path().to_path_buf(),
        ..cfg
    })
    .unwrap();
    for name in OUTPUT_FILES.iter().filter(|n| **n != "report.json") {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(normalized_report(a.path()), normalized_report(b.path()));
}

#[test]
fn writes_every_table_with_expected_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let run = run_pipeline(&PipelineConfig {
        boot_reps: 0,
        ..fixture_config(tmp.path())
    })
    .unwrap();
    assert_eq!(run.files.len(), OUTPUT_FILES.len());
    assert!(run.report.bootstrap.is_none());
    let periods = run.report.tvar.periods;
    let q = run.report.tvar.order;

    let coef = fs::read_to_string(tmp.path().join("tvar_coefficients.csv")).unwrap();
    assert_eq!(coef.lines().count(), periods + 1);
    assert_eq!(coef.lines().next().unwrap().split(',').count(), 1 + 3 * q);

    let eff = fs::read_to_string(tmp.path().join("efficiency.csv")).unwrap();
    assert_eq!(eff.lines().count(), periods + 1);

    let surface = fs::read_to_string(tmp.path().join("impulse_surface.csv")).unwrap();
    assert_eq!(
        surface.lines().count(),
        periods * (run.report.efficiency.horizons + 1) + 1
    );

    let desc = fs::read_to_string(tmp.path().join("descriptive.csv")).unwrap();
    assert_eq!(desc.lines().count(), 2);
}

fn write_returns(dir: &Path, values: &[f64]) -> PathBuf {
    let mut body = String::from("date,ret\n");
    for (i, v) in values.iter().enumerate() {
        body.push_str(&format!("{}:{:02},{v}\n", 1950 + i / 12, i % 12 + 1));
    }
    let path = dir.join("returns.csv");
    fs::write(&path, body).unwrap();
    path
}

fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    let mut level = 0.0;
    (0..n)
        .map(|_| {
            level += 0.01 * std_normal(&mut rng);
            level
        })
        .collect()
}

#[test]
fn unit_root_stops_the_run_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_returns(tmp.path(), &random_walk(400, 3));
    let cfg = PipelineConfig {
        input,
        value_col: "ret".into(),
        value_kind: ValueKind::Returns,
        boot_reps: 0,
        out: tmp.path().join("out"),
        ..Default::default()
    };
    match run_pipeline(&cfg) {
        Err(PipelineError::UnitRoot {
            statistic,
            critical,
        }) => assert!(statistic >= critical),
        other => panic!("expected a unit-root stop, got {other:?}"),
    }
    assert!(!tmp.path().join("out/report.json").exists());

    let forced = run_pipeline(&PipelineConfig { force: true, ..cfg }).unwrap();
    assert!(
        forced
            .report
            .warnings
            .iter()
            .any(|w| w.contains("unit root")),
        "{:?}",
        forced.report.warnings
    );
}

#[test]
fn invalid_config_is_rejected_before_loading() {
    let tmp = tempfile::tempdir().unwrap();
    let err = run_pipeline(&PipelineConfig {
        qmax: 0,
        ..fixture_config(tmp.path())
    })
    .unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)), "{err}");
    let err = run_pipeline(&PipelineConfig {
        boot_reps: 10,
        ..fixture_config(tmp.path())
    })
    .unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)), "{err}");
    let err = run_pipeline(&PipelineConfig {
        input: tmp.path().join("nope.csv"),
        ..fixture_config(tmp.path())
    })
    .unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)), "{err}");
}

#[test]
fn bad_rows_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("prices.csv");
    fs::write(&path, "date,close\n2000:01,100\n2000:02,-1\n2000:03,101\n").unwrap();
    let err = run_pipeline(&PipelineConfig {
        input: path,
        ..fixture_config(tmp.path())
    })
    .unwrap_err();
    assert!(matches!(err, PipelineError::Load(_)));
    assert!(err.to_string().contains("row 3"), "{err}");
}
