use glh_core::cli::{run_pipeline, PipelineConfig};
use glh_core::GlhError;
use serde_json::{json, Value};
use tempfile::TempDir;

fn config(dir: &TempDir, stages: Value) -> PipelineConfig {
    let cfg = json!({ "seed": 11, "output_dir": dir.path(), "stages": stages });
    PipelineConfig::from_json(&cfg.to_string()).unwrap()
}

fn verdict(report: &glh_core::cli::PipelineReport) -> String {
    report.stages.last().unwrap().summary["verdict"].as_str().unwrap().to_string()
}

#[test]
fn accepting_clock_decides_yes() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        json!([
            { "stage": "build-clock", "circuit": "accept", "idle": 2 },
            { "stage": "sample", "shots": 100 },
            { "stage": "decide", "expect": "YES" }
        ]),
    );
    let report = run_pipeline(&cfg).unwrap();
    assert!(report.ok);
    assert_eq!(verdict(&report), "YES");
    for f in ["01-build-clock.json", "02-sample.txt", "03-decide.json", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn lifted_clock_decides_yes_at_level_two() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        json!([
            { "stage": "build-clock", "circuit": "accept", "idle": 2 },
            { "stage": "lift", "c": 2 },
            { "stage": "decide", "expect": "YES" }
        ]),
    );
    let report = run_pipeline(&cfg).unwrap();
    assert!(report.ok);
    assert_eq!(report.stages[1].summary["c"], 2);
}

#[test]
fn reduced_rejecting_clock_decides_no() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        json!([
            { "stage": "build-clock", "circuit": "reject", "idle": 2 },
            { "stage": "reduce", "to_locality": 2 },
            { "stage": "certify" },
            { "stage": "decide", "expect": "NO" }
        ]),
    );
    let report = run_pipeline(&cfg).unwrap();
    assert!(report.ok, "{report:?}");
    let eps = report.stages[2].summary["measured_epsilon"].as_f64().unwrap();
    assert!(eps > 0.0 && eps < 1e-2, "ε = {eps}");
    assert_eq!(verdict(&report), "NO");
}

#[test]
fn expectation_mismatch_marks_report_failed() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        json!([
            { "stage": "build-clock", "circuit": "reject", "idle": 2 },
            { "stage": "decide", "expect": "YES" }
        ]),
    );
    assert!(!run_pipeline(&cfg).unwrap().ok);
}

#[test]
fn invalid_stage_order_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({ "seed": 1, "output_dir": dir.path(), "stages": [{ "stage": "certify" }] });
    assert!(matches!(PipelineConfig::from_json(&cfg.to_string()), Err(GlhError::Validation(_))));
    let cfg = json!({ "seed": 1, "output_dir": dir.path(), "stages": [], "extra": 1 });
    assert!(PipelineConfig::from_json(&cfg.to_string()).is_err());
}

#[test]
fn capacity_cap_stops_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "seed": 1,
        "output_dir": dir.path(),
        "caps": { "max_dim": 8 },
        "stages": [{ "stage": "build-clock", "circuit": "accept", "idle": 2 }]
    });
    let cfg = PipelineConfig::from_json(&cfg.to_string()).unwrap();
    assert!(matches!(run_pipeline(&cfg), Err(GlhError::Capacity { .. })));
    assert!(dir.path().join("report.json").exists());
}
