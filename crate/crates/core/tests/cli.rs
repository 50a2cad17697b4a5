use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use skillgraph::cli::execute;

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/case_study")
}

fn case(file: &str) -> String {
    scenario_dir().join(file).display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let argv = std::iter::once("skillgraph").chain(args.iter().copied());
    let out = execute(argv);
    (out.code, out.stdout, out.stderr)
}

fn error_object(stdout: &str) -> Value {
    assert_eq!(stdout.lines().count(), 1, "error output must be one line: {stdout}");
    let v: Value = serde_json::from_str(stdout.trim()).expect("error line is JSON");
    v["error"].clone()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn exit_code_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let malformed = write(d, "bad.json", "{\n  \"nodes\": [\n    {\"id\": \"a\",, }\n  ]\n}\n");
    let cyclic = write(
        d,
        "cyclic.json",
        r#"{"nodes":[{"id":"a","label":"a","effectiveness":1,"cost":1},{"id":"b","label":"b","effectiveness":1,"cost":1}],
            "edges":[{"from":"a","to":"b","weight":1},{"from":"b","to":"a","weight":1}]}"#,
    );
    let edgeless = write(d, "edgeless.json", r#"{"nodes":[{"id":"a","label":"a","effectiveness":1,"cost":1}],"edges":[]}"#);
    let fine_cost = write(
        d,
        "fine.json",
        r#"{"nodes":[{"id":"a","label":"a","effectiveness":1,"cost":1.005}],"edges":[]}"#,
    );
    let bad_metrics = write(d, "metrics.json", r#"{"iterations":[{"edge_metrics":{"v1->v9":1.0}}]}"#);
    let negative = write(d, "neg.csv", "a,b\n1,-1\n0,1\n");
    let schema = write(
        d,
        "cohort.csv",
        "student_id,gender,ethnicity,education_level,region,mentoring_sessions,workshop_hours,research_projects,employed\n\
         s1,F,asian,postdoc,usa,1,1.0,0,1\n",
    );
    let tiny = write(
        d,
        "tiny.csv",
        "student_id,gender,ethnicity,education_level,region,mentoring_sessions,workshop_hours,research_projects,employed\n\
         s1,F,asian,phd,usa,1,1.0,0,1\ns2,M,asian,phd,usa,2,1.0,0,1\ns3,M,other,masters,usa,3,0.0,1,0\n\
         s4,F,other,masters,usa,4,0.0,1,0\ns5,F,other,masters,usa,4,0.0,1,1\ns6,F,other,masters,usa,4,0.0,1,0\n",
    );
    let graph = case("graph.json");
    let counts = case("counts.csv");
    let metrics = case("metrics.json");
    let model_out = d.join("m").display().to_string();

    let table: Vec<(Vec<&str>, i32, Option<&str>)> = vec![
        (vec!["validate", "--graph", &graph], 0, None),
        (vec!["centrality", "--graph", &graph], 0, None),
        (vec!["allocate", "--graph", &graph, "--budget", "5"], 0, None),
        (vec!["path", "--graph", &graph, "--from", "v1", "--to", "v5"], 0, None),
        (vec!["markov", "--counts", &counts], 0, None),
        (vec!["validate", "--graph", &malformed], 2, Some("ParseError")),
        (vec!["validate", "--graph", &cyclic], 2, Some("CycleDetected")),
        (vec!["validate", "--graph", "/nonexistent/graph.json"], 2, Some("Io")),
        (vec!["centrality", "--graph", &edgeless], 1, Some("EmptyGraph")),
        (vec!["allocate", "--graph", &fine_cost, "--budget", "2", "--mode", "select"], 2, Some("CostPrecision")),
        (vec!["allocate", "--graph", &graph, "--budget=-1"], 2, Some("InvalidBudget")),
        (vec!["path", "--graph", &graph, "--from", "v5", "--to", "v1"], 1, Some("NoFeasiblePath")),
        (vec!["path", "--graph", &graph, "--from", "v1", "--to", "v5", "--tau", "0.5"], 1, Some("NoFeasiblePath")),
        (vec!["path", "--graph", &graph, "--from", "v1", "--to", "zz"], 2, Some("UnknownNode")),
        (vec!["path", "--graph", &graph, "--from", "v1", "--to", "v5", "--tau=-1"], 2, Some("InvalidThreshold")),
        (vec!["feedback", "--graph", &graph, "--metrics", &bad_metrics, "--budget", "3"], 2, Some("UnknownEdge")),
        (vec!["feedback", "--graph", &graph, "--metrics", &metrics, "--budget", "3", "--iters", "9"], 2, Some("MetricsExhausted")),
        (vec!["feedback", "--graph", &graph, "--metrics", &metrics, "--budget", "3", "--eta", "2"], 2, Some("InvalidConfig")),
        (vec!["markov", "--counts", &negative], 2, Some("NegativeCount")),
        (vec!["cohort", "summarize", "--data", &schema], 2, Some("SchemaViolation")),
        (vec!["train", "--data", &tiny, "--out", &model_out], 1, Some("InsufficientSamples")),
        (vec!["train", "--data", &tiny, "--grid-depth", "x", "--out", &model_out], 2, Some("Usage")),
        (vec!["train", "--data", &tiny, "--criteria", "gini,chaos", "--out", &model_out], 2, Some("Usage")),
        (vec!["cohort", "gen", "--n", "5"], 2, Some("Usage")),
        (vec!["nonsense"], 2, Some("Usage")),
        (vec![], 2, Some("Usage")),
    ];
    for (args, code, kind) in table {
        let (got, stdout, stderr) = run(&args);
        assert_eq!(got, code, "{args:?}: stdout {stdout} stderr {stderr}");
        if let Some(kind) = kind {
            let err = error_object(&stdout);
            assert_eq!(err["kind"], kind, "{args:?}");
            assert_eq!(err["exit_code"], code, "{args:?}");
            assert!(!stderr.is_empty(), "{args:?}: no diagnostic on stderr");
        } else {
            assert!(stderr.is_empty(), "{args:?}: {stderr}");
        }
    }
}

#[test]
fn parse_errors_carry_location() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.json", "{\n  \"nodes\": [\n    {\"id\": \"a\",, }\n  ]\n}\n");
    let (_, stdout, _) = run(&["validate", "--graph", &bad]);
    let err = error_object(&stdout);
    assert_eq!(err["line"], 3);
    assert!(err["column"].as_u64().unwrap() > 0);
}

#[test]
fn validate_reports_order() {
    let (code, stdout, _) = run(&["validate", "--graph", &case("graph.json")]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["topological_order"], serde_json::json!(["v1", "v2", "v3", "v4", "v5"]));
}

#[test]
fn bundled_scenario_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let (code, stdout, stderr) = run(&["run", &case("scenario.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert!(report["centrality"].is_object());
    assert_eq!(report["allocation"]["mode"], "select");
    let first = &report["paths"][0];
    assert_eq!(first["query"]["threshold"], Value::Null);
    assert_eq!(first["path"]["nodes"], serde_json::json!(["v1", "v5"]));
    assert_eq!(first["path"]["cost"], 1.0);
    assert_eq!(report["paths"][1]["path"]["nodes"], serde_json::json!(["v1", "v2", "v5"]));
    assert_eq!(report["feedback"]["iterations"], 3);
    for stage in ["validate", "centrality", "allocation", "paths", "feedback", "paths_after_feedback", "markov"] {
        assert!(report["timings_ms"][stage].is_number(), "missing timing for {stage}");
    }
    let saved: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved["paths"], report["paths"]);
    let lines = fs::read_to_string(out.join("feedback.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 4);
}

#[test]
fn zero_iteration_scenario_keeps_initial_snapshot_only() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = case("graph.json");
    let text = format!(
        r#"{{"graph": {graph:?}, "allocation": {{"budget": 3}}, "paths": [], "feedback": {{"iterations": 0}}, "output_dir": "o"}}"#
    );
    let scenario = write(tmp.path(), "s.json", &text);
    let (code, stdout, stderr) = run(&["run", &scenario]);
    assert_eq!(code, 0, "{stderr}");
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["feedback"]["iterations"], 0);
    assert_eq!(report["feedback"]["success_rates"], serde_json::json!([]));
    let lines = fs::read_to_string(tmp.path().join("o/feedback.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 1);
    let snap: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(snap["iteration"], 0);
}

#[test]
fn scenario_errors_name_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = case("graph.json");
    let text = format!(
        r#"{{"graph": {graph:?}, "allocation": {{"budget": 3}}, "paths": [{{"source": "v5", "target": "v1"}}], "output_dir": "o"}}"#
    );
    let scenario = write(tmp.path(), "s.json", &text);
    let (code, stdout, _) = run(&["run", &scenario]);
    assert_eq!(code, 1);
    let err = error_object(&stdout);
    assert_eq!(err["kind"], "NoFeasiblePath");
    assert_eq!(err["stage"], "paths");

    let broken = write(tmp.path(), "broken.json", "{\"graph\": 3}");
    let (code, stdout, _) = run(&["run", &broken]);
    assert_eq!(code, 2);
    assert_eq!(error_object(&stdout)["stage"], "scenario");
}

#[test]
fn cohort_generate_train_predict_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let data = d.join("c.csv");
    let model_dir = d.join("model");
    let (code, _, _) = run(&["cohort", "gen", "--n", "386", "--seed", "42", "--planted", "--out", data.to_str().unwrap()]);
    assert_eq!(code, 0);

    let (code, stdout, stderr) = run(&["train", "--data", data.to_str().unwrap(), "--seed", "42", "--out", model_dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let summary: Value = serde_json::from_str(&stdout).unwrap();
    assert!(summary["test_accuracy"].as_f64().unwrap() >= 0.9);
    let cv = fs::read_to_string(model_dir.join("cv_report.csv")).unwrap();
    assert!(cv.starts_with("config_id,max_depth,min_samples_leaf,criterion,mean_acc,std_acc\n"));
    assert_eq!(cv.lines().count(), 1 + 13 * 10 * 2);
    let model: Value = serde_json::from_str(&fs::read_to_string(model_dir.join("model.json")).unwrap()).unwrap();
    assert!(model["tree"]["nodes"][0]["kind"].is_string());

    let (code, stdout, _) = run(&[
        "predict",
        "--model",
        model_dir.join("model.json").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let pred: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(pred["predictions"].as_array().unwrap().len(), 386);
    assert!(pred["accuracy"].as_f64().unwrap() > 0.9);

    let (code, stdout, _) = run(&["cohort", "summarize", "--data", data.to_str().unwrap()]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["n"], 386);
}

#[test]
fn cohort_gen_to_stdout_is_csv() {
    let (code, stdout, _) = run(&["cohort", "gen", "--n", "3", "--seed", "1"]);
    assert_eq!(code, 0);
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next(),
        Some("student_id,gender,ethnicity,education_level,region,mentoring_sessions,workshop_hours,research_projects,employed")
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn markov_steps_from_a_start_state() {
    let (code, stdout, _) = run(&["markov", "--graph", &case("graph.json"), "--steps", "1", "--start", "v1"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let d = &v["distribution"];
    // v1 has three unit-weight out-edges.
    for s in ["v2", "v3", "v5"] {
        assert!((d[s].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
    assert!((v["stationary"]["v5"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}
