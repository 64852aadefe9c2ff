use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn repo(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(path)
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_teamdp")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn schema(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(repo(&format!("schemas/{name}"))).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn report(args: &[&str], expected_code: i32) -> Value {
    let (code, text) = run(args);
    assert_eq!(code, expected_code, "{args:?}: {text}");
    let value: Value = serde_json::from_str(&text).unwrap();
    let errors: Vec<String> = schema("report.schema.json").iter_errors(&value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{args:?}: {errors:?}");
    value
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn toy() -> String {
    repo("scenarios/toy.json").display().to_string()
}

fn one_stage() -> String {
    repo("scenarios/one_stage.json").display().to_string()
}

#[test]
fn shipped_scenarios_match_the_scenario_schema() {
    let validator = schema("scenario.schema.json");
    for path in [toy(), one_stage()] {
        let value: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(validator.is_valid(&value), "{path}");
    }
}

#[test]
fn validate_accepts_the_toy_scenario() {
    let r = report(&["validate", "--scenario", &toy()], 0);
    assert_eq!(r["results"]["valid"], true);
    assert_eq!(r["results"]["violations"], serde_json::json!([]));
    assert_eq!(r["command"]["scenario_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn invalid_and_malformed_scenarios() {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(toy()).unwrap()).unwrap();
    v["initial_dist"] = serde_json::json!([0.9, 0.9]);
    let bad = scratch("bad_dist.json", &v.to_string());
    let r = report(&["validate", "--scenario", bad.to_str().unwrap()], 2);
    assert_eq!(r["results"]["violations"][0]["path"], "initial_dist");
    let r = report(&["solve-manager", "--scenario", bad.to_str().unwrap()], 2);
    assert_eq!(r["error"]["kind"], "validation");

    let broken = scratch("broken.json", "{ \"num_members\": 2, ");
    let r = report(&["validate", "--scenario", broken.to_str().unwrap()], 4);
    assert_eq!(r["error"]["kind"], "malformed_scenario");
}

#[test]
fn budgets_are_reported_with_exit_status_3() {
    let r = report(&["solve-manager", "--scenario", &toy(), "--node-budget", "10"], 3);
    assert_eq!(r["error"]["kind"], "budget_exceeded");
    report(&["oracle-centralized", "--scenario", &toy()], 3);
    report(&["oracle-decentralized", "--scenario", &toy(), "--enumeration-budget", "100"], 3);
}

#[test]
fn usage_errors_are_json() {
    let r = report(&["solve-member", "--scenario", &toy()], 1);
    assert_eq!(r["error"]["kind"], "usage");
    report(&["solve-member", "--scenario", &toy(), "--member", "2"], 1);
    report(&["simulate", "--scenario", &toy(), "--covariance", "0.1"], 1);
    report(&["no-such-command"], 1);
    report(&["gaussian-example", "--grid", "0:1:0.5"], 1);
}

#[test]
fn solvers_and_oracles_agree_on_one_stage() {
    let manager = report(&["solve-manager", "--scenario", &one_stage()], 0);
    let central = report(&["oracle-centralized", "--scenario", &one_stage()], 0);
    let v = manager["results"]["root_value"].as_f64().unwrap();
    let c = central["results"]["cost"].as_f64().unwrap();
    assert!((v - c).abs() <= 1e-9);
    assert_eq!(central["diagnostics"]["candidates"], 256);
    let dec = report(&["oracle-decentralized", "--scenario", &one_stage()], 0);
    assert!(dec["results"]["cost"].as_f64().unwrap() >= c - 1e-12);
}

#[test]
fn compare_reports_values_agreements_and_costs() {
    let r = report(&["compare", "--scenario", &one_stage()], 0);
    let res = &r["results"];
    assert!(res["manager_value"].is_number());
    assert_eq!(res["decentralized"]["status"], "solved");
    assert_eq!(res["members"].as_array().unwrap().len(), 2);
    for m in res["members"].as_array().unwrap() {
        assert!(m["agreements"].as_u64().unwrap() <= m["compared"].as_u64().unwrap());
    }
}

#[test]
fn member_and_simulation_reports() {
    let r = report(&["solve-member", "--scenario", &toy(), "--member", "1"], 0);
    assert_eq!(r["results"]["member"], 1);
    assert_eq!(r["results"]["strategy"]["kind"], "member_separated");
    let r = report(&["simulate", "--scenario", &toy(), "--samples", "20000", "--seed", "5"], 0);
    assert_eq!(r["command"]["seed"], 5);
    assert!(r["results"]["standardized_error"].as_f64().unwrap().abs() < 5.0);
}

#[test]
fn gaussian_example_report_and_csv() {
    let r = report(&["gaussian-example", "--covariance", "-0.5", "--samples", "20000", "--seed", "7"], 0);
    let runs = r["results"]["runs"].as_array().unwrap();
    assert_eq!(runs[0]["covariance"], -0.5);
    assert_eq!(runs[1]["covariance"], 0.5);
    assert_eq!(runs[0]["reproduces_stated_strategy"], true);
    assert_eq!(runs[1]["reproduces_stated_strategy"], false);
    assert_eq!(r["results"]["sign_check"]["reproduced_by_covariance"], serde_json::json!([-0.5]));

    let (code, csv) = run(&["gaussian-example", "--format", "csv", "--samples", "100", "--grid", "0:1:0.5,0:1:0.5,-1:0:0.5"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "covariance,a,j_fixed_bd,j_best_bd");
    assert_eq!(lines.len(), 1 + 2 * 3);
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("validate_report.json");
    let (code, stdout) = run(&["validate", "--scenario", &toy(), "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(written["command"]["name"], "validate");
}

#[test]
fn timing_is_opt_in() {
    let plain = report(&["solve-manager", "--scenario", &one_stage()], 0);
    assert!(plain["diagnostics"].get("wall_time_ms").is_none());
    let timed = report(&["solve-manager", "--scenario", &one_stage(), "--timing"], 0);
    assert!(timed["diagnostics"]["wall_time_ms"].as_f64().unwrap() >= 0.0);
}
