use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn maizx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maizx"))
        .args(args)
        .env_remove("MAIZX_CONFIG")
        .output()
        .expect("binary runs")
}

fn config() -> String {
    data().join("cluster.json").display().to_string()
}

fn traces() -> String {
    data().join("traces").display().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn simulate_writes_report_and_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let run = maizx(&[
        "simulate", "--config", &config(), "--ci-dir", &traces(), "--scenario", "all",
        "--horizon-hours", "48", "--out", out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["horizon_hours"], 48);
    let hourly = fs::read_to_string(dir.path().join("hourly_cf.csv")).unwrap();
    assert_eq!(hourly.lines().next(), Some("hour,scenario,node_id,cf_g"));
    assert_eq!(hourly.lines().count(), 1 + 48 * 4 * 3);
    let totals = fs::read_to_string(dir.path().join("totals.csv")).unwrap();
    assert_eq!(totals.lines().count(), 1 + 4 * 4);
    let summary = stdout(&run);
    assert!(summary.starts_with("scenario,total_energy_kwh,total_kg_co2,reduction_pct\n"));
    assert_eq!(summary.lines().count(), 5);
}

#[test]
fn single_scenario_still_reports_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/r.json");
    let run = maizx(&[
        "simulate", "--config", &config(), "--ci-dir", &traces(), "--scenario", "c",
        "--horizon-hours", "24", "--out", out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let kinds: Vec<&str> = report["scenarios"].as_array().unwrap().iter().map(|s| s["scenario"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["baseline", "c"]);
}

#[test]
fn missing_config_is_a_usage_error() {
    let run = maizx(&["simulate", "--ci-dir", &traces(), "--out", "r.json"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("Usage"), "{}", stderr(&run));
}

#[test]
fn unknown_flag_and_bad_enum_are_usage_errors() {
    assert_eq!(maizx(&["rank", "--config", &config(), "--ci-dir", &traces(), "--bogus"]).status.code(), Some(2));
    let run = maizx(&["simulate", "--config", &config(), "--ci-dir", &traces(), "--scenario", "z", "--out", "r.json"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn config_can_come_from_the_environment() {
    let run = Command::new(env!("CARGO_BIN_EXE_maizx"))
        .args(["rank", "--ci-dir", &traces(), "--hour", "5"])
        .env("MAIZX_CONFIG", config())
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", stderr(&run));
    assert_eq!(stdout(&run).lines().count(), 4);
}

#[test]
fn gap_in_trace_names_file_zone_and_hour() {
    let dir = tempfile::tempdir().unwrap();
    for zone in ["es", "nl", "de"] {
        fs::copy(data().join(format!("traces/{zone}_2022.csv")), dir.path().join(format!("{zone}.csv"))).unwrap();
    }
    let es = dir.path().join("es.csv");
    let text = fs::read_to_string(&es).unwrap();
    let cut: String = text.lines().filter(|l| !l.starts_with("2022-01-01T02:00:00Z")).map(|l| format!("{l}\n")).collect();
    fs::write(&es, cut).unwrap();

    let run = maizx(&[
        "simulate", "--config", &config(), "--ci-dir", dir.path().to_str().unwrap(),
        "--out", dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(1));
    let err = stderr(&run);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("maizx: error: "), "{err}");
    assert!(err.contains("es.csv") && err.contains("zone ES") && err.contains("2022-01-01T02:00:00Z"), "{err}");
    assert!(!dir.path().join("r.json").exists());

    let filled = maizx(&[
        "validate", "--config", &config(), "--ci-dir", dir.path().to_str().unwrap(), "--gap-fill", "linear",
    ]);
    assert!(filled.status.success(), "{}", stderr(&filled));
}

#[test]
fn domain_errors_exit_one_without_panicking() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let (config, traces) = (config(), traces());
    let cases: [Vec<&str>; 4] = [
        vec!["validate", "--config", bad.to_str().unwrap(), "--ci-dir", &traces],
        vec!["rank", "--config", &config, "--ci-dir", &traces, "--weights", "1,2,3"],
        vec!["rank", "--config", &config, "--ci-dir", &traces, "--weights", "-1,0,0,0"],
        vec!["rank", "--config", &config, "--ci-dir", "/nonexistent/traces"],
    ];
    for args in cases {
        let run = maizx(&args);
        assert_eq!(run.status.code(), Some(1), "{args:?}: {}", stderr(&run));
        assert_eq!(stderr(&run).lines().count(), 1, "{args:?}: {}", stderr(&run));
        assert!(!stderr(&run).contains("panicked"));
    }
}

#[test]
fn every_flag_is_documented_in_help() {
    let expected: [(&str, &[&str]); 5] = [
        ("validate", &["--config", "--ci-dir", "--gap-fill", "--horizon-hours", "--power-dir", "MAIZX_CONFIG"]),
        (
            "rank",
            &[
                "--config", "--ci-dir", "--gap-fill", "--horizon-hours", "--weights", "--forecast-method",
                "--window-hours", "--forecast-horizon-hours", "--cfp-window-hours", "--hour",
            ],
        ),
        (
            "forecast",
            &["--ci", "--config", "--method", "--window-hours", "--horizon-hours", "--history-hours", "--gap-fill", "--out"],
        ),
        (
            "simulate",
            &[
                "--config", "--ci-dir", "--gap-fill", "--horizon-hours", "--weights", "--forecast-method",
                "--window-hours", "--forecast-horizon-hours", "--cfp-window-hours", "--scenario", "--epoch-hours",
                "--out", "--hourly-csv", "--totals-csv",
            ],
        ),
        (
            "report",
            &[
                "--config", "--ci-dir", "--power-dir", "--out", "--annual-reduction-per-unit-kg", "--target-kg",
                "--years", "--eur-per-kg",
            ],
        ),
    ];
    for (cmd, flags) in expected {
        let run = maizx(&[cmd, "--help"]);
        assert!(run.status.success());
        let help = stdout(&run);
        for flag in flags {
            assert!(help.contains(flag), "{cmd} --help lacks {flag}:\n{help}");
        }
    }
    let top = stdout(&maizx(&["--help"]));
    for cmd in ["validate", "rank", "forecast", "simulate", "report"] {
        assert!(top.contains(cmd));
    }
}

#[test]
fn rank_prints_the_score_table() {
    let run = maizx(&["rank", "--config", &config(), "--ci-dir", &traces(), "--hour", "12", "--weights", "1,0,0,0"]);
    assert!(run.status.success(), "{}", stderr(&run));
    let text = stdout(&run);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("rank,node_id,cfp_g,fcfp_g,"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let cfp: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(cfp.windows(2).all(|w| w[0] <= w[1]), "{cfp:?}");
    assert_eq!(rows[0][10], "0");
}

#[test]
fn forecast_prints_one_row_per_hour() {
    let es = data().join("traces/es_2022.csv");
    let run = maizx(&[
        "forecast", "--ci", es.to_str().unwrap(), "--method", "seasonal-naive-24h", "--history-hours", "48",
        "--horizon-hours", "24",
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let text = stdout(&run);
    assert_eq!(text.lines().count(), 25);
    assert!(text.lines().nth(1).unwrap().starts_with("2022-01-03T00:00:00Z,ES,"));

    let source = fs::read_to_string(&es).unwrap();
    let day_two: Vec<&str> = source.lines().skip(25).take(24).map(|l| l.rsplit(',').next().unwrap()).collect();
    let predicted: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(predicted, day_two);

    let short = maizx(&["forecast", "--ci", es.to_str().unwrap(), "--method", "moving-average"]);
    assert_eq!(short.status.code(), Some(1));
}

#[test]
fn report_accounts_measured_power() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("measured.json");
    let run = maizx(&[
        "report", "--config", &config(), "--ci-dir", &traces(), "--power-dir",
        data().join("power").to_str().unwrap(), "--out", out.to_str().unwrap(), "--eur-per-kg", "0.1",
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(report["projection"]["units_required"], 27_686_054);
    assert!(report["projection"]["target_eco_cost_eur"].is_number());
    assert_eq!(stdout(&run).lines().count(), 4);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name).join("r.json");
        let r = maizx(&[
            "simulate", "--config", &config(), "--ci-dir", &traces(), "--horizon-hours", "336",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(r.status.success());
        (r.stdout, fs::read(&out).unwrap(), fs::read(out.with_file_name("hourly_cf.csv")).unwrap())
    };
    assert_eq!(run("one"), run("two"));
}
