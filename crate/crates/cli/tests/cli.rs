use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chrono::NaiveDate;
use gridshock_core::synthetic::{daily_events, generate, write_events, SyntheticConfig};

fn gridshock(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridshock"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap()
}

fn small_fixture(dir: &Path, first_year: i32, years: i32, days_per_year: usize) {
    let cfg = SyntheticConfig {
        nodes: 30,
        edges: 45,
        od_pairs: 60,
        ..SyntheticConfig::default()
    };
    let s = generate(&cfg).unwrap();
    s.write_csvs(dir).unwrap();
    let hub = &s.network.nodes()[s.hub];
    let mut events = Vec::new();
    for y in first_year..first_year + years {
        let start = NaiveDate::from_ymd_opt(y, 7, 1).unwrap();
        events.extend(daily_events(&s.network, (hub.lat, hub.lon), start, days_per_year, y as u64).unwrap());
    }
    write_events(&events, &dir.join("weather")).unwrap();
}

#[test]
fn empty_strategy_list_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    small_fixture(tmp.path(), 2040, 1, 1);
    let out = gridshock(tmp.path(), &["assess", "--strategies", "--out", "o"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("strategies"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    small_fixture(tmp.path(), 2040, 1, 1);
    fs::write(tmp.path().join("run.toml"), "n_runz = 3\n").unwrap();
    let out = gridshock(tmp.path(), &["assess", "--config", "run.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_runz"));
}

#[test]
fn compare_writes_onset_rows_for_every_strategy() {
    let tmp = tempfile::tempdir().unwrap();
    small_fixture(tmp.path(), 2040, 1, 2);
    let out = gridshock(tmp.path(), &["compare", "--runs", "3", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let onset = fs::read_to_string(tmp.path().join("o/onset.csv")).unwrap();
    assert_eq!(onset.lines().count(), 1 + 2 * 3 * 3);
    for s in ["climate", "random", "targeted"] {
        assert!(onset.contains(s));
    }
    assert!(tmp.path().join("o/config.toml").exists());
}

#[test]
fn trend_has_one_row_per_year() {
    let tmp = tempfile::tempdir().unwrap();
    small_fixture(tmp.path(), 2040, 3, 6);
    for flag in ["--cluster", "--no-cluster"] {
        let out = gridshock(
            tmp.path(),
            &["trend", flag, "--k", "2", "--group-years", "2", "--runs", "4", "--sg-window", "3", "--sg-order", "1", "--out", "t"],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let annual = fs::read_to_string(tmp.path().join("t/annual_los.csv")).unwrap();
        let years: Vec<i32> = annual
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(years, vec![2040, 2041, 2042], "{flag}");
        let clusters = fs::read_to_string(tmp.path().join("t/clusters.csv")).unwrap();
        assert_eq!(clusters.lines().count(), 1 + 18);
    }
}
