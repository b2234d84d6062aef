use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use gridshock_core::analysis::{format_p_value, quantile};
use gridshock_core::Strategy;

use crate::config::RunConfig;
use crate::pipeline::{AnnualRow, ClusterRow, EventResult};

/// Collects artifacts in memory and writes them together once all work is done.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn write_all(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        self.files
            .into_iter()
            .map(|(name, bytes)| {
                let path = dir.join(name);
                fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
                Ok(path)
            })
            .collect()
    }
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().context("flushing csv")
}

pub fn los_csv(results: &[EventResult]) -> Result<Vec<u8>> {
    let rows = results.iter().flat_map(|r| {
        r.runs.iter().flat_map(move |s| {
            s.distribution
                .samples
                .iter()
                .zip(&s.distribution.recovery_days)
                .enumerate()
                .map(move |(run, (los, day))| (r.date, s.strategy, run, los, day))
        })
    });
    csv_bytes(&["event_date", "strategy", "run_index", "los", "recovery_day"], rows)
}

pub fn mwu_csv(results: &[EventResult]) -> Result<Vec<u8>> {
    let rows = results
        .iter()
        .filter_map(|r| r.mwu.map(|m| (r.date, r.n_removed, m.u, format_p_value(m.p_value))));
    csv_bytes(&["event_date", "n_removed", "u", "p_value"], rows)
}

pub fn onset_csv(results: &[EventResult]) -> Result<Vec<u8>> {
    let rows = results.iter().flat_map(|r| {
        r.runs.iter().flat_map(move |s| {
            s.onset
                .iter()
                .enumerate()
                .map(move |(run, share)| (r.date, s.strategy, run, r.n_removed, share))
        })
    });
    csv_bytes(&["event_date", "strategy", "run_index", "n_removed", "onset_share"], rows)
}

pub fn clusters_csv(rows: &[ClusterRow]) -> Result<Vec<u8>> {
    let rows = rows
        .iter()
        .map(|r| (r.date, r.cluster, r.is_representative, r.cluster_size));
    csv_bytes(&["date", "cluster", "is_representative", "cluster_size"], rows)
}

pub fn annual_csv(rows: &[AnnualRow]) -> Result<Vec<u8>> {
    let rows = rows
        .iter()
        .map(|r| (r.annual.year, r.annual.mean, r.annual.q05, r.annual.q95, r.smoothed_mean));
    csv_bytes(&["year", "mean", "q05", "q95", "mean_smoothed"], rows)
}

fn strategy_summary(r: &EventResult, s: Strategy) -> Result<Option<serde_json::Value>> {
    let Some(run) = r.run(s) else {
        return Ok(None);
    };
    let los = run.distribution.summary()?;
    let mut onset = run.onset.clone();
    onset.sort_by(f64::total_cmp);
    let days = &run.distribution.recovery_days;
    Ok(Some(json!({
        "los": los,
        "mean_recovery_day": days.iter().sum::<usize>() as f64 / days.len() as f64,
        "onset_mean": onset.iter().sum::<f64>() / onset.len() as f64,
        "onset_q025": quantile(&onset, 0.025),
        "onset_q975": quantile(&onset, 0.975),
    })))
}

pub fn events_json(results: &[EventResult]) -> Result<serde_json::Value> {
    results
        .iter()
        .map(|r| {
            let mut strategies = serde_json::Map::new();
            for s in Strategy::ALL {
                if let Some(v) = strategy_summary(r, s)? {
                    strategies.insert(s.to_string(), v);
                }
            }
            Ok(json!({
                "date": r.date,
                "psi": r.psi,
                "psi_above_one": r.psi > 1.0,
                "n_removed": r.n_removed,
                "weight_days": r.weight,
                "strategies": strategies,
                "mwu_climate_vs_random": r.mwu.map(|m| json!({
                    "u": m.u,
                    "p_value": m.p_value,
                    "p_value_reported": format_p_value(m.p_value),
                    "method": m.method,
                })),
            }))
        })
        .collect::<Result<Vec<_>>>()
        .map(serde_json::Value::Array)
}

/// Top-level summary document; embeds the resolved config.
pub fn summary_json(command: &str, cfg: &RunConfig, body: serde_json::Value) -> Result<Vec<u8>> {
    let doc = json!({
        "tool": "gridshock",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": cfg.seed,
        "config": cfg,
        "model": {
            "los": "sum over days of (1 - Q), from the failure day to the first day with Q = 1 and no backlog",
            "q_day0": "after same-day rerouting",
            "backlog_drain": "spare_fraction x the OD's daily demand per day once its original path is intact (minimum fraction along that path)",
            "random_removals": "round half up of psi",
        },
        "results": body,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn config_toml(cfg: &RunConfig) -> Result<Vec<u8>> {
    Ok(cfg.to_toml()?.into_bytes())
}
