use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use log::info;
use serde_json::json;

use gridshock_core::Strategy;

use crate::config::RunConfig;
use crate::output::{self, Artifacts};
use crate::pipeline::{self, assess_event, group_days, load_inputs, project_all, EventResult};

fn prepare(cfg: &RunConfig, need_od: bool) -> Result<()> {
    cfg.validate()?;
    cfg.validate_inputs(need_od)
}

fn finish(cfg: &RunConfig, mut artifacts: Artifacts) -> Result<Vec<PathBuf>> {
    artifacts.add("config.toml", output::config_toml(cfg)?);
    let written = artifacts.write_all(&cfg.out)?;
    for p in &written {
        info!("wrote {}", p.display());
    }
    Ok(written)
}

/// Simulates every event (or every cluster representative) under the configured strategies.
pub fn cmd_assess(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg, true)?;
    let inputs = load_inputs(cfg)?;
    let omega = project_all(cfg, &inputs.network, &inputs.events)?;
    let mut artifacts = Artifacts::default();

    let targets: Vec<(usize, usize)> = if cfg.clustering.enabled.unwrap_or(false) {
        let groups = group_days(cfg, &inputs.events, &omega, true)?;
        let rows: Vec<_> = groups.iter().flat_map(|g| g.rows(&inputs.events)).collect();
        artifacts.add("clusters.csv", output::clusters_csv(&rows)?);
        let mut reps: Vec<(usize, usize)> = rows
            .iter()
            .filter(|r| r.is_representative)
            .map(|r| {
                let ev = inputs.events.iter().position(|e| e.date == r.date).expect("known date");
                (ev, r.cluster_size)
            })
            .collect();
        reps.sort();
        reps
    } else {
        (0..inputs.events.len()).map(|i| (i, 1)).collect()
    };

    let results = targets
        .iter()
        .map(|&(ev, weight)| {
            assess_event(cfg, &inputs, inputs.events[ev].date, &omega[ev], weight, &cfg.strategies)
        })
        .collect::<Result<Vec<EventResult>>>()?;

    artifacts.add("los.csv", output::los_csv(&results)?);
    artifacts.add("mwu.csv", output::mwu_csv(&results)?);
    artifacts.add(
        "summary.json",
        output::summary_json("assess", cfg, json!({ "events": output::events_json(&results)? }))?,
    );
    finish(cfg, artifacts)
}

/// Strategy comparison per event: LOS, onset disruption and climate-vs-random tests.
pub fn cmd_compare(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg, true)?;
    if cfg.strategies.len() < 2 {
        bail!("config field `strategies`: compare needs at least two strategies");
    }
    let inputs = load_inputs(cfg)?;
    let omega = project_all(cfg, &inputs.network, &inputs.events)?;
    let results = inputs
        .events
        .iter()
        .zip(&omega)
        .map(|(ev, w)| assess_event(cfg, &inputs, ev.date, w, 1, &cfg.strategies))
        .collect::<Result<Vec<EventResult>>>()?;

    let mut artifacts = Artifacts::default();
    artifacts.add("los.csv", output::los_csv(&results)?);
    artifacts.add("onset.csv", output::onset_csv(&results)?);
    artifacts.add("mwu.csv", output::mwu_csv(&results)?);
    artifacts.add(
        "summary.json",
        output::summary_json("compare", cfg, json!({ "events": output::events_json(&results)? }))?,
    );
    finish(cfg, artifacts)
}

/// Representative-day clustering only.
pub fn cmd_cluster(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg, false)?;
    let network = gridshock_core::load_asset_network(&cfg.nodes, &cfg.edges)?;
    let events: Vec<gridshock_core::WeatherEvent> = gridshock_core::load_event_series(&cfg.weather_dir)?;
    let omega = project_all(cfg, &network, &events)?;
    let groups = group_days(cfg, &events, &omega, true)?;
    let rows: Vec<_> = groups.iter().flat_map(|g| g.rows(&events)).collect();

    let summary: Vec<_> = groups
        .iter()
        .map(|g| {
            json!({
                "first_year": g.first_year,
                "days": g.days.len(),
                "clusters": g.representatives.len(),
                "representatives": g.representatives.values().map(|&ev| events[ev].date).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut artifacts = Artifacts::default();
    artifacts.add("clusters.csv", output::clusters_csv(&rows)?);
    artifacts.add("summary.json", output::summary_json("cluster", cfg, json!({ "groups": summary }))?);
    finish(cfg, artifacts)
}

/// Annual total LOS per year from clustered (or all) summer days, plus a smoothed trend.
pub fn cmd_trend(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    prepare(cfg, true)?;
    let inputs = load_inputs(cfg)?;
    let omega = project_all(cfg, &inputs.network, &inputs.events)?;
    let cluster = cfg.clustering.enabled.unwrap_or(true);
    let groups = group_days(cfg, &inputs.events, &omega, cluster)?;

    let mut reps: BTreeMap<usize, EventResult> = BTreeMap::new();
    for g in &groups {
        let rows = g.rows(&inputs.events);
        for (&ev, row) in g.days.iter().zip(&rows) {
            if row.is_representative {
                let r = assess_event(
                    cfg,
                    &inputs,
                    inputs.events[ev].date,
                    &omega[ev],
                    row.cluster_size,
                    &[Strategy::Climate],
                )?;
                reps.insert(ev, r);
            }
        }
    }
    let annual = pipeline::annual_series(cfg, &inputs.events, &groups, &reps)?;
    let results: Vec<EventResult> = reps.into_values().collect();
    let rows: Vec<_> = groups.iter().flat_map(|g| g.rows(&inputs.events)).collect();

    let years: Vec<_> = annual
        .iter()
        .map(|a| {
            json!({
                "year": a.annual.year,
                "mean": a.annual.mean,
                "q05": a.annual.q05,
                "q95": a.annual.q95,
                "mean_smoothed": a.smoothed_mean,
                "bin_width": a.annual.distribution.bin_width(),
            })
        })
        .collect();
    let mut artifacts = Artifacts::default();
    artifacts.add("annual_los.csv", output::annual_csv(&annual)?);
    artifacts.add("clusters.csv", output::clusters_csv(&rows)?);
    artifacts.add("los.csv", output::los_csv(&results)?);
    artifacts.add(
        "summary.json",
        output::summary_json(
            "trend",
            cfg,
            json!({ "clustered": cluster, "years": years, "representatives": output::events_json(&results)? }),
        )?,
    );
    finish(cfg, artifacts)
}
