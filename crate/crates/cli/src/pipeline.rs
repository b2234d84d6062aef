use std::collections::BTreeMap;

use anyhow::{Context, Result};
use chrono::{Datelike, NaiveDate};
use log::{info, warn};

use gridshock_core::analysis::{
    common_bin_width, convolve_annual, kmeans_days, mann_whitney_u, savitzky_golay, AnnualLos, Histogram,
    MannWhitney,
};
use gridshock_core::hazard::{failure_probabilities, load_event_series, project_event};
use gridshock_core::rng::derive_key;
use gridshock_core::routing::{immediate_disruption, EdgeMask};
use gridshock_core::scenario::{matched_removals, scenarios_for};
use gridshock_core::simulate::{run_scenarios, LosDistribution, SimulationOptions};
use gridshock_core::{
    expected_failed_edges, load_asset_network, load_flow_layer, AssetNetwork, DayFeatureMatrix, FlowLayer, Strategy,
    WeatherEvent,
};

use crate::config::RunConfig;

pub struct Inputs {
    pub network: AssetNetwork,
    pub flow: FlowLayer,
    pub events: Vec<WeatherEvent>,
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let network = load_asset_network(&cfg.nodes, &cfg.edges)?
        .with_spare_fraction(cfg.spare_fraction)
        .context("config field `spare_fraction`")?;
    let flow = load_flow_layer(&cfg.od, &network)?;
    let events: Vec<WeatherEvent> = load_event_series(&cfg.weather_dir)?;
    if events.is_empty() {
        anyhow::bail!("config field `weather_dir`: no *.json events in {}", cfg.weather_dir.display());
    }
    info!(
        "loaded {} nodes, {} edges, {} OD pairs, {} weather events",
        network.node_count(),
        network.edge_count(),
        flow.len(),
        events.len()
    );
    Ok(Inputs { network, flow, events })
}

/// Per-asset conditions for every event, in event order.
pub fn project_all(cfg: &RunConfig, network: &AssetNetwork, events: &[WeatherEvent]) -> Result<Vec<Vec<f64>>> {
    events
        .iter()
        .map(|ev| {
            project_event(ev, network, cfg.projection)
                .map(|c| c.values().to_vec())
                .with_context(|| format!("projecting event {}", ev.date))
        })
        .collect()
}

fn event_seed(seed: u64, date: NaiveDate) -> u64 {
    derive_key(seed, &[date.num_days_from_ce() as u64])
}

#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub strategy: Strategy,
    pub distribution: LosDistribution,
    /// Share of demand cut at failure onset, per run.
    pub onset: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EventResult {
    pub date: NaiveDate,
    pub psi: f64,
    pub n_removed: usize,
    /// Number of days this event stands for.
    pub weight: usize,
    pub runs: Vec<StrategyRun>,
    pub mwu: Option<MannWhitney>,
}

impl EventResult {
    pub fn run(&self, strategy: Strategy) -> Option<&StrategyRun> {
        self.runs.iter().find(|r| r.strategy == strategy)
    }
}

/// Runs every configured strategy at the intensity implied by `omega`.
pub fn assess_event(
    cfg: &RunConfig,
    inputs: &Inputs,
    date: NaiveDate,
    omega: &[f64],
    weight: usize,
    strategies: &[Strategy],
) -> Result<EventResult> {
    let fragility = cfg.fragility.build()?;
    let conditions = gridshock_core::LocalConditions::new(gridshock_core::edge_ids(&inputs.network), omega.to_vec())?;
    let p = failure_probabilities(&conditions, &fragility);
    let psi = expected_failed_edges(&p);
    let seed = event_seed(cfg.seed, date);
    let options = SimulationOptions {
        horizon_days: cfg.horizon_days,
        record_paths: false,
    };
    let mut runs = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let set = scenarios_for(strategy, &inputs.network, &p, cfg.n_runs, seed)
            .with_context(|| format!("{strategy} scenarios for {date}"))?;
        let onset = set
            .scenarios
            .iter()
            .map(|s| {
                let mask = EdgeMask::from_flags(s.states().iter().map(|&up| !up).collect());
                immediate_disruption(&inputs.flow, &mask)
            })
            .collect::<gridshock_core::Result<Vec<f64>>>()?;
        let outcomes = run_scenarios(
            &inputs.network,
            &inputs.flow,
            &set.scenarios,
            &cfg.policy,
            &cfg.recovery(),
            seed,
            &options,
        )
        .with_context(|| format!("{strategy} runs for {date}"))?;
        let distribution = LosDistribution::from_outcomes(strategy, Some(date), &outcomes);
        runs.push(StrategyRun {
            strategy,
            distribution,
            onset,
        });
    }
    let sample = |s: Strategy| runs.iter().find(|r| r.strategy == s).map(|r| &r.distribution.samples);
    let mwu = match (sample(Strategy::Climate), sample(Strategy::Random)) {
        (Some(a), Some(b)) => Some(mann_whitney_u(a, b)?),
        _ => None,
    };
    info!("{date}: psi = {psi:.4}");
    Ok(EventResult {
        date,
        psi,
        n_removed: matched_removals(psi)?,
        weight,
        runs,
        mwu,
    })
}

fn in_window(date: NaiveDate, window: ((u32, u32), (u32, u32))) -> bool {
    let md = (date.month(), date.day());
    window.0 <= md && md <= window.1
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRow {
    pub date: NaiveDate,
    pub cluster: usize,
    pub is_representative: bool,
    pub cluster_size: usize,
}

/// Clustered summer days of one block of consecutive years.
#[derive(Debug, Clone)]
pub struct DayGroup {
    pub first_year: i32,
    /// Indices into the event list, ascending by date.
    pub days: Vec<usize>,
    /// Global cluster id per entry of `days`.
    pub cluster: Vec<usize>,
    /// Event index of each cluster's representative, keyed by global cluster id.
    pub representatives: BTreeMap<usize, usize>,
}

impl DayGroup {
    pub fn rows(&self, events: &[WeatherEvent]) -> Vec<ClusterRow> {
        let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in &self.cluster {
            *sizes.entry(c).or_default() += 1;
        }
        self.days
            .iter()
            .zip(&self.cluster)
            .map(|(&ev, &c)| ClusterRow {
                date: events[ev].date,
                cluster: c,
                is_representative: self.representatives.get(&c) == Some(&ev),
                cluster_size: sizes[&c],
            })
            .collect()
    }
}

/// Summer days grouped into blocks of `group_years`; with `cluster` set, each
/// block is reduced to k-means representatives, otherwise every day is its own cluster.
pub fn group_days(cfg: &RunConfig, events: &[WeatherEvent], omega: &[Vec<f64>], cluster: bool) -> Result<Vec<DayGroup>> {
    let window = cfg.summer_window()?;
    let summer: Vec<usize> = (0..events.len()).filter(|&i| in_window(events[i].date, window)).collect();
    if summer.is_empty() {
        anyhow::bail!("no weather events fall inside the summer window");
    }
    let base_year = events[summer[0]].date.year();
    let span = cfg.clustering.group_years as i32;
    let mut blocks: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for &i in &summer {
        let block = (events[i].date.year() - base_year).div_euclid(span);
        blocks.entry(block).or_default().push(i);
    }

    let mut next_id = 0;
    let mut groups = Vec::with_capacity(blocks.len());
    for (block, days) in blocks {
        let first_year = base_year + block * span;
        let (cluster_ids, representatives) = if cluster {
            let mut k = cfg.clustering.k;
            if k > days.len() {
                warn!(
                    "group {first_year}: only {} days, clustering with k = {} instead of {k}",
                    days.len(),
                    days.len()
                );
                k = days.len();
            }
            let features = DayFeatureMatrix::new(
                days.iter().map(|&i| events[i].date).collect(),
                days.iter().map(|&i| omega[i].clone()).collect(),
            )?;
            let seed = derive_key(cfg.seed, &[first_year as u64]);
            let c = kmeans_days(&features, k, seed, cfg.clustering.max_iter)
                .with_context(|| format!("clustering group {first_year}"))?;
            // Ids run consecutively over non-empty clusters.
            let mut remap = BTreeMap::new();
            for &a in &c.assignments {
                let len = remap.len();
                remap.entry(a).or_insert(next_id + len);
            }
            next_id += remap.len();
            let ids: Vec<usize> = c.assignments.iter().map(|a| remap[a]).collect();
            let reps = c
                .representatives
                .iter()
                .enumerate()
                .filter_map(|(a, r)| r.map(|row| (remap[&a], days[row])))
                .collect();
            (ids, reps)
        } else {
            let ids: Vec<usize> = (next_id..next_id + days.len()).collect();
            next_id += days.len();
            let reps = ids.iter().copied().zip(days.iter().copied()).collect();
            (ids, reps)
        };
        groups.push(DayGroup {
            first_year,
            days,
            cluster: cluster_ids,
            representatives,
        });
    }
    Ok(groups)
}

#[derive(Debug, Clone)]
pub struct AnnualRow {
    pub annual: AnnualLos,
    pub smoothed_mean: f64,
}

/// Annual totals from representative-day distributions; each day of a year
/// contributes its cluster representative's distribution once.
pub fn annual_series(
    cfg: &RunConfig,
    events: &[WeatherEvent],
    groups: &[DayGroup],
    rep_results: &BTreeMap<usize, EventResult>,
) -> Result<Vec<AnnualRow>> {
    let dists: Vec<&LosDistribution> = rep_results
        .values()
        .filter_map(|r| r.run(Strategy::Climate).map(|s| &s.distribution))
        .collect();
    let width = common_bin_width(&dists, cfg.trend.bins);
    let mut hist: BTreeMap<usize, Histogram> = BTreeMap::new();
    for (&ev, r) in rep_results {
        let d = &r.run(Strategy::Climate).context("trend needs climate runs")?.distribution;
        hist.insert(ev, Histogram::from_samples(&d.samples, width)?);
    }

    let mut annual = Vec::new();
    for g in groups {
        let mut per_year: BTreeMap<i32, BTreeMap<usize, usize>> = BTreeMap::new();
        for (&ev, c) in g.days.iter().zip(&g.cluster) {
            let rep = g.representatives[c];
            *per_year.entry(events[ev].date.year()).or_default().entry(rep).or_default() += 1;
        }
        for (year, counts) in per_year {
            let parts: Vec<(usize, &Histogram)> = counts.iter().map(|(rep, &n)| (n, &hist[rep])).collect();
            annual.push(convolve_annual(year, &parts)?);
        }
    }

    let means: Vec<f64> = annual.iter().map(|a| a.mean).collect();
    let smoothed = smooth(&means, cfg.trend.sg_window, cfg.trend.sg_order)?;
    Ok(annual
        .into_iter()
        .zip(smoothed)
        .map(|(annual, smoothed_mean)| AnnualRow { annual, smoothed_mean })
        .collect())
}

/// Savitzky-Golay smoothing with the window shrunk to fit short series.
pub fn smooth(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    let n = series.len();
    let mut w = window.min(n);
    if w % 2 == 0 {
        w = w.saturating_sub(1);
    }
    if w == 0 {
        return Ok(Vec::new());
    }
    let order = order.min(w - 1);
    if w != window {
        warn!("series of {n} years: smoothing window reduced from {window} to {w}, order {order}");
    }
    Ok(savitzky_golay(series, w, order)?)
}
