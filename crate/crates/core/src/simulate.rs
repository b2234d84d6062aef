//! Day-stepped disruption, rerouting, backlog and recovery engine.
//!
//! Each day, every OD pair demands its daily trips plus its backlog. Pairs
//! whose original path is intact deliver their daily trips and drain backlog
//! at `spare fraction x daily demand`. Pairs whose path is broken try to
//! reroute today's whole demand over fresh spare capacity; the shortfall
//! becomes backlog. Service quality is delivered over demanded, and the loss
//! of service is the unit-day sum of `1 - Q(t)` until the network is repaired
//! and every backlog is cleared.

use chrono::NaiveDate;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::quantile;
use crate::error::{Error, Result};
use crate::hazard::FailureProbabilities;
use crate::network::{AssetNetwork, FlowLayer};
use crate::rng::{substream, Purpose};
use crate::routing::{reroute_on, EdgeMask, PathCache, ReroutePolicy, RerouteResult, ResidualNetwork};
use crate::scalar::Scalar;
use crate::scenario::{sample_climate_scenarios, FailureScenario, Strategy};

pub const DEFAULT_HORIZON_DAYS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryModel {
    pub per_step_recovery_prob: f64,
}

impl Default for RecoveryModel {
    fn default() -> Self {
        RecoveryModel {
            per_step_recovery_prob: 0.5,
        }
    }
}

impl RecoveryModel {
    pub fn new(per_step_recovery_prob: f64) -> Result<Self> {
        let m = RecoveryModel {
            per_step_recovery_prob,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.per_step_recovery_prob;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param("recovery_prob", format!("{p} not in (0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub horizon_days: usize,
    /// Keep every day's reroute result in the outcome.
    pub record_paths: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            horizon_days: DEFAULT_HORIZON_DAYS,
            record_paths: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub run_index: usize,
    pub q_series: Vec<f64>,
    pub los: f64,
    /// Index of the last simulated day, the first with full service, no
    /// failed edges and no backlog.
    pub recovery_day: usize,
    pub demanded: Vec<f64>,
    pub delivered: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reroutes: Vec<RerouteResult>,
}

/// Share of demand satisfied.
pub fn quality_of_service(delivered: f64, demanded: f64) -> Result<f64> {
    if !(demanded > 0.0) {
        return Err(Error::DegenerateDemand);
    }
    Ok((delivered / demanded).clamp(0.0, 1.0))
}

/// Each failed edge independently recovers with the model's probability.
/// Failed edges are visited in index order.
pub fn step_recovery(failed: &EdgeMask, model: &RecoveryModel, rng: &mut impl Rng) -> EdgeMask {
    let mut still = failed.clone();
    let p = model.per_step_recovery_prob;
    for e in failed.iter() {
        if p >= 1.0 || rng.random::<f64>() < p {
            still.remove(e);
        }
    }
    still
}

fn scenario_mask(network: &AssetNetwork, scenario: &FailureScenario) -> Result<EdgeMask> {
    let mut mask = EdgeMask::none(network);
    for (id, &intact) in scenario.assets().iter().zip(scenario.states()) {
        if !intact {
            let e = network
                .edge_ix(id)
                .ok_or_else(|| Error::UnknownEdge(id.clone()))?;
            mask.insert(e);
        }
    }
    Ok(mask)
}

/// Per-OD backlog drain rate once the original path is back in service.
fn drain_rates(network: &AssetNetwork, flow: &FlowLayer) -> Vec<f64> {
    flow.pairs()
        .iter()
        .map(|od| {
            let fraction = od
                .path_ix()
                .iter()
                .map(|&e| network.edge(e).spare_capacity_fraction)
                .fold(f64::INFINITY, f64::min);
            let fraction = if fraction.is_finite() { fraction } else { 0.0 };
            fraction * od.demand
        })
        .collect()
}

pub fn run_scenario(
    network: &AssetNetwork,
    flow: &FlowLayer,
    scenario: &FailureScenario,
    policy: &ReroutePolicy,
    recovery: &RecoveryModel,
    seed: u64,
) -> Result<ScenarioOutcome> {
    run_scenario_with(network, flow, scenario, policy, recovery, seed, &SimulationOptions::default())
}

pub fn run_scenario_with(
    network: &AssetNetwork,
    flow: &FlowLayer,
    scenario: &FailureScenario,
    policy: &ReroutePolicy,
    recovery: &RecoveryModel,
    seed: u64,
    options: &SimulationOptions,
) -> Result<ScenarioOutcome> {
    policy.validate()?;
    recovery.validate()?;
    if !(flow.total_daily_demand() > 0.0) {
        return Err(Error::DegenerateDemand);
    }
    let mut rng = substream(
        seed,
        Purpose::Recovery,
        &[scenario.strategy as u64],
        scenario.run_index as u64,
    );
    let drain = drain_rates(network, flow);
    let pairs = flow.pairs();

    let mut failed = scenario_mask(network, scenario)?;
    let mut backlog = vec![0.0; pairs.len()];
    let mut cache = PathCache::default();
    let mut cache_mask: Option<EdgeMask> = None;

    let mut q_series = Vec::new();
    let mut demanded = Vec::new();
    let mut delivered = Vec::new();
    let mut reroutes = Vec::new();

    loop {
        if q_series.len() >= options.horizon_days {
            return Err(Error::HorizonExceeded(options.horizon_days));
        }
        let mut demand_total = 0.0;
        let mut to_reroute = Vec::new();
        for (i, od) in pairs.iter().enumerate() {
            let today = od.demand + backlog[i];
            demand_total += today;
            if od.path_ix().iter().any(|&e| failed.contains(e)) {
                to_reroute.push((i, today));
            } else if backlog[i] > 0.0 {
                backlog[i] -= backlog[i].min(drain[i]);
            }
        }

        if !to_reroute.is_empty() {
            if cache_mask.as_ref() != Some(&failed) {
                cache.clear();
                cache_mask = Some(failed.clone());
            }
            let mut residual = ResidualNetwork::new(network, &failed);
            let result = reroute_on(network, &mut residual, &mut cache, flow, &to_reroute, policy);
            for (&od, &short) in &result.shortfall {
                backlog[od] = short;
            }
            if options.record_paths {
                reroutes.push(result);
            }
        } else if options.record_paths {
            reroutes.push(RerouteResult::default());
        }

        let shortfall: f64 = backlog.iter().sum();
        let q = if shortfall > 0.0 {
            quality_of_service(demand_total - shortfall, demand_total)?
        } else {
            1.0
        };
        q_series.push(q);
        demanded.push(demand_total);
        delivered.push(demand_total - shortfall);

        failed = step_recovery(&failed, recovery, &mut rng);
        if failed.is_empty() && shortfall == 0.0 {
            break;
        }
    }

    let los = q_series.iter().map(|q| 1.0 - q).sum();
    Ok(ScenarioOutcome {
        run_index: scenario.run_index,
        recovery_day: q_series.len() - 1,
        q_series,
        los,
        demanded,
        delivered,
        reroutes,
    })
}

/// Mean and central quantiles of a loss-of-service sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosSummary {
    pub n: usize,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosDistribution {
    pub event_date: Option<NaiveDate>,
    pub strategy: Strategy,
    /// LOS per run, ordered by run index.
    pub samples: Vec<f64>,
    pub recovery_days: Vec<usize>,
}

impl LosDistribution {
    pub fn from_outcomes(strategy: Strategy, event_date: Option<NaiveDate>, outcomes: &[ScenarioOutcome]) -> Self {
        let mut sorted: Vec<&ScenarioOutcome> = outcomes.iter().collect();
        sorted.sort_by_key(|o| o.run_index);
        LosDistribution {
            event_date,
            strategy,
            samples: sorted.iter().map(|o| o.los).collect(),
            recovery_days: sorted.iter().map(|o| o.recovery_day).collect(),
        }
    }

    /// Distribution concentrated on one value; useful for synthetic inputs.
    pub fn degenerate(value: f64, n: usize) -> Self {
        LosDistribution {
            event_date: None,
            strategy: Strategy::Climate,
            samples: vec![value; n],
            recovery_days: vec![0; n],
        }
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn summary(&self) -> Result<LosSummary> {
        if self.samples.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut sorted = self.samples.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(LosSummary {
            n: sorted.len(),
            mean: self.mean(),
            q025: quantile(&sorted, 0.025),
            q975: quantile(&sorted, 0.975),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Runs every scenario, in parallel, returning outcomes in input order.
pub fn run_scenarios(
    network: &AssetNetwork,
    flow: &FlowLayer,
    scenarios: &[FailureScenario],
    policy: &ReroutePolicy,
    recovery: &RecoveryModel,
    seed: u64,
    options: &SimulationOptions,
) -> Result<Vec<ScenarioOutcome>> {
    scenarios
        .par_iter()
        .map(|s| run_scenario_with(network, flow, s, policy, recovery, seed, options))
        .collect()
}

/// Climate-strategy LOS distribution for one weather event.
pub fn assess_event<T: Scalar>(
    network: &AssetNetwork,
    flow: &FlowLayer,
    p: &FailureProbabilities<T>,
    n_runs: usize,
    policy: &ReroutePolicy,
    recovery: &RecoveryModel,
    seed: u64,
) -> Result<LosDistribution> {
    let set = sample_climate_scenarios(p, n_runs, seed)?;
    let outcomes = run_scenarios(
        network,
        flow,
        &set.scenarios,
        policy,
        recovery,
        seed,
        &SimulationOptions::default(),
    )?;
    Ok(LosDistribution::from_outcomes(Strategy::Climate, None, &outcomes))
}
