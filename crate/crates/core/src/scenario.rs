//! Failure scenarios: Bernoulli sampling from failure probabilities, and the
//! random and traffic-targeted baselines at matched intensity.

use std::io::Write;

use chrono::NaiveDate;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hazard::{edge_ids, AssetIds, FailureProbabilities};
use crate::network::AssetNetwork;
use crate::rng::{substream, Purpose};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Climate,
    Random,
    Targeted,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Climate, Strategy::Random, Strategy::Targeted];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Climate => "climate",
            Strategy::Random => "random",
            Strategy::Targeted => "targeted",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "climate" => Ok(Strategy::Climate),
            "random" => Ok(Strategy::Random),
            "targeted" => Ok(Strategy::Targeted),
            other => Err(Error::param("strategy", format!("unknown strategy `{other}`"))),
        }
    }
}

/// Binary state of every hazard-targeted asset for one Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureScenario {
    assets: AssetIds,
    intact: Vec<bool>,
    pub strategy: Strategy,
    pub run_index: usize,
}

impl FailureScenario {
    pub fn all_intact(assets: AssetIds, strategy: Strategy, run_index: usize) -> Self {
        let intact = vec![true; assets.len()];
        FailureScenario {
            assets,
            intact,
            strategy,
            run_index,
        }
    }

    /// Scenario with exactly the listed assets failed.
    pub fn with_failed<S: AsRef<str>>(
        assets: AssetIds,
        failed: &[S],
        strategy: Strategy,
        run_index: usize,
    ) -> Result<Self> {
        let mut s = Self::all_intact(assets, strategy, run_index);
        for id in failed {
            s.fail(id.as_ref())?;
        }
        Ok(s)
    }

    pub fn assets(&self) -> &AssetIds {
        &self.assets
    }

    /// `true` when intact (state 1), `false` when failed (state 0).
    pub fn states(&self) -> &[bool] {
        &self.intact
    }

    pub fn state(&self, asset: &str) -> Option<bool> {
        self.assets.iter().position(|a| a == asset).map(|i| self.intact[i])
    }

    pub fn fail(&mut self, asset: &str) -> Result<()> {
        let i = self
            .assets
            .iter()
            .position(|a| a == asset)
            .ok_or_else(|| Error::UnknownEdge(asset.to_string()))?;
        self.intact[i] = false;
        Ok(())
    }

    pub fn failed_ids(&self) -> Vec<&str> {
        self.assets
            .iter()
            .zip(&self.intact)
            .filter(|(_, &ok)| !ok)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn failed_count(&self) -> usize {
        self.intact.iter().filter(|&&ok| !ok).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub scenarios: Vec<FailureScenario>,
    pub event_ref: Option<NaiveDate>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ScenarioLine<'a> {
    run_index: usize,
    #[serde(borrow)]
    failed_edges: Vec<&'a str>,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn with_event(mut self, date: NaiveDate) -> Self {
        self.event_ref = Some(date);
        self
    }

    /// One JSON object per line: `{"run_index":…,"failed_edges":[…]}`.
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for s in &self.scenarios {
            let line = ScenarioLine {
                run_index: s.run_index,
                failed_edges: s.failed_ids(),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Removal count matched to an expected failure count, rounding halves up.
pub fn matched_removals(psi: f64) -> Result<usize> {
    if !(psi >= 0.0) || !psi.is_finite() {
        return Err(Error::param("psi", format!("{psi} must be a non-negative number")));
    }
    Ok((psi + 0.5).floor() as usize)
}

/// Samples `n_runs` scenarios with asset `i` failed with probability `p_i`.
///
/// Run `j` draws from its own substream and visits assets in the order of
/// `p`, so any single run can be regenerated on its own.
pub fn sample_climate_scenarios<T: Scalar>(
    p: &FailureProbabilities<T>,
    n_runs: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    if n_runs == 0 {
        return Err(Error::param("n_runs", "must be at least 1"));
    }
    let probs: Vec<f64> = p
        .values()
        .iter()
        .map(|v| v.to_f64().unwrap_or(0.0))
        .collect();
    let scenarios = (0..n_runs)
        .map(|run| {
            let mut rng = substream(seed, Purpose::Climate, &[], run as u64);
            let intact = probs
                .iter()
                .map(|&pf| rng.random::<f64>() >= pf)
                .collect();
            FailureScenario {
                assets: p.assets().clone(),
                intact,
                strategy: Strategy::Climate,
                run_index: run,
            }
        })
        .collect();
    Ok(ScenarioSet {
        scenarios,
        event_ref: None,
        seed,
    })
}

/// Each run removes exactly `round(psi)` distinct edges chosen uniformly.
pub fn generate_random_scenarios(
    network: &AssetNetwork,
    psi: f64,
    n_runs: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    if n_runs == 0 {
        return Err(Error::param("n_runs", "must be at least 1"));
    }
    let n = matched_removals(psi)?;
    let m = network.edge_count();
    if n > m {
        return Err(Error::TooManyRemovals {
            requested: n,
            available: m,
        });
    }
    let assets = edge_ids(network);
    let scenarios = (0..n_runs)
        .map(|run| {
            let mut rng = substream(seed, Purpose::Random, &[], run as u64);
            let mut s = FailureScenario::all_intact(assets.clone(), Strategy::Random, run);
            for e in index::sample(&mut rng, m, n) {
                s.intact[e] = false;
            }
            s
        })
        .collect();
    Ok(ScenarioSet {
        scenarios,
        event_ref: None,
        seed,
    })
}

/// Edge indices in targeting order: most daily traffic first, ties by id.
pub fn traffic_ranking(network: &AssetNetwork) -> Vec<usize> {
    let mut order: Vec<usize> = (0..network.edge_count()).collect();
    order.sort_by(|&a, &b| {
        network
            .edge(b)
            .daily_traffic
            .total_cmp(&network.edge(a).daily_traffic)
            .then(a.cmp(&b))
    });
    order
}

/// Removes the `round(psi)` highest-traffic edges.
pub fn generate_targeted_scenario(network: &AssetNetwork, psi: f64) -> Result<FailureScenario> {
    let n = matched_removals(psi)?;
    let m = network.edge_count();
    if n > m {
        return Err(Error::TooManyRemovals {
            requested: n,
            available: m,
        });
    }
    let mut s = FailureScenario::all_intact(edge_ids(network), Strategy::Targeted, 0);
    for e in traffic_ranking(network).into_iter().take(n) {
        s.intact[e] = false;
    }
    Ok(s)
}

/// Scenario set for one strategy at the intensity implied by `p`.
///
/// Targeted runs all share the same failed set; their run indices still
/// select distinct recovery streams downstream.
pub fn scenarios_for<T: Scalar>(
    strategy: Strategy,
    network: &AssetNetwork,
    p: &FailureProbabilities<T>,
    n_runs: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    match strategy {
        Strategy::Climate => sample_climate_scenarios(p, n_runs, seed),
        Strategy::Random => {
            let psi = crate::hazard::expected_failed_edges(p).to_f64().unwrap_or(f64::NAN);
            generate_random_scenarios(network, psi, n_runs, seed)
        }
        Strategy::Targeted => {
            if n_runs == 0 {
                return Err(Error::param("n_runs", "must be at least 1"));
            }
            let psi = crate::hazard::expected_failed_edges(p).to_f64().unwrap_or(f64::NAN);
            let base = generate_targeted_scenario(network, psi)?;
            let scenarios = (0..n_runs)
                .map(|run| FailureScenario {
                    run_index: run,
                    ..base.clone()
                })
                .collect();
            Ok(ScenarioSet {
                scenarios,
                event_ref: None,
                seed,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{AssetEdge, AssetNode};

    fn ids(n: usize) -> AssetIds {
        (0..n).map(|i| format!("e{i:02}")).collect()
    }

    fn path_network(traffic: &[f64]) -> AssetNetwork {
        let nodes = (0..=traffic.len())
            .map(|i| AssetNode { id: format!("n{i:02}"), lat: 0.0, lon: i as f64 * 0.1 })
            .collect();
        let edges = traffic
            .iter()
            .enumerate()
            .map(|(i, &t)| AssetEdge::new(format!("e{}", i + 1), format!("n{i:02}"), format!("n{:02}", i + 1), 1.0, t))
            .collect();
        AssetNetwork::new(nodes, edges).unwrap()
    }

    #[test]
    fn degenerate_probabilities() {
        let all = FailureProbabilities::constant(ids(7), 1.0).unwrap();
        let set = sample_climate_scenarios(&all, 5, 1).unwrap();
        assert!(set.scenarios.iter().all(|s| s.failed_count() == 7));
        let none = FailureProbabilities::constant(ids(7), 0.0).unwrap();
        let set = sample_climate_scenarios(&none, 5, 1).unwrap();
        assert!(set.scenarios.iter().all(|s| s.failed_count() == 0));
        let idx: Vec<usize> = set.scenarios.iter().map(|s| s.run_index).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
        assert!(sample_climate_scenarios(&none, 0, 1).is_err());
    }

    #[test]
    fn bernoulli_frequency_is_within_three_sigma() {
        // Binomial(10000, 0.5): sd of the frequency is 0.005.
        let p = FailureProbabilities::constant(ids(1), 0.5).unwrap();
        let set = sample_climate_scenarios(&p, 10_000, 2024).unwrap();
        let freq = set.scenarios.iter().filter(|s| s.failed_count() == 1).count() as f64 / 1e4;
        assert!((freq - 0.5).abs() <= 0.015, "{freq}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = FailureProbabilities::new(ids(4), vec![0.1, 0.5, 0.7, 0.9]).unwrap();
        assert_eq!(sample_climate_scenarios(&p, 20, 9).unwrap(), sample_climate_scenarios(&p, 20, 9).unwrap());
        assert_ne!(sample_climate_scenarios(&p, 20, 9).unwrap(), sample_climate_scenarios(&p, 20, 10).unwrap());
    }

    #[test]
    fn random_baseline_counts() {
        let net = path_network(&[1.0; 10]);
        for s in generate_random_scenarios(&net, 0.4, 20, 3).unwrap().scenarios {
            assert_eq!(s.failed_count(), 0);
        }
        for s in generate_random_scenarios(&net, 3.4, 50, 3).unwrap().scenarios {
            assert_eq!(s.failed_count(), 3);
        }
        for s in generate_random_scenarios(&net, 2.5, 5, 3).unwrap().scenarios {
            assert_eq!(s.failed_count(), 3);
        }
        for s in generate_random_scenarios(&net, 10.0, 5, 3).unwrap().scenarios {
            assert_eq!(s.failed_count(), 10);
        }
        assert!(matches!(
            generate_random_scenarios(&net, 10.6, 1, 3),
            Err(Error::TooManyRemovals { requested: 11, available: 10 })
        ));
    }

    #[test]
    fn targeted_removes_busiest_edges() {
        let net = path_network(&[100.0, 50.0, 10.0]);
        let s = generate_targeted_scenario(&net, 2.0).unwrap();
        assert_eq!(s.failed_ids(), vec!["e1", "e2"]);
        assert_eq!(generate_targeted_scenario(&net, 0.0).unwrap().failed_count(), 0);
        let ties = path_network(&[5.0, 5.0]);
        assert_eq!(generate_targeted_scenario(&ties, 1.0).unwrap().failed_ids(), vec!["e1"]);
        assert!(generate_targeted_scenario(&ties, 3.0).is_err());
    }

    #[test]
    fn jsonl_output() {
        let s = FailureScenario::with_failed(ids(3), &["e01"], Strategy::Random, 4).unwrap();
        let set = ScenarioSet { scenarios: vec![s], event_ref: None, seed: 0 };
        let mut buf = Vec::new();
        set.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "{\"run_index\":4,\"failed_edges\":[\"e01\"]}\n");
    }
}
