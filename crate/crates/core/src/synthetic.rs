//! Synthetic bi-layer networks and hot-spot weather fields for testing and demos.
//!
//! Nodes are scattered over a lat/lon box, joined by a minimum spanning tree
//! plus the shortest remaining links. Node weights follow a Pareto law and OD
//! demand a gravity model, so edge traffic is strongly heterogeneous.

use std::fs;
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hazard::{FailureProbabilities, FragilityFunction, WeatherEvent, WeatherFile, WeatherGrid};
use crate::network::{AssetEdge, AssetNetwork, AssetNode, FlowLayer, OdSpec};
use crate::rng::{substream, Purpose};
use crate::routing::{k_shortest_paths, EdgeMask};

const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance between two points given in degrees.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().asin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub nodes: usize,
    pub edges: usize,
    pub od_pairs: usize,
    /// Pareto tail index of the node weights.
    pub pareto_alpha: f64,
    /// Largest node weight; caps the Pareto tail.
    pub max_weight: f64,
    /// Demand of the median OD pair, in trips per day.
    pub median_demand: f64,
    /// Traffic added to every edge on top of the OD load.
    pub background_traffic: f64,
    pub lat_range: (f64, f64),
    pub lon_range: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            nodes: 100,
            edges: 150,
            od_pairs: 500,
            pareto_alpha: 2.0,
            max_weight: 200.0,
            median_demand: 60.0,
            background_traffic: 20.0,
            lat_range: (50.0, 55.0),
            lon_range: (-4.0, 1.0),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticNetwork {
    pub network: AssetNetwork,
    pub flow: FlowLayer,
    /// Pareto weight per node, in canonical node order.
    pub weights: Vec<f64>,
    /// Canonical index of the heaviest node.
    pub hub: usize,
}

fn node_id(i: usize) -> String {
    format!("n{i:03}")
}

fn edge_id(i: usize) -> String {
    format!("e{i:03}")
}

/// Prim's algorithm on the complete distance graph; returns node pairs.
fn spanning_tree(dist: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = dist.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, 0usize); n];
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    in_tree[0] = true;
    for j in 1..n {
        best[j] = (dist[0][j], 0);
    }
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
            .expect("node outside the tree");
        in_tree[next] = true;
        tree.push((best[next].1.min(next), best[next].1.max(next)));
        for j in 0..n {
            if !in_tree[j] && dist[next][j] < best[j].0 {
                best[j] = (dist[next][j], next);
            }
        }
    }
    tree
}

/// Builds a connected network with `config.edges` links and a gravity-model flow layer.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticNetwork> {
    let n = config.nodes;
    if n < 2 {
        return Err(Error::param("nodes", "need at least 2 nodes"));
    }
    let max_edges = n * (n - 1) / 2;
    if config.edges < n - 1 || config.edges > max_edges {
        return Err(Error::param(
            "edges",
            format!("{} edges cannot form a connected simple graph on {n} nodes", config.edges),
        ));
    }
    if config.od_pairs > max_edges {
        return Err(Error::param("od_pairs", "more OD pairs than node pairs"));
    }
    if !(config.pareto_alpha > 0.0) || !(config.median_demand > 0.0) || !(config.background_traffic >= 0.0) {
        return Err(Error::param("synthetic", "weights and demands must be positive"));
    }
    let mut rng = substream(config.seed, Purpose::Synthetic, &[], 0);

    let (lat_lo, lat_hi) = config.lat_range;
    let (lon_lo, lon_hi) = config.lon_range;
    let nodes: Vec<AssetNode> = (0..n)
        .map(|i| AssetNode {
            id: node_id(i),
            lat: rng.random_range(lat_lo..lat_hi),
            lon: rng.random_range(lon_lo..lon_hi),
        })
        .collect();
    let weights: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            (1.0 - u).powf(-1.0 / config.pareto_alpha).min(config.max_weight)
        })
        .collect();
    let dist: Vec<Vec<f64>> = nodes
        .iter()
        .map(|a| nodes.iter().map(|b| haversine_km(a.lat, a.lon, b.lat, b.lon)).collect())
        .collect();

    let mut links = spanning_tree(&dist);
    let mut extra: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|pair| !links.contains(pair))
        .collect();
    extra.sort_by(|x, y| dist[x.0][x.1].total_cmp(&dist[y.0][y.1]).then(x.cmp(y)));
    links.extend(extra.into_iter().take(config.edges - (n - 1)));
    links.sort();

    let build = |traffic: &[f64]| {
        let edges = links
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| AssetEdge::new(edge_id(i), node_id(a), node_id(b), dist[a][b], traffic[i]))
            .collect();
        AssetNetwork::new(nodes.clone(), edges)
    };
    let bare = build(&vec![0.0; links.len()])?;

    // Gravity-model OD pairs, drawn without replacement.
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    let attraction = |&(a, b): &(usize, usize)| weights[a] * weights[b] / dist[a][b].max(1.0);
    let chosen = index::sample_weighted(&mut rng, pairs.len(), |i| attraction(&pairs[i]), config.od_pairs)
        .map_err(|e| Error::param("od_pairs", e.to_string()))?;
    let mut chosen: Vec<(usize, usize)> = chosen.into_iter().map(|i| pairs[i]).collect();
    chosen.sort();
    let mut raw: Vec<f64> = chosen.iter().map(attraction).collect();
    let mut sorted = raw.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    for d in &mut raw {
        *d = (*d / median * config.median_demand).round().max(1.0);
    }

    let none = EdgeMask::none(&bare);
    let mut load = vec![config.background_traffic; links.len()];
    let mut specs = Vec::with_capacity(chosen.len());
    for (&(a, b), &demand) in chosen.iter().zip(&raw) {
        let (o, d) = (bare.node_ix(&node_id(a)), bare.node_ix(&node_id(b)));
        let (o, d) = (o.expect("known node"), d.expect("known node"));
        let path = k_shortest_paths(&bare, &none, o, d, 1)
            .pop()
            .ok_or_else(|| Error::InvalidGeometry("synthetic network is disconnected".into()))?;
        for &e in &path.edges {
            load[e] += demand;
        }
        specs.push(OdSpec::new(&node_id(a), &node_id(b), demand, &path.edge_ids(&bare)));
    }

    let network = build(&load)?;
    let flow = FlowLayer::new(specs, &network)?;
    let hub = (0..n)
        .max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)))
        .expect("non-empty");
    let hub = network.node_ix(&node_id(hub)).expect("known node");
    let weights = network
        .nodes()
        .iter()
        .map(|nd| weights[nd.id[1..].parse::<usize>().expect("generated id")])
        .collect();
    Ok(SyntheticNetwork {
        network,
        flow,
        weights,
        hub,
    })
}

impl SyntheticNetwork {
    /// Writes `nodes.csv`, `edges.csv` and `od.csv` into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let open = |name: &str| {
            let path = dir.join(name);
            fs::File::create(&path).map_err(|e| Error::io(&path, e))
        };
        self.network.write_nodes(open("nodes.csv")?)?;
        self.network.write_edges(open("edges.csv")?)?;
        self.flow.write_od(open("od.csv")?)?;
        Ok(())
    }
}

/// Shape of a Gaussian warm anomaly over a flat background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HotSpot {
    pub lat: f64,
    pub lon: f64,
    pub base: f64,
    pub amplitude: f64,
    pub radius_km: f64,
}

/// Grid of `spacing`-degree cells covering the network with one cell of margin.
pub fn hot_spot_grid(network: &AssetNetwork, spot: &HotSpot, spacing: f64) -> Result<WeatherGrid<f64>> {
    if !(spacing > 0.0) || !(spot.radius_km > 0.0) {
        return Err(Error::param("hot_spot", "spacing and radius must be positive"));
    }
    let lats = network.nodes().iter().map(|n| n.lat);
    let lons = network.nodes().iter().map(|n| n.lon);
    let (lat_lo, lat_hi) = lats.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (lon_lo, lon_hi) = lons.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let lat0 = lat_lo - spacing;
    let lon0 = lon_lo - spacing;
    let nrows = ((lat_hi - lat0) / spacing).ceil() as usize + 2;
    let ncols = ((lon_hi - lon0) / spacing).ceil() as usize + 2;
    let mut values = Vec::with_capacity(nrows * ncols);
    for r in 0..nrows {
        for c in 0..ncols {
            let lat = lat0 + r as f64 * spacing;
            let lon = lon0 + c as f64 * spacing;
            let d = haversine_km(lat, lon, spot.lat, spot.lon) / spot.radius_km;
            values.push(spot.base + spot.amplitude * (-0.5 * d * d).exp());
        }
    }
    WeatherGrid::new(lat0, lon0, spacing, spacing, nrows, ncols, values)
}

fn psi_after_shift(omega: &[f64], fragility: &FragilityFunction<f64>, shift: f64) -> f64 {
    omega.iter().map(|&w| fragility.evaluate(w + shift)).sum()
}

/// Uniform offset to add to `omega` so the expected failure count equals `target_psi`.
pub fn calibrate_shift(omega: &[f64], fragility: &FragilityFunction<f64>, target_psi: f64) -> Result<f64> {
    if !(target_psi > 0.0) || target_psi >= omega.len() as f64 {
        return Err(Error::param(
            "target_psi",
            format!("{target_psi} outside (0, {})", omega.len()),
        ));
    }
    let (mut lo, mut hi) = (-1000.0, 1000.0);
    if psi_after_shift(omega, fragility, lo) > target_psi || psi_after_shift(omega, fragility, hi) < target_psi {
        return Err(Error::param("target_psi", "not reachable by a uniform shift"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if psi_after_shift(omega, fragility, mid) < target_psi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Failure probabilities from `omega` shifted to give exactly `target_psi` expected failures.
pub fn calibrated_probabilities(
    network: &AssetNetwork,
    omega: &[f64],
    fragility: &FragilityFunction<f64>,
    target_psi: f64,
) -> Result<FailureProbabilities<f64>> {
    let shift = calibrate_shift(omega, fragility, target_psi)?;
    let p = omega.iter().map(|&w| fragility.evaluate(w + shift)).collect();
    FailureProbabilities::new(crate::hazard::edge_ids(network), p)
}

/// Daily hot-spot events from `start`: a seasonal background plus a warm
/// anomaly whose strength and position wander from day to day.
pub fn daily_events(
    network: &AssetNetwork,
    centre: (f64, f64),
    start: NaiveDate,
    days: usize,
    seed: u64,
) -> Result<Vec<WeatherEvent<f64>>> {
    let mut rng = substream(seed, Purpose::Synthetic, &[1], 0);
    (0..days)
        .map(|i| {
            let date = start
                .checked_add_days(Days::new(i as u64))
                .ok_or_else(|| Error::param("start", "date overflow"))?;
            let season = (std::f64::consts::PI * i as f64 / 153.0).sin().max(0.0);
            let spot = HotSpot {
                lat: centre.0 + rng.random_range(-0.5..0.5),
                lon: centre.1 + rng.random_range(-0.5..0.5),
                base: 18.0 + 6.0 * season + rng.random_range(-2.0..2.0),
                amplitude: rng.random_range(0.0..14.0),
                radius_km: rng.random_range(40.0..120.0),
            };
            let grid = hot_spot_grid(network, &spot, 0.1)?;
            Ok(WeatherEvent {
                date,
                units: "degC".into(),
                grid,
            })
        })
        .collect()
}

/// Writes one `<date>.json` file per event into `dir`.
pub fn write_events(events: &[WeatherEvent<f64>], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for ev in events {
        let path = dir.join(format!("{}.json", ev.date));
        let file: WeatherFile = ev.to_file();
        let text = serde_json::to_string(&file).map_err(|e| Error::format(&path, e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hazard::{edge_ids, expected_failed_edges, project_event, Projection};

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            nodes: 20,
            edges: 30,
            od_pairs: 40,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn default_shape() {
        let s = generate(&SyntheticConfig::default()).unwrap();
        assert_eq!(s.network.node_count(), 100);
        assert_eq!(s.network.edge_count(), 150);
        assert_eq!(s.flow.len(), 500);
        let mut traffic: Vec<f64> = s.network.edges().iter().map(|e| e.daily_traffic).collect();
        traffic.sort_by(f64::total_cmp);
        assert!(traffic[0] >= 20.0);
        // Heavy-tailed: the busiest edge carries far more than the median one.
        assert!(traffic[149] > 10.0 * traffic[75]);
    }

    #[test]
    fn traffic_is_induced_load_plus_background() {
        let s = generate(&small()).unwrap();
        let mut load = vec![20.0; s.network.edge_count()];
        for od in s.flow.pairs() {
            for &e in od.path_ix() {
                load[e] += od.demand;
            }
        }
        for (e, l) in s.network.edges().iter().zip(load) {
            assert_eq!(e.daily_traffic, l);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        let csv = |s: &SyntheticNetwork| {
            let mut out = Vec::new();
            s.network.write_edges(&mut out).unwrap();
            s.flow.write_od(&mut out).unwrap();
            out
        };
        assert_eq!(csv(&a), csv(&b));
    }

    #[test]
    fn calibration_hits_target() {
        let s = generate(&small()).unwrap();
        let hub = &s.network.nodes()[s.hub];
        let spot = HotSpot {
            lat: hub.lat,
            lon: hub.lon,
            base: 20.0,
            amplitude: 12.0,
            radius_km: 80.0,
        };
        let grid = hot_spot_grid(&s.network, &spot, 0.1).unwrap();
        let event = WeatherEvent {
            date: NaiveDate::from_ymd_opt(2040, 7, 1).unwrap(),
            units: "degC".into(),
            grid,
        };
        let omega = project_event(&event, &s.network, Projection::Midpoint).unwrap();
        let f = FragilityFunction::gaussian_sigmoid(35.0, 2.5).unwrap();
        let p = calibrated_probabilities(&s.network, omega.values(), &f, 3.0).unwrap();
        assert!((expected_failed_edges(&p) - 3.0).abs() < 1e-9);
        assert_eq!(p.assets(), &edge_ids(&s.network));
        assert!(calibrate_shift(omega.values(), &f, 0.0).is_err());
    }

    #[test]
    fn haversine_reference() {
        // One degree of latitude is about 111.19 km on a 6371 km sphere.
        assert!((haversine_km(50.0, 0.0, 51.0, 0.0) - 111.1949).abs() < 1e-3);
        assert_eq!(haversine_km(52.0, -1.0, 52.0, -1.0), 0.0);
    }
}
