//! Interruption detection and greedy capacity-constrained rerouting.
//!
//! Rerouting follows a truncated successive-shortest-path scheme: for each
//! interrupted OD pair the first `max_paths` loopless paths of the surviving
//! graph (by geographical length) are tried in order, and each admissible path
//! carries as much of the remaining demand as its bottleneck spare capacity
//! allows.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{path_length_ix, AssetNetwork, FlowLayer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReroutePolicy {
    pub max_paths: usize,
    pub detour_factor: f64,
    pub min_trips: f64,
    pub min_length_km: f64,
}

impl Default for ReroutePolicy {
    fn default() -> Self {
        ReroutePolicy {
            max_paths: 5,
            detour_factor: 2.0,
            min_trips: 15.0,
            min_length_km: 30.0,
        }
    }
}

impl ReroutePolicy {
    /// Policy that filters nothing out.
    pub fn unfiltered(max_paths: usize, detour_factor: f64) -> Self {
        ReroutePolicy {
            max_paths,
            detour_factor,
            min_trips: 0.0,
            min_length_km: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_paths == 0 {
            return Err(Error::param("max_paths", "must be at least 1"));
        }
        if !(self.detour_factor >= 1.0) {
            return Err(Error::param("detour_factor", "must be at least 1"));
        }
        if !(self.min_trips >= 0.0) || !(self.min_length_km >= 0.0) {
            return Err(Error::param("min_trips/min_length_km", "must be non-negative"));
        }
        Ok(())
    }

    /// Whether an OD pair is excluded from the alternative path search.
    pub fn skips(&self, daily_demand: f64, original_length_km: f64) -> bool {
        daily_demand < self.min_trips || original_length_km < self.min_length_km
    }
}

/// Per-edge removal flags, indexed like the network's edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeMask(Vec<bool>);

impl EdgeMask {
    pub fn none(network: &AssetNetwork) -> Self {
        EdgeMask(vec![false; network.edge_count()])
    }

    pub fn from_ids<S: AsRef<str>>(network: &AssetNetwork, ids: &[S]) -> Result<Self> {
        let mut m = Self::none(network);
        for e in network.resolve_edges(ids)? {
            m.0[e] = true;
        }
        Ok(m)
    }

    pub fn from_flags(flags: Vec<bool>) -> Self {
        EdgeMask(flags)
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.0[edge]
    }

    pub fn insert(&mut self, edge: usize) {
        self.0[edge] = true;
    }

    pub fn remove(&mut self, edge: usize) {
        self.0[edge] = false;
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

/// A path as edge indices from origin to destination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub edges: Vec<usize>,
    pub length_km: f64,
}

impl Path {
    fn cmp_rank(&self, other: &Self) -> Ordering {
        self.length_km
            .total_cmp(&other.length_km)
            .then_with(|| self.edges.cmp(&other.edges))
    }

    pub fn edge_ids<'n>(&self, network: &'n AssetNetwork) -> Vec<&'n str> {
        self.edges.iter().map(|&e| network.edge(e).id.as_str()).collect()
    }
}

#[derive(Debug, Clone)]
struct Ranked(Path);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp_rank(&other.0)
    }
}

/// Shortest path from `source` to `target` avoiding blocked edges and nodes.
/// Equal-length alternatives resolve to the lexicographically smaller edge
/// sequence. Returns the edges and the accumulated length.
fn dijkstra(
    network: &AssetNetwork,
    source: usize,
    target: usize,
    blocked_edges: &[bool],
    blocked_nodes: &[bool],
) -> Option<(Vec<usize>, f64)> {
    let n = network.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((OrdF64(0.0), source)));

    let chain = |prev: &[Option<usize>], mut node: usize| {
        let mut edges = Vec::new();
        while let Some(e) = prev[node] {
            edges.push(e);
            node = network.opposite(e, node).expect("edge touches node");
        }
        edges.reverse();
        edges
    };

    while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == target {
            break;
        }
        for &e in network.incident(u) {
            if blocked_edges[e] {
                continue;
            }
            let v = network.opposite(e, u).expect("incident edge");
            if blocked_nodes[v] || done[v] {
                continue;
            }
            let nd = d + network.edge(e).length_km;
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = Some(e);
                heap.push(Reverse((OrdF64(nd), v)));
            } else if nd == dist[v] {
                let mut via_u = chain(&prev, u);
                via_u.push(e);
                if via_u < chain(&prev, v) {
                    prev[v] = Some(e);
                }
            }
        }
    }
    done[target].then(|| (chain(&prev, target), dist[target]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn node_sequence(network: &AssetNetwork, origin: usize, edges: &[usize]) -> Vec<usize> {
    let mut nodes = Vec::with_capacity(edges.len() + 1);
    nodes.push(origin);
    let mut at = origin;
    for &e in edges {
        at = network.opposite(e, at).expect("connected path");
        nodes.push(at);
    }
    nodes
}

/// Lazily ranked loopless paths between two nodes (Yen's method).
#[derive(Debug, Clone)]
pub struct PathRanking {
    origin: usize,
    destination: usize,
    found: Vec<Path>,
    found_set: HashSet<Vec<usize>>,
    candidates: BTreeSet<Ranked>,
    exhausted: bool,
}

impl PathRanking {
    pub fn new(origin: usize, destination: usize) -> Self {
        PathRanking {
            origin,
            destination,
            found: Vec::new(),
            found_set: HashSet::new(),
            candidates: BTreeSet::new(),
            exhausted: origin == destination,
        }
    }

    /// The `i`-th shortest loopless path, computing it if needed.
    pub fn get(&mut self, i: usize, network: &AssetNetwork, removed: &EdgeMask) -> Option<&Path> {
        while self.found.len() <= i && !self.exhausted {
            self.advance(network, removed);
        }
        self.found.get(i)
    }

    fn push(&mut self, p: Path) {
        self.found_set.insert(p.edges.clone());
        self.found.push(p);
    }

    fn advance(&mut self, network: &AssetNetwork, removed: &EdgeMask) {
        let Some(last) = self.found.last() else {
            let no_nodes = vec![false; network.node_count()];
            match dijkstra(network, self.origin, self.destination, &removed.0, &no_nodes) {
                Some((edges, _)) => {
                    let length_km = path_length_ix(&edges, network);
                    self.push(Path { edges, length_km });
                }
                None => self.exhausted = true,
            }
            return;
        };

        let last_edges = last.edges.clone();
        let nodes = node_sequence(network, self.origin, &last_edges);
        let mut blocked_edges = removed.0.clone();
        let mut blocked_nodes = vec![false; network.node_count()];
        for i in 0..last_edges.len() {
            let spur = nodes[i];
            let root = &last_edges[..i];
            let mut excluded = Vec::new();
            for p in &self.found {
                if p.edges.len() > i && p.edges[..i] == *root && !blocked_edges[p.edges[i]] {
                    blocked_edges[p.edges[i]] = true;
                    excluded.push(p.edges[i]);
                }
            }
            if let Some((spur_edges, _)) =
                dijkstra(network, spur, self.destination, &blocked_edges, &blocked_nodes)
            {
                let mut edges = root.to_vec();
                edges.extend(spur_edges);
                if !self.found_set.contains(&edges) {
                    let length_km = path_length_ix(&edges, network);
                    self.candidates.insert(Ranked(Path { edges, length_km }));
                }
            }
            for e in excluded {
                blocked_edges[e] = false;
            }
            blocked_nodes[spur] = true;
        }

        match self.candidates.pop_first() {
            Some(Ranked(p)) => self.push(p),
            None => self.exhausted = true,
        }
    }
}

/// Up to `k` loopless paths avoiding `removed`, ordered by length then by
/// edge-id sequence.
pub fn k_shortest_paths(
    network: &AssetNetwork,
    removed: &EdgeMask,
    origin: usize,
    destination: usize,
    k: usize,
) -> Vec<Path> {
    let mut ranking = PathRanking::new(origin, destination);
    (0..k)
        .map_while(|i| ranking.get(i, network, removed).cloned())
        .collect()
}

/// Ranked paths per (origin, destination) for one fixed removed-edge mask.
#[derive(Debug, Default)]
pub struct PathCache {
    rankings: HashMap<(usize, usize), PathRanking>,
}

impl PathCache {
    pub fn clear(&mut self) {
        self.rankings.clear();
    }

    fn ranking(&mut self, origin: usize, destination: usize) -> &mut PathRanking {
        self.rankings
            .entry((origin, destination))
            .or_insert_with(|| PathRanking::new(origin, destination))
    }
}

/// Spare capacity left on each surviving edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualNetwork {
    residual: Vec<f64>,
    removed: EdgeMask,
}

impl ResidualNetwork {
    pub fn new(network: &AssetNetwork, removed: &EdgeMask) -> Self {
        let residual = network
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| if removed.contains(i) { 0.0 } else { e.spare_capacity() })
            .collect();
        ResidualNetwork {
            residual,
            removed: removed.clone(),
        }
    }

    pub fn removed(&self) -> &EdgeMask {
        &self.removed
    }

    pub fn residual(&self, edge: usize) -> f64 {
        self.residual[edge]
    }

    pub fn bottleneck(&self, path: &[usize]) -> f64 {
        path.iter()
            .map(|&e| self.residual[e])
            .fold(f64::INFINITY, f64::min)
    }

    fn consume(&mut self, path: &[usize], flow: f64) {
        for &e in path {
            self.residual[e] = (self.residual[e] - flow).max(0.0);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RerouteResult {
    /// Trips delivered per OD id.
    pub delivered: BTreeMap<usize, f64>,
    /// Undelivered trips per OD id.
    pub shortfall: BTreeMap<usize, f64>,
    pub paths_used: BTreeMap<usize, Vec<(Path, f64)>>,
    /// OD ids excluded from the path search by the policy.
    pub skipped: BTreeSet<usize>,
}

impl RerouteResult {
    pub fn total_delivered(&self) -> f64 {
        self.delivered.values().sum()
    }
}

/// OD ids whose original path uses a removed edge, ascending.
pub fn find_interrupted(flow: &FlowLayer, removed: &EdgeMask) -> Vec<usize> {
    flow.pairs()
        .iter()
        .enumerate()
        .filter(|(_, od)| od.path_ix().iter().any(|&e| removed.contains(e)))
        .map(|(i, _)| i)
        .collect()
}

/// Share of total daily demand whose original path is broken, before any rerouting.
pub fn immediate_disruption(flow: &FlowLayer, removed: &EdgeMask) -> Result<f64> {
    let total = flow.total_daily_demand();
    if !(total > 0.0) {
        return Err(Error::DegenerateDemand);
    }
    let hit: f64 = find_interrupted(flow, removed)
        .into_iter()
        .map(|od| flow.pairs()[od].demand)
        .sum();
    Ok(hit / total)
}

/// Order in which interrupted ODs claim spare capacity: larger demand first, then OD id.
pub fn processing_order(demands: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut order = demands.to_vec();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order
}

/// Reassigns interrupted demand over spare capacity.
///
/// `demands` holds `(od id, trips to move today)`. Residual capacities are
/// fresh spare capacities of the surviving edges.
pub fn reroute_interrupted(
    network: &AssetNetwork,
    removed: &EdgeMask,
    flow: &FlowLayer,
    demands: &[(usize, f64)],
    policy: &ReroutePolicy,
) -> RerouteResult {
    let mut residual = ResidualNetwork::new(network, removed);
    let mut cache = PathCache::default();
    reroute_on(network, &mut residual, &mut cache, flow, demands, policy)
}

/// [`reroute_interrupted`] over caller-owned residuals and path cache. The
/// cache must have been built for `residual.removed()`.
pub fn reroute_on(
    network: &AssetNetwork,
    residual: &mut ResidualNetwork,
    cache: &mut PathCache,
    flow: &FlowLayer,
    demands: &[(usize, f64)],
    policy: &ReroutePolicy,
) -> RerouteResult {
    let mut result = RerouteResult::default();
    let removed = residual.removed.clone();
    for (od_id, demand) in processing_order(demands) {
        let od = &flow.pairs()[od_id];
        if policy.skips(od.demand, od.original_length) {
            result.skipped.insert(od_id);
            result.delivered.insert(od_id, 0.0);
            result.shortfall.insert(od_id, demand);
            continue;
        }
        let bound = policy.detour_factor * od.original_length;
        let ranking = cache.ranking(od.origin_ix(), od.destination_ix());
        let mut remaining = demand;
        let mut used = Vec::new();
        for i in 0..policy.max_paths {
            if !(remaining > 0.0) {
                break;
            }
            let Some(path) = ranking.get(i, network, &removed) else {
                break;
            };
            if path.length_km > bound {
                // Later paths are no shorter.
                break;
            }
            let b = residual.bottleneck(&path.edges);
            if !(b > 0.0) {
                continue;
            }
            let f = remaining.min(b);
            residual.consume(&path.edges, f);
            remaining -= f;
            used.push((path.clone(), f));
        }
        result.delivered.insert(od_id, demand - remaining);
        result.shortfall.insert(od_id, remaining);
        if !used.is_empty() {
            result.paths_used.insert(od_id, used);
        }
    }
    result
}
