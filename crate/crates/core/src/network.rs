//! Bi-layer network model: the asset graph and the origin-destination flow layer.
//!
//! Nodes and edges are stored in lexicographic id order, and every index used
//! elsewhere in the crate (`edge: usize`, `node: usize`) refers to that order.
//! OD pairs keep the row order of the input table; an OD's id is its row index.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SPARE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetNode {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetEdge {
    pub id: String,
    pub u: String,
    pub v: String,
    pub length_km: f64,
    pub daily_traffic: f64,
    pub spare_capacity_fraction: f64,
}

impl AssetEdge {
    pub fn new(
        id: impl Into<String>,
        u: impl Into<String>,
        v: impl Into<String>,
        length_km: f64,
        daily_traffic: f64,
    ) -> Self {
        AssetEdge {
            id: id.into(),
            u: u.into(),
            v: v.into(),
            length_km,
            daily_traffic,
            spare_capacity_fraction: DEFAULT_SPARE_FRACTION,
        }
    }

    /// Extra trips per day this edge can carry on top of its regular traffic.
    pub fn spare_capacity(&self) -> f64 {
        self.spare_capacity_fraction * self.daily_traffic
    }
}

/// Undirected, geolocated asset graph.
#[derive(Debug, Clone)]
pub struct AssetNetwork {
    nodes: Vec<AssetNode>,
    edges: Vec<AssetEdge>,
    endpoints: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    node_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
}

impl AssetNetwork {
    pub fn new(mut nodes: Vec<AssetNode>, mut edges: Vec<AssetEdge>) -> Result<Self> {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        edges.sort_by(|a, b| a.id.cmp(&b.id));

        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !(-90.0..=90.0).contains(&n.lat) || !(-180.0..=180.0).contains(&n.lon) {
                return Err(Error::InvalidGeometry(format!(
                    "node `{}` has coordinates ({}, {})",
                    n.id, n.lat, n.lon
                )));
            }
            if node_index.insert(n.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(n.id.clone()));
            }
        }

        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut endpoints = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(e.id.clone()));
            }
            let u = *node_index
                .get(&e.u)
                .ok_or_else(|| Error::UnknownNode(e.u.clone()))?;
            let v = *node_index
                .get(&e.v)
                .ok_or_else(|| Error::UnknownNode(e.v.clone()))?;
            if u == v {
                return Err(Error::InvalidGeometry(format!("edge `{}` is a self-loop", e.id)));
            }
            if !(e.length_km > 0.0) || !e.length_km.is_finite() {
                return Err(Error::InvalidGeometry(format!(
                    "edge `{}` has non-positive length {}",
                    e.id, e.length_km
                )));
            }
            if !(e.daily_traffic >= 0.0) || !e.daily_traffic.is_finite() {
                return Err(Error::param(
                    "daily_traffic",
                    format!("edge `{}` has traffic {}", e.id, e.daily_traffic),
                ));
            }
            if !(0.0..=1.0).contains(&e.spare_capacity_fraction) {
                return Err(Error::param(
                    "spare_capacity_fraction",
                    format!("edge `{}` has fraction {}", e.id, e.spare_capacity_fraction),
                ));
            }
            endpoints.push((u, v));
            adjacency[u].push(i);
            adjacency[v].push(i);
        }

        Ok(AssetNetwork {
            nodes,
            edges,
            endpoints,
            adjacency,
            node_index,
            edge_index,
        })
    }

    pub fn from_readers(nodes: impl Read, edges: impl Read) -> Result<Self> {
        let nodes = read_nodes(nodes, Path::new("<nodes>"))?;
        let edges = read_edges(edges, Path::new("<edges>"))?;
        Self::new(nodes, edges)
    }

    /// Sets the spare capacity fraction of every edge.
    pub fn with_spare_fraction(mut self, fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::param("spare_fraction", format!("{fraction} not in [0, 1]")));
        }
        for e in &mut self.edges {
            e.spare_capacity_fraction = fraction;
        }
        Ok(self)
    }

    pub fn nodes(&self) -> &[AssetNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[AssetEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, edge: usize) -> &AssetEdge {
        &self.edges[edge]
    }

    pub fn node_ix(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn edge_ix(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    /// Node indices of an edge's endpoints.
    pub fn endpoints(&self, edge: usize) -> (usize, usize) {
        self.endpoints[edge]
    }

    /// The endpoint of `edge` opposite to `node`, if `node` is an endpoint.
    pub fn opposite(&self, edge: usize, node: usize) -> Option<usize> {
        let (u, v) = self.endpoints[edge];
        if u == node {
            Some(v)
        } else if v == node {
            Some(u)
        } else {
            None
        }
    }

    /// Incident edge indices of a node, in id order.
    pub fn incident(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Edges whose failure expresses the failure of a node asset.
    pub fn node_failure_edges(&self, node_id: &str) -> Result<Vec<String>> {
        let node = self
            .node_ix(node_id)
            .ok_or_else(|| Error::UnknownNode(node_id.to_string()))?;
        Ok(self.adjacency[node]
            .iter()
            .map(|&e| self.edges[e].id.clone())
            .collect())
    }

    /// Point at fraction `t` along the straight segment of an edge, as `(lat, lon)`.
    pub fn point_along(&self, edge: usize, t: f64) -> (f64, f64) {
        let (u, v) = self.endpoints[edge];
        let (a, b) = (&self.nodes[u], &self.nodes[v]);
        (a.lat + t * (b.lat - a.lat), a.lon + t * (b.lon - a.lon))
    }

    pub fn midpoint(&self, edge: usize) -> (f64, f64) {
        self.point_along(edge, 0.5)
    }

    /// Resolves edge ids into indices.
    pub fn resolve_edges<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.edge_ix(id.as_ref())
                    .ok_or_else(|| Error::UnknownEdge(id.as_ref().to_string()))
            })
            .collect()
    }

    pub fn write_nodes(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let p = Path::new("<nodes>");
        w.write_record(["id", "lat", "lon"]).map_err(|e| Error::format(p, e))?;
        for n in &self.nodes {
            w.write_record([n.id.clone(), n.lat.to_string(), n.lon.to_string()])
                .map_err(|e| Error::format(p, e))?;
        }
        w.flush().map_err(|e| Error::io(p, e))
    }

    pub fn write_edges(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let p = Path::new("<edges>");
        w.write_record(["id", "u", "v", "length_km", "daily_traffic"])
            .map_err(|e| Error::format(p, e))?;
        for e in &self.edges {
            w.write_record([
                e.id.clone(),
                e.u.clone(),
                e.v.clone(),
                e.length_km.to_string(),
                e.daily_traffic.to_string(),
            ])
            .map_err(|err| Error::format(p, err))?;
        }
        w.flush().map_err(|e| Error::io(p, e))
    }
}

/// Loads and validates the asset layer from `nodes.csv` and `edges.csv`.
pub fn load_asset_network(nodes_csv: &Path, edges_csv: &Path) -> Result<AssetNetwork> {
    let nodes = read_nodes(open(nodes_csv)?, nodes_csv)?;
    let edges = read_edges(open(edges_csv)?, edges_csv)?;
    AssetNetwork::new(nodes, edges)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn check_header<R: Read>(r: &mut csv::Reader<R>, expected: &[&str], path: &Path) -> Result<()> {
    let headers = r.headers().map_err(|e| Error::format(path, e))?;
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::format(
            path,
            format!("expected header `{}`, found `{}`", expected.join(","), found.join(",")),
        ));
    }
    Ok(())
}

#[derive(Deserialize)]
struct EdgeRow {
    id: String,
    u: String,
    v: String,
    length_km: f64,
    daily_traffic: f64,
}

#[derive(Deserialize)]
struct OdRow {
    origin: String,
    destination: String,
    demand: f64,
    path: String,
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input)
}

fn read_nodes(input: impl Read, path: &Path) -> Result<Vec<AssetNode>> {
    let mut r = reader(input);
    check_header(&mut r, &["id", "lat", "lon"], path)?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::format(path, e)))
        .collect()
}

fn read_edges(input: impl Read, path: &Path) -> Result<Vec<AssetEdge>> {
    let mut r = reader(input);
    check_header(&mut r, &["id", "u", "v", "length_km", "daily_traffic"], path)?;
    r.deserialize::<EdgeRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::format(path, e))?;
            Ok(AssetEdge::new(row.id, row.u, row.v, row.length_km, row.daily_traffic))
        })
        .collect()
}

/// Sum of edge lengths along a path; zero for the empty path.
pub fn path_length<S: AsRef<str>>(path: &[S], network: &AssetNetwork) -> Result<f64> {
    Ok(network
        .resolve_edges(path)?
        .into_iter()
        .map(|e| network.edge(e).length_km)
        .sum())
}

/// Same as [`path_length`] over resolved edge indices.
pub fn path_length_ix(path: &[usize], network: &AssetNetwork) -> f64 {
    path.iter().map(|&e| network.edge(e).length_km).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdPair {
    pub origin: String,
    pub destination: String,
    pub demand: f64,
    pub original_path: Vec<String>,
    pub original_length: f64,
    pub(crate) origin_ix: usize,
    pub(crate) destination_ix: usize,
    pub(crate) path_ix: Vec<usize>,
}

impl OdPair {
    pub fn origin_ix(&self) -> usize {
        self.origin_ix
    }

    pub fn destination_ix(&self) -> usize {
        self.destination_ix
    }

    /// Original path as edge indices of the paired network.
    pub fn path_ix(&self) -> &[usize] {
        &self.path_ix
    }
}

/// Unvalidated OD record, as read from `od.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdSpec {
    pub origin: String,
    pub destination: String,
    pub demand: f64,
    pub path: Vec<String>,
}

impl OdSpec {
    pub fn new(origin: &str, destination: &str, demand: f64, path: &[&str]) -> Self {
        OdSpec {
            origin: origin.to_string(),
            destination: destination.to_string(),
            demand,
            path: path.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowLayer {
    pairs: Vec<OdPair>,
    total_daily_demand: f64,
}

impl FlowLayer {
    pub fn new(specs: Vec<OdSpec>, network: &AssetNetwork) -> Result<Self> {
        let pairs = specs
            .into_iter()
            .enumerate()
            .map(|(od, spec)| validate_od(od, spec, network))
            .collect::<Result<Vec<_>>>()?;
        let total_daily_demand = pairs.iter().map(|p| p.demand).sum();
        Ok(FlowLayer {
            pairs,
            total_daily_demand,
        })
    }

    pub fn from_reader(od: impl Read, network: &AssetNetwork) -> Result<Self> {
        Self::new(read_od(od, Path::new("<od>"))?, network)
    }

    pub fn pairs(&self) -> &[OdPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_daily_demand(&self) -> f64 {
        self.total_daily_demand
    }

    pub fn write_od(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let p = Path::new("<od>");
        w.write_record(["origin", "destination", "demand", "path"])
            .map_err(|e| Error::format(p, e))?;
        for od in &self.pairs {
            w.write_record([
                od.origin.clone(),
                od.destination.clone(),
                od.demand.to_string(),
                od.original_path.join("|"),
            ])
            .map_err(|e| Error::format(p, e))?;
        }
        w.flush().map_err(|e| Error::io(p, e))
    }
}

/// Loads `od.csv` and validates every original path against the network.
pub fn load_flow_layer(od_csv: &Path, network: &AssetNetwork) -> Result<FlowLayer> {
    FlowLayer::new(read_od(open(od_csv)?, od_csv)?, network)
}

fn read_od(input: impl Read, path: &Path) -> Result<Vec<OdSpec>> {
    let mut r = reader(input);
    check_header(&mut r, &["origin", "destination", "demand", "path"], path)?;
    r.deserialize::<OdRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::format(path, e))?;
            let edges = if row.path.is_empty() {
                Vec::new()
            } else {
                row.path.split('|').map(|s| s.trim().to_string()).collect()
            };
            Ok(OdSpec {
                origin: row.origin,
                destination: row.destination,
                demand: row.demand,
                path: edges,
            })
        })
        .collect()
}

fn validate_od(od: usize, spec: OdSpec, network: &AssetNetwork) -> Result<OdPair> {
    let origin_ix = network
        .node_ix(&spec.origin)
        .ok_or_else(|| Error::UnknownNode(spec.origin.clone()))?;
    let destination_ix = network
        .node_ix(&spec.destination)
        .ok_or_else(|| Error::UnknownNode(spec.destination.clone()))?;
    if !(spec.demand >= 0.0) || !spec.demand.is_finite() {
        return Err(Error::param("demand", format!("OD {od} has demand {}", spec.demand)));
    }
    let path_ix = network.resolve_edges(&spec.path)?;

    let broken = |reason: String| Error::BrokenPath { od, reason };
    let mut seen = HashSet::with_capacity(path_ix.len());
    let mut at = origin_ix;
    for (&e, id) in path_ix.iter().zip(&spec.path) {
        if !seen.insert(e) {
            return Err(broken(format!("edge `{id}` repeated")));
        }
        at = network.opposite(e, at).ok_or_else(|| {
            broken(format!(
                "edge `{id}` does not touch node `{}`",
                network.nodes()[at].id
            ))
        })?;
    }
    if at != destination_ix {
        return Err(broken(format!(
            "walk ends at `{}` instead of `{}`",
            network.nodes()[at].id,
            spec.destination
        )));
    }

    let original_length = path_length_ix(&path_ix, network);
    Ok(OdPair {
        origin: spec.origin,
        destination: spec.destination,
        demand: spec.demand,
        original_path: spec.path,
        original_length,
        origin_ix,
        destination_ix,
        path_ix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODES: &str = "id,lat,lon\nA,51.0,-1.0\nB,51.0,0.0\n";
    const EDGES: &str = "id,u,v,length_km,daily_traffic\ne1,A,B,5,100\n";

    #[test]
    fn minimal_graph() {
        let net = AssetNetwork::from_readers(NODES.as_bytes(), EDGES.as_bytes()).unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.edge(0).spare_capacity(), 50.0);
    }

    #[test]
    fn dangling_endpoint_is_rejected() {
        let edges = "id,u,v,length_km,daily_traffic\ne1,A,X,5,1\n";
        let err = AssetNetwork::from_readers(NODES.as_bytes(), edges.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::UnknownNode(ref n) if n == "X"), "{err}");
    }

    #[test]
    fn duplicate_ids_and_bad_lengths() {
        let dup = "id,u,v,length_km,daily_traffic\ne1,A,B,5,1\ne1,B,A,5,1\n";
        assert!(matches!(
            AssetNetwork::from_readers(NODES.as_bytes(), dup.as_bytes()),
            Err(Error::DuplicateId(_))
        ));
        let zero = "id,u,v,length_km,daily_traffic\ne1,A,B,0,1\n";
        assert!(matches!(
            AssetNetwork::from_readers(NODES.as_bytes(), zero.as_bytes()),
            Err(Error::InvalidGeometry(_))
        ));
        let dup_node = "id,lat,lon\nA,0,0\nA,1,1\n";
        assert!(matches!(
            AssetNetwork::from_readers(dup_node.as_bytes(), "id,u,v,length_km,daily_traffic\n".as_bytes()),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn wrong_header_is_a_format_error() {
        let edges = "id,from,to,length_km,daily_traffic\ne1,A,B,5,1\n";
        assert!(matches!(
            AssetNetwork::from_readers(NODES.as_bytes(), edges.as_bytes()),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn flow_layer_totals() {
        let net = AssetNetwork::from_readers(NODES.as_bytes(), EDGES.as_bytes()).unwrap();
        let flow = FlowLayer::from_reader("origin,destination,demand,path\nA,B,10,e1\n".as_bytes(), &net)
            .unwrap();
        assert_eq!(flow.total_daily_demand(), 10.0);
        assert_eq!(flow.pairs()[0].original_length, 5.0);

        let flow = FlowLayer::new(
            vec![OdSpec::new("A", "B", 3.0, &["e1"]), OdSpec::new("B", "A", 7.0, &["e1"])],
            &net,
        )
        .unwrap();
        assert_eq!(flow.total_daily_demand(), 10.0);
    }

    #[test]
    fn path_lengths() {
        let nodes = vec![
            AssetNode { id: "a".into(), lat: 0.0, lon: 0.0 },
            AssetNode { id: "b".into(), lat: 0.0, lon: 1.0 },
            AssetNode { id: "c".into(), lat: 0.0, lon: 2.0 },
            AssetNode { id: "d".into(), lat: 0.0, lon: 3.0 },
        ];
        let edges = vec![
            AssetEdge::new("e1", "a", "b", 1.0, 0.0),
            AssetEdge::new("e2", "b", "c", 2.0, 0.0),
            AssetEdge::new("e3", "c", "d", 3.0, 0.0),
        ];
        let net = AssetNetwork::new(nodes, edges).unwrap();
        assert_eq!(path_length::<&str>(&[], &net).unwrap(), 0.0);
        assert_eq!(path_length(&["e1"], &net).unwrap(), 1.0);
        assert_eq!(path_length(&["e1", "e2", "e3"], &net).unwrap(), 6.0);
        assert!(matches!(path_length(&["zz"], &net), Err(Error::UnknownEdge(_))));

        // a -> c via e1 then e3 skips node b..c
        let err = FlowLayer::new(vec![OdSpec::new("a", "d", 1.0, &["e1", "e3"])], &net).unwrap_err();
        assert!(matches!(err, Error::BrokenPath { od: 0, .. }), "{err}");
        let err = FlowLayer::new(vec![OdSpec::new("a", "d", 1.0, &["e1", "e2"])], &net).unwrap_err();
        assert!(matches!(err, Error::BrokenPath { .. }), "{err}");
        let err = FlowLayer::new(vec![OdSpec::new("a", "b", 1.0, &["e9"])], &net).unwrap_err();
        assert!(matches!(err, Error::UnknownEdge(_)), "{err}");
        let err =
            FlowLayer::new(vec![OdSpec::new("a", "a", 1.0, &["e1", "e1"])], &net).unwrap_err();
        assert!(matches!(err, Error::BrokenPath { .. }), "{err}");
    }

    #[test]
    fn node_failure_maps_to_incident_edges() {
        let net = AssetNetwork::from_readers(NODES.as_bytes(), EDGES.as_bytes()).unwrap();
        assert_eq!(net.node_failure_edges("A").unwrap(), vec!["e1".to_string()]);
        assert!(net.node_failure_edges("Q").is_err());
    }
}
