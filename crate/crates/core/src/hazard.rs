//! Gridded weather events, projection onto assets, and fragility functions.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::AssetNetwork;
use crate::scalar::{lit, Scalar};
use crate::special::normal_cdf;

/// Shared, canonically ordered list of hazard-targeted asset ids.
pub type AssetIds = Arc<[String]>;

/// Regular latitude/longitude grid holding one time slice of a scalar field.
///
/// Row-major, row 0 southernmost; the centre of cell `(r, c)` sits at
/// `(lat0 + r * dlat, lon0 + c * dlon)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherGrid<T> {
    lat0: T,
    lon0: T,
    dlat: T,
    dlon: T,
    nrows: usize,
    ncols: usize,
    values: Vec<T>,
}

impl<T: Scalar> WeatherGrid<T> {
    pub fn new(
        lat0: T,
        lon0: T,
        dlat: T,
        dlon: T,
        nrows: usize,
        ncols: usize,
        values: Vec<T>,
    ) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return Err(Error::param("grid", "nrows and ncols must be positive"));
        }
        if !(dlat > T::zero()) || !(dlon > T::zero()) {
            return Err(Error::param("grid", "dlat and dlon must be positive"));
        }
        if values.len() != nrows * ncols {
            return Err(Error::param(
                "grid",
                format!("expected {} values, found {}", nrows * ncols, values.len()),
            ));
        }
        Ok(WeatherGrid {
            lat0,
            lon0,
            dlat,
            dlon,
            nrows,
            ncols,
            values,
        })
    }

    /// Grid with the same value everywhere.
    pub fn uniform(lat0: T, lon0: T, dlat: T, dlon: T, nrows: usize, ncols: usize, value: T) -> Result<Self> {
        Self::new(lat0, lon0, dlat, dlon, nrows, ncols, vec![value; nrows * ncols])
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, row: usize, col: usize) -> T {
        self.values[row * self.ncols + col]
    }

    /// Centre of a cell as `(lat, lon)`.
    pub fn cell_centre(&self, row: usize, col: usize) -> (T, T) {
        (
            self.lat0 + crate::scalar::count::<T>(row) * self.dlat,
            self.lon0 + crate::scalar::count::<T>(col) * self.dlon,
        )
    }

    /// Returns a copy with every value shifted by `delta`.
    pub fn shifted(&self, delta: T) -> Self {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v = *v + delta);
        g
    }

    fn nearest_axis(coord: T, origin: T, step: T, n: usize) -> Option<usize> {
        let half = lit::<T>(0.5);
        let f = (coord - origin) / step;
        if !(f >= -half) || !(f <= crate::scalar::count::<T>(n) - half) {
            return None;
        }
        // ceil(f - 1/2) sends exact half-way points to the lower index.
        let i = (f - half).ceil().max(T::zero()).to_usize()?;
        Some(i.min(n - 1))
    }

    /// Row and column of the cell whose centre is nearest `(lat, lon)`,
    /// or `None` outside the grid's cell-edge bounding box. Equidistant
    /// candidates resolve to the lower row-major index.
    pub fn nearest_cell(&self, lat: T, lon: T) -> Option<(usize, usize)> {
        let r = Self::nearest_axis(lat, self.lat0, self.dlat, self.nrows)?;
        let c = Self::nearest_axis(lon, self.lon0, self.dlon, self.ncols)?;
        Some((r, c))
    }

    pub fn sample(&self, lat: T, lon: T) -> Option<T> {
        self.nearest_cell(lat, lon).map(|(r, c)| self.value(r, c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherEvent<T> {
    pub date: NaiveDate,
    pub units: String,
    pub grid: WeatherGrid<T>,
}

/// On-disk layout of one `weather.json` event file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeatherFile {
    pub date: NaiveDate,
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
    pub nrows: usize,
    pub ncols: usize,
    #[serde(default = "default_units")]
    pub units: String,
    pub values: Vec<f64>,
}

fn default_units() -> String {
    "degC".to_string()
}

impl<T: Scalar> WeatherEvent<T> {
    pub fn from_file(file: WeatherFile) -> Result<Self> {
        let conv = |v: f64| T::from_f64(v).ok_or_else(|| Error::param("grid", "value not representable"));
        let values = file.values.iter().map(|&v| conv(v)).collect::<Result<Vec<_>>>()?;
        Ok(WeatherEvent {
            date: file.date,
            units: file.units,
            grid: WeatherGrid::new(
                conv(file.lat0)?,
                conv(file.lon0)?,
                conv(file.dlat)?,
                conv(file.dlon)?,
                file.nrows,
                file.ncols,
                values,
            )?,
        })
    }

    pub fn to_file(&self) -> WeatherFile {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        WeatherFile {
            date: self.date,
            lat0: f(self.grid.lat0),
            lon0: f(self.grid.lon0),
            dlat: f(self.grid.dlat),
            dlon: f(self.grid.dlon),
            nrows: self.grid.nrows,
            ncols: self.grid.ncols,
            units: self.units.clone(),
            values: self.grid.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn from_reader(input: impl Read, path: &Path) -> Result<Self> {
        let file: WeatherFile =
            serde_json::from_reader(BufReader::new(input)).map_err(|e| Error::format(path, e))?;
        Self::from_file(file).map_err(|e| Error::format(path, e))
    }
}

pub fn load_weather_event<T: Scalar>(path: &Path) -> Result<WeatherEvent<T>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    WeatherEvent::from_reader(f, path)
}

/// Loads every `*.json` event in a directory, sorted by date then file name.
pub fn load_event_series<T: Scalar>(dir: &Path) -> Result<Vec<WeatherEvent<T>>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut events = paths
        .iter()
        .map(|p| load_weather_event(p))
        .collect::<Result<Vec<WeatherEvent<T>>>>()?;
    events.sort_by_key(|e| e.date);
    Ok(events)
}

/// How an edge receives its local condition from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Projection {
    /// Nearest cell to the edge midpoint.
    Midpoint,
    /// Maximum over `samples` evenly spaced points along the edge.
    MaxAlong { samples: usize },
}

impl Default for Projection {
    fn default() -> Self {
        Projection::Midpoint
    }
}

impl Projection {
    fn fractions(self) -> Vec<f64> {
        match self {
            Projection::Midpoint => vec![0.5],
            Projection::MaxAlong { samples } => {
                let k = samples.max(1);
                (0..k).map(|i| (i as f64 + 0.5) / k as f64).collect()
            }
        }
    }
}

/// Local weather condition per hazard-targeted asset.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalConditions<T> {
    assets: AssetIds,
    omega: Vec<T>,
    projection: Projection,
}

impl<T: Scalar> LocalConditions<T> {
    pub fn new(assets: AssetIds, omega: Vec<T>) -> Result<Self> {
        if assets.len() != omega.len() {
            return Err(Error::param("omega", "one value per asset required"));
        }
        Ok(LocalConditions {
            assets,
            omega,
            projection: Projection::Midpoint,
        })
    }

    pub fn assets(&self) -> &AssetIds {
        &self.assets
    }

    pub fn values(&self) -> &[T] {
        &self.omega
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    pub fn get(&self, asset: &str) -> Option<T> {
        self.assets.iter().position(|a| a == asset).map(|i| self.omega[i])
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Mean condition over all assets; `None` when empty.
    pub fn mean(&self) -> Option<T> {
        (!self.omega.is_empty())
            .then(|| self.omega.iter().copied().sum::<T>() / crate::scalar::count(self.omega.len()))
    }
}

/// Edge ids of a network in canonical order.
pub fn edge_ids(network: &AssetNetwork) -> AssetIds {
    network.edges().iter().map(|e| e.id.clone()).collect()
}

/// Assigns every edge the grid value at its midpoint (or the max along it).
pub fn project_event<T: Scalar>(
    event: &WeatherEvent<T>,
    network: &AssetNetwork,
    projection: Projection,
) -> Result<LocalConditions<T>> {
    let fractions = projection.fractions();
    let omega = (0..network.edge_count())
        .map(|e| {
            let mut best: Option<T> = None;
            for &t in &fractions {
                let (lat, lon) = network.point_along(e, t);
                let v = T::from_f64(lat)
                    .zip(T::from_f64(lon))
                    .and_then(|(lat, lon)| event.grid.sample(lat, lon))
                    .ok_or_else(|| Error::OutOfDomain {
                        asset: network.edge(e).id.clone(),
                    })?;
                best = Some(best.map_or(v, |b: T| b.max(v)));
            }
            Ok(best.expect("at least one sample point"))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(LocalConditions {
        assets: edge_ids(network),
        omega,
        projection,
    })
}

/// Monotone map from local condition to failure probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FragilityFunction<T> {
    /// 0 below `threshold`, 1 at or above it.
    Step { threshold: T },
    /// CDF of a normal distribution with mean `mu` and standard deviation `sigma`.
    GaussianSigmoid { mu: T, sigma: T },
}

impl<T: Scalar> FragilityFunction<T> {
    pub fn step(threshold: T) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::param("threshold", "must be finite"));
        }
        Ok(FragilityFunction::Step { threshold })
    }

    pub fn gaussian_sigmoid(mu: T, sigma: T) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::param("mu", "must be finite"));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::param("sigma", format!("{sigma} must be positive")));
        }
        Ok(FragilityFunction::GaussianSigmoid { mu, sigma })
    }

    pub fn evaluate(&self, omega: T) -> T {
        evaluate_fragility(self, omega)
    }
}

pub fn evaluate_fragility<T: Scalar>(f: &FragilityFunction<T>, omega: T) -> T {
    match *f {
        FragilityFunction::Step { threshold } => {
            if omega >= threshold {
                T::one()
            } else {
                T::zero()
            }
        }
        FragilityFunction::GaussianSigmoid { mu, sigma } => normal_cdf((omega - mu) / sigma),
    }
}

/// Failure probability per hazard-targeted asset.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureProbabilities<T> {
    assets: AssetIds,
    p: Vec<T>,
}

impl<T: Scalar> FailureProbabilities<T> {
    pub fn new(assets: AssetIds, p: Vec<T>) -> Result<Self> {
        if assets.len() != p.len() {
            return Err(Error::param("p", "one probability per asset required"));
        }
        if let Some(bad) = p.iter().find(|&&v| !(v >= T::zero() && v <= T::one())) {
            return Err(Error::param("p", format!("{bad} not in [0, 1]")));
        }
        Ok(FailureProbabilities { assets, p })
    }

    /// Same probability for every asset.
    pub fn constant(assets: AssetIds, p: T) -> Result<Self> {
        let n = assets.len();
        Self::new(assets, vec![p; n])
    }

    pub fn assets(&self) -> &AssetIds {
        &self.assets
    }

    pub fn values(&self) -> &[T] {
        &self.p
    }

    pub fn get(&self, asset: &str) -> Option<T> {
        self.assets.iter().position(|a| a == asset).map(|i| self.p[i])
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

pub fn failure_probabilities<T: Scalar>(
    cond: &LocalConditions<T>,
    f: &FragilityFunction<T>,
) -> FailureProbabilities<T> {
    FailureProbabilities {
        assets: cond.assets.clone(),
        p: cond.omega.iter().map(|&w| evaluate_fragility(f, w)).collect(),
    }
}

/// Expected number of failed assets, the sum of failure probabilities.
pub fn expected_failed_edges<T: Scalar>(p: &FailureProbabilities<T>) -> T {
    p.p.iter().copied().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{AssetEdge, AssetNode};
    use proptest::prelude::*;

    fn ids(n: usize) -> AssetIds {
        (0..n).map(|i| format!("e{i}")).collect()
    }

    fn one_edge(a: (f64, f64), b: (f64, f64)) -> AssetNetwork {
        AssetNetwork::new(
            vec![
                AssetNode { id: "a".into(), lat: a.0, lon: a.1 },
                AssetNode { id: "b".into(), lat: b.0, lon: b.1 },
            ],
            vec![AssetEdge::new("e1", "a", "b", 1.0, 1.0)],
        )
        .unwrap()
    }

    fn event(grid: WeatherGrid<f64>) -> WeatherEvent<f64> {
        WeatherEvent {
            date: NaiveDate::from_ymd_opt(2030, 7, 1).unwrap(),
            units: "degC".into(),
            grid,
        }
    }

    #[test]
    fn single_cell_grid() {
        let g = WeatherGrid::new(51.0, 0.0, 1.0, 1.0, 1, 1, vec![30.0]).unwrap();
        let c = project_event(&event(g), &one_edge((51.0, -0.2), (51.2, 0.2)), Projection::Midpoint).unwrap();
        assert_eq!(c.values(), &[30.0]);
    }

    #[test]
    fn two_cell_lookup_and_out_of_domain() {
        let g = WeatherGrid::new(50.0, 0.0, 1.0, 1.0, 2, 1, vec![20.0, 40.0]).unwrap();
        let net = one_edge((49.8, 0.0), (50.2, 0.0));
        assert_eq!(project_event(&event(g.clone()), &net, Projection::Midpoint).unwrap().values(), &[20.0]);
        let far = one_edge((60.0, 0.0), (60.2, 0.0));
        let err = project_event(&event(g), &far, Projection::Midpoint).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain { ref asset } if asset == "e1"));
    }

    #[test]
    fn max_along_mode_sees_the_hot_end() {
        let g = WeatherGrid::new(50.0, 0.0, 1.0, 1.0, 1, 3, vec![20.0, 25.0, 40.0]).unwrap();
        let net = one_edge((50.0, 0.0), (50.0, 2.0));
        let mid = project_event(&event(g.clone()), &net, Projection::Midpoint).unwrap();
        assert_eq!(mid.values(), &[25.0]);
        let max = project_event(&event(g), &net, Projection::MaxAlong { samples: 5 }).unwrap();
        assert_eq!(max.values(), &[40.0]);
        assert_eq!(max.projection(), Projection::MaxAlong { samples: 5 });
    }

    /// Exhaustive oracle: strictly smaller squared distance wins, scanning row-major.
    fn brute_nearest(g: &WeatherGrid<f64>, lat: f64, lon: f64) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_d = f64::INFINITY;
        for r in 0..g.nrows() {
            for c in 0..g.ncols() {
                let (clat, clon) = g.cell_centre(r, c);
                let d = (clat - lat).powi(2) + (clon - lon).powi(2);
                if d < best_d {
                    best_d = d;
                    best = (r, c);
                }
            }
        }
        best
    }

    #[test]
    fn equidistant_points_pick_lower_row_major_index() {
        let g = WeatherGrid::new(10.0, 20.0, 0.5, 0.25, 4, 5, (0..20).map(f64::from).collect()).unwrap();
        // Exact half-way points on both axes, including a four-way tie.
        for &(lat, lon) in &[(10.25, 20.0), (10.0, 20.125), (10.25, 20.125), (11.25, 20.875)] {
            assert_eq!(g.nearest_cell(lat, lon), Some(brute_nearest(&g, lat, lon)), "({lat},{lon})");
        }
        assert_eq!(g.nearest_cell(10.25, 20.125), Some((0, 0)));
    }

    proptest! {
        #[test]
        fn nearest_cell_matches_exhaustive_search(fr in 0.0f64..1.0, fc in 0.0f64..1.0) {
            let g = WeatherGrid::new(-3.0, 7.0, 0.5, 0.25, 6, 9, vec![0.0; 54]).unwrap();
            let lat = -3.25 + fr * 3.0;
            let lon = 6.875 + fc * 2.25;
            prop_assert_eq!(g.nearest_cell(lat, lon), Some(brute_nearest(&g, lat, lon)));
        }

        #[test]
        fn sigmoid_is_monotone_and_symmetric(a in -50.0f64..120.0, b in -50.0f64..120.0, k in 0.0f64..6.0) {
            let f = FragilityFunction::gaussian_sigmoid(35.0, 2.5).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(f.evaluate(lo) <= f.evaluate(hi));
            let s = f.evaluate(35.0 - k * 2.5) + f.evaluate(35.0 + k * 2.5);
            prop_assert!((s - 1.0).abs() < 1e-14);
            let step = FragilityFunction::step(35.0).unwrap();
            prop_assert!(step.evaluate(lo) <= step.evaluate(hi));
        }

        #[test]
        fn uniform_field_projects_uniformly(v in -20.0f64..50.0) {
            let g = WeatherGrid::uniform(50.0, -2.0, 0.1, 0.1, 30, 40, v).unwrap();
            let net = one_edge((50.3, -1.5), (52.0, 1.0));
            let c = project_event(&event(g), &net, Projection::MaxAlong { samples: 7 }).unwrap();
            prop_assert!(c.values().iter().all(|&w| w == v));
        }
    }

    #[test]
    fn fragility_values() {
        let f = FragilityFunction::gaussian_sigmoid(35.0f64, 2.5).unwrap();
        assert!((f.evaluate(35.0) - 0.5).abs() < 1e-15);
        assert!((f.evaluate(30.0) - 0.02275013194817920720028264).abs() < 1e-13);
        let s = FragilityFunction::step(35.0).unwrap();
        assert_eq!(s.evaluate(34.9), 0.0);
        assert_eq!(s.evaluate(35.1), 1.0);
        assert!(FragilityFunction::gaussian_sigmoid(35.0, 0.0).is_err());
        assert!(f.evaluate(-1e6) == 0.0 && f.evaluate(1e6) == 1.0);
    }

    #[test]
    fn probabilities_and_expected_failures() {
        let f = FragilityFunction::gaussian_sigmoid(35.0f64, 2.5).unwrap();
        let cond = LocalConditions::new(ids(2), vec![30.0, 40.0]).unwrap();
        let p = failure_probabilities(&cond, &f);
        assert!((p.get("e0").unwrap() - 0.02275013194817920720028264).abs() < 1e-13);
        assert!((p.get("e1").unwrap() - 0.9772498680518207927997174).abs() < 1e-13);

        let cond = LocalConditions::new(ids(3), vec![35.0; 3]).unwrap();
        assert!(failure_probabilities(&cond, &f).values().iter().all(|&v| v == 0.5));
        let empty = LocalConditions::<f64>::new(ids(0), vec![]).unwrap();
        assert!(failure_probabilities(&empty, &f).is_empty());

        let half = FailureProbabilities::constant(ids(10), 0.5).unwrap();
        assert_eq!(expected_failed_edges(&half), 5.0);
        let zero = FailureProbabilities::constant(ids(10), 0.0).unwrap();
        assert_eq!(expected_failed_edges(&zero), 0.0);
        let p = FailureProbabilities::new(ids(3), vec![0.1f64, 0.2, 0.3]).unwrap();
        assert!((expected_failed_edges(&p) - 0.6).abs() < 1e-15);
        assert!(FailureProbabilities::new(ids(1), vec![1.5]).is_err());
    }

    #[test]
    fn psi_increases_with_a_warmer_field() {
        let f = FragilityFunction::gaussian_sigmoid(35.0, 2.5).unwrap();
        let values: Vec<f64> = (0..12).map(|i| 28.0 + i as f64).collect();
        let g = WeatherGrid::new(50.0, 0.0, 1.0, 1.0, 3, 4, values).unwrap();
        let net = one_edge((50.0, 0.0), (52.0, 3.0));
        let psi = |g: &WeatherGrid<f64>| {
            let c = project_event(&event(g.clone()), &net, Projection::MaxAlong { samples: 9 }).unwrap();
            expected_failed_edges(&failure_probabilities(&c, &f))
        };
        assert!(psi(&g.shifted(0.5)) > psi(&g));
    }

    #[test]
    fn weather_file_round_trip() {
        let json = r#"{"date":"2031-06-02","lat0":50.0,"lon0":-1.0,"dlat":0.5,"dlon":0.5,
            "nrows":1,"ncols":2,"units":"degC","values":[21.5,30.0]}"#;
        let e = WeatherEvent::<f64>::from_reader(json.as_bytes(), Path::new("x.json")).unwrap();
        assert_eq!(e.grid.value(0, 1), 30.0);
        let back = WeatherEvent::<f64>::from_file(e.to_file()).unwrap();
        assert_eq!(back, e);
        let bad = json.replace("\"nrows\":1", "\"nrows\":2");
        assert!(WeatherEvent::<f64>::from_reader(bad.as_bytes(), Path::new("x.json")).is_err());
        let single = WeatherEvent::<f32>::from_reader(json.as_bytes(), Path::new("x.json")).unwrap();
        assert_eq!(single.grid.value(0, 0), 21.5f32);
    }
}
