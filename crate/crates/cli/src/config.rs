use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use gridshock_core::hazard::Projection;
use gridshock_core::{Fragility, RecoveryModel, ReroutePolicy, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FragilityKind {
    Sigmoid,
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FragilityConfig {
    pub kind: FragilityKind,
    pub mu: f64,
    pub sigma: f64,
    pub threshold: f64,
}

impl Default for FragilityConfig {
    fn default() -> Self {
        FragilityConfig {
            kind: FragilityKind::Sigmoid,
            mu: 35.0,
            sigma: 2.5,
            threshold: 35.0,
        }
    }
}

impl FragilityConfig {
    pub fn build(&self) -> Result<Fragility> {
        Ok(match self.kind {
            FragilityKind::Sigmoid => {
                Fragility::gaussian_sigmoid(self.mu, self.sigma).context("fragility.mu / fragility.sigma")?
            }
            FragilityKind::Step => Fragility::step(self.threshold).context("fragility.threshold")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    /// `None` lets each command choose: off for `assess`/`compare`, on for `trend`.
    pub enabled: Option<bool>,
    pub k: usize,
    pub group_years: u32,
    /// First summer day as `MM-DD`.
    pub summer_start: String,
    /// Last summer day as `MM-DD`.
    pub summer_end: String,
    pub max_iter: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            enabled: None,
            k: 10,
            group_years: 5,
            summer_start: "05-01".into(),
            summer_end: "09-30".into(),
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendConfig {
    pub sg_window: usize,
    pub sg_order: usize,
    /// LOS histogram bins up to the largest sample.
    pub bins: usize,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig {
            sg_window: 5,
            sg_order: 2,
            bins: gridshock_core::analysis::DEFAULT_BINS,
        }
    }
}

/// Everything one invocation needs; serialised verbatim into the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub od: PathBuf,
    pub weather_dir: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub n_runs: usize,
    pub strategies: Vec<Strategy>,
    pub spare_fraction: f64,
    pub recovery_prob: f64,
    pub projection: Projection,
    pub fragility: FragilityConfig,
    pub policy: ReroutePolicy,
    pub clustering: ClusteringConfig,
    pub trend: TrendConfig,
    pub horizon_days: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nodes: "nodes.csv".into(),
            edges: "edges.csv".into(),
            od: "od.csv".into(),
            weather_dir: "weather".into(),
            out: "out".into(),
            seed: 0,
            n_runs: 250,
            strategies: Strategy::ALL.to_vec(),
            spare_fraction: gridshock_core::network::DEFAULT_SPARE_FRACTION,
            recovery_prob: 0.5,
            projection: Projection::Midpoint,
            fragility: FragilityConfig::default(),
            policy: ReroutePolicy::default(),
            clustering: ClusteringConfig::default(),
            trend: TrendConfig::default(),
            horizon_days: gridshock_core::simulate::DEFAULT_HORIZON_DAYS,
        }
    }
}

/// Command-line overrides; every flag wins over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file; relative paths inside it resolve against its directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub od: Option<PathBuf>,
    #[arg(long)]
    pub weather_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo runs per event and strategy.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Comma-separated subset of climate,random,targeted.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub strategies: Option<Vec<String>>,
    #[arg(long, value_enum)]
    pub fragility: Option<FragilityKind>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub spare_fraction: Option<f64>,
    #[arg(long)]
    pub recovery_prob: Option<f64>,
    #[arg(long)]
    pub max_paths: Option<usize>,
    #[arg(long)]
    pub detour_factor: Option<f64>,
    #[arg(long)]
    pub min_trips: Option<f64>,
    #[arg(long)]
    pub min_length_km: Option<f64>,
    /// Take the maximum over this many points along each edge instead of the midpoint.
    #[arg(long)]
    pub samples_along: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub group_years: Option<u32>,
    #[arg(long, overrides_with = "no_cluster")]
    pub cluster: bool,
    #[arg(long, overrides_with = "cluster")]
    pub no_cluster: bool,
    #[arg(long)]
    pub sg_window: Option<usize>,
    #[arg(long)]
    pub sg_order: Option<usize>,
}

fn resolve(base: Option<&Path>, p: PathBuf) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent();
        for p in [
            &mut cfg.nodes,
            &mut cfg.edges,
            &mut cfg.od,
            &mut cfg.weather_dir,
            &mut cfg.out,
        ] {
            *p = resolve(base, std::mem::take(p));
        }
        Ok(cfg)
    }

    /// Makes every path absolute so the resolved config can be re-run from any directory.
    pub fn absolutize(&mut self) -> Result<()> {
        for p in [
            &mut self.nodes,
            &mut self.edges,
            &mut self.od,
            &mut self.weather_dir,
            &mut self.out,
        ] {
            *p = std::path::absolute(&*p).with_context(|| format!("resolving {}", p.display()))?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serialising config")
    }

    /// Defaults, then the `--config` file, then individual flags.
    pub fn from_overrides(o: &Overrides) -> Result<Self> {
        let mut c = match &o.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = o.$flag.clone() { c.$($field).+ = v; })*
            };
        }
        set!(
            nodes => nodes,
            edges => edges,
            od => od,
            weather_dir => weather_dir,
            out => out,
            seed => seed,
            runs => n_runs,
            fragility => fragility.kind,
            mu => fragility.mu,
            sigma => fragility.sigma,
            threshold => fragility.threshold,
            spare_fraction => spare_fraction,
            recovery_prob => recovery_prob,
            max_paths => policy.max_paths,
            detour_factor => policy.detour_factor,
            min_trips => policy.min_trips,
            min_length_km => policy.min_length_km,
            k => clustering.k,
            group_years => clustering.group_years,
            sg_window => trend.sg_window,
            sg_order => trend.sg_order,
        );
        if let Some(list) = &o.strategies {
            c.strategies = list
                .iter()
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<Strategy>())
                .collect::<Result<_, _>>()
                .context("--strategies")?;
        }
        if let Some(samples) = o.samples_along {
            c.projection = Projection::MaxAlong { samples };
        }
        if o.cluster {
            c.clustering.enabled = Some(true);
        }
        if o.no_cluster {
            c.clustering.enabled = Some(false);
        }
        c.absolutize()?;
        Ok(c)
    }

    /// Checks every numeric domain; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            bail!("config field `strategies`: at least one strategy is required");
        }
        let mut seen = self.strategies.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.strategies.len() {
            bail!("config field `strategies`: duplicate entries");
        }
        if self.n_runs == 0 {
            bail!("config field `n_runs`: must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.spare_fraction) {
            bail!("config field `spare_fraction`: {} outside [0, 1]", self.spare_fraction);
        }
        RecoveryModel::new(self.recovery_prob).context("config field `recovery_prob`")?;
        self.policy.validate().context("config field `policy`")?;
        self.fragility.build().context("config field `fragility`")?;
        if let Projection::MaxAlong { samples: 0 } = self.projection {
            bail!("config field `projection.samples`: must be at least 1");
        }
        if self.clustering.k == 0 {
            bail!("config field `clustering.k`: must be at least 1");
        }
        if self.clustering.group_years == 0 {
            bail!("config field `clustering.group_years`: must be at least 1");
        }
        self.summer_window()?;
        if self.trend.sg_window % 2 == 0 {
            bail!("config field `trend.sg_window`: must be odd");
        }
        if self.trend.sg_window <= self.trend.sg_order {
            bail!("config field `trend.sg_window`: must exceed `trend.sg_order`");
        }
        if self.trend.bins == 0 {
            bail!("config field `trend.bins`: must be at least 1");
        }
        if self.horizon_days == 0 {
            bail!("config field `horizon_days`: must be at least 1");
        }
        Ok(())
    }

    /// Checks that the input files exist.
    pub fn validate_inputs(&self, need_od: bool) -> Result<()> {
        let mut files = vec![("nodes", &self.nodes), ("edges", &self.edges)];
        if need_od {
            files.push(("od", &self.od));
        }
        for (field, path) in files {
            if !path.is_file() {
                bail!("config field `{field}`: {} does not exist", path.display());
            }
        }
        if !self.weather_dir.is_dir() {
            bail!("config field `weather_dir`: {} is not a directory", self.weather_dir.display());
        }
        Ok(())
    }

    /// Summer window as (month, day) bounds, inclusive.
    pub fn summer_window(&self) -> Result<((u32, u32), (u32, u32))> {
        let parse = |field: &str, s: &str| -> Result<(u32, u32)> {
            // A leap year accepts every valid month-day pair.
            let d = NaiveDate::parse_from_str(&format!("2000-{s}"), "%Y-%m-%d")
                .with_context(|| format!("config field `clustering.{field}`: `{s}` is not MM-DD"))?;
            Ok((chrono::Datelike::month(&d), chrono::Datelike::day(&d)))
        };
        let start = parse("summer_start", &self.clustering.summer_start)?;
        let end = parse("summer_end", &self.clustering.summer_end)?;
        if start > end {
            bail!("config field `clustering.summer_end`: window must not wrap the year end");
        }
        Ok((start, end))
    }

    pub fn recovery(&self) -> RecoveryModel {
        RecoveryModel {
            per_step_recovery_prob: self.recovery_prob,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("seed = 9\n[fragility]\nkind = \"step\"\nthreshold = 30.0\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.fragility.kind, FragilityKind::Step);
        assert_eq!(c.n_runs, 250);
        assert_eq!(c.clustering.k, 10);
        assert_eq!(c.clustering.group_years, 5);
        assert_eq!(c.policy, ReroutePolicy::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("n_run = 3\n").unwrap_err();
        assert!(format!("{err:#}").contains("n_run"));
    }

    #[test]
    fn empty_strategy_set_is_invalid() {
        let c = RunConfig {
            strategies: vec![],
            ..RunConfig::default()
        };
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("strategies"), "{err}");
        let o = Overrides {
            strategies: Some(vec![]),
            ..Overrides::default()
        };
        assert!(RunConfig::from_overrides(&o).unwrap().validate().is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "seed = 1\nn_runs = 20\nout = \"results\"\n[policy]\nmax_paths = 3\n").unwrap();
        let o = Overrides {
            config: Some(path),
            seed: Some(5),
            max_paths: Some(4),
            strategies: Some(vec!["climate".into()]),
            ..Overrides::default()
        };
        let c = RunConfig::from_overrides(&o).unwrap();
        assert_eq!((c.seed, c.n_runs, c.policy.max_paths), (5, 20, 4));
        assert_eq!(c.strategies, vec![Strategy::Climate]);
        assert_eq!(c.out, dir.path().join("results"));
    }

    #[test]
    fn bad_values_name_their_field() {
        let cases: Vec<(RunConfig, &str)> = vec![
            (RunConfig { n_runs: 0, ..RunConfig::default() }, "n_runs"),
            (RunConfig { recovery_prob: 0.0, ..RunConfig::default() }, "recovery_prob"),
            (RunConfig { spare_fraction: 1.5, ..RunConfig::default() }, "spare_fraction"),
            (
                RunConfig {
                    fragility: FragilityConfig { sigma: 0.0, ..FragilityConfig::default() },
                    ..RunConfig::default()
                },
                "fragility",
            ),
            (
                RunConfig {
                    clustering: ClusteringConfig { summer_start: "13-01".into(), ..ClusteringConfig::default() },
                    ..RunConfig::default()
                },
                "summer_start",
            ),
        ];
        for (c, field) in cases {
            let err = format!("{:#}", c.validate().unwrap_err());
            assert!(err.contains(field), "{err}");
        }
    }
}
