//! Weather-driven failure and recovery simulation for bi-layer transport
//! networks: an asset graph carrying origin-destination flows.
//!
//! Hazard-side numerics are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix them to `f64`.

pub mod analysis;
pub mod error;
pub mod hazard;
pub mod network;
pub mod rng;
pub mod routing;
pub mod scalar;
pub mod scenario;
pub mod simulate;
pub mod special;
pub mod synthetic;

pub use error::{Error, Result};
pub use hazard::{
    edge_ids, evaluate_fragility, expected_failed_edges, failure_probabilities, load_event_series,
    load_weather_event, project_event, AssetIds, Projection, WeatherFile,
};
pub use network::{
    load_asset_network, load_flow_layer, path_length, AssetEdge, AssetNetwork, AssetNode, FlowLayer, OdPair,
    OdSpec,
};
pub use routing::{
    find_interrupted, immediate_disruption, k_shortest_paths, reroute_interrupted, EdgeMask, Path, ReroutePolicy,
    RerouteResult,
};
pub use scalar::Scalar;
pub use scenario::{
    generate_random_scenarios, generate_targeted_scenario, matched_removals, sample_climate_scenarios,
    scenarios_for, FailureScenario, ScenarioSet, Strategy,
};
pub use simulate::{
    assess_event, run_scenario, run_scenarios, LosDistribution, LosSummary, RecoveryModel, ScenarioOutcome,
    SimulationOptions,
};

pub type WeatherGrid = hazard::WeatherGrid<f64>;
pub type WeatherEvent = hazard::WeatherEvent<f64>;
pub type LocalConditions = hazard::LocalConditions<f64>;
pub type Fragility = hazard::FragilityFunction<f64>;
pub type FailureProbabilities = hazard::FailureProbabilities<f64>;
pub type DayFeatureMatrix = analysis::DayFeatureMatrix<f64>;
pub type Clustering = analysis::Clustering<f64>;
