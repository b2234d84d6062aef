//! Mean loss of service per failure strategy on a synthetic network, at a
//! range of matched expected-failure counts.

use std::time::Instant;

use chrono::NaiveDate;
use gridshock_core::analysis::mann_whitney_u;
use gridshock_core::hazard::{project_event, Projection, WeatherEvent};
use gridshock_core::routing::EdgeMask;
use gridshock_core::synthetic::{calibrated_probabilities, generate, hot_spot_grid, HotSpot, SyntheticConfig};
use gridshock_core::{
    immediate_disruption, run_scenarios, scenarios_for, Fragility, RecoveryModel, ReroutePolicy, SimulationOptions,
    Strategy,
};

fn main() -> gridshock_core::Result<()> {
    let runs: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(250);
    let seed = 2024;
    let s = generate(&SyntheticConfig::default())?;
    let hub = &s.network.nodes()[s.hub];
    let spot = HotSpot {
        lat: hub.lat,
        lon: hub.lon,
        base: 20.0,
        amplitude: 12.0,
        radius_km: 80.0,
    };
    let event = WeatherEvent {
        date: NaiveDate::from_ymd_opt(2040, 7, 1).expect("valid date"),
        units: "degC".into(),
        grid: hot_spot_grid(&s.network, &spot, 0.1)?,
    };
    let omega = project_event(&event, &s.network, Projection::Midpoint)?;
    let fragility = Fragility::gaussian_sigmoid(35.0, 2.5)?;
    let policy = ReroutePolicy::default();
    let recovery = RecoveryModel::default();

    for psi in [2.0, 5.0, 10.0, 20.0] {
        let p = calibrated_probabilities(&s.network, omega.values(), &fragility, psi)?;
        let mut los = Vec::new();
        for strategy in Strategy::ALL {
            let t = Instant::now();
            let set = scenarios_for(strategy, &s.network, &p, runs, seed)?;
            let onset: f64 = set
                .scenarios
                .iter()
                .map(|sc| {
                    let mask = EdgeMask::from_flags(sc.states().iter().map(|&up| !up).collect());
                    immediate_disruption(&s.flow, &mask)
                })
                .sum::<gridshock_core::Result<f64>>()?
                / runs as f64;
            let out = run_scenarios(
                &s.network,
                &s.flow,
                &set.scenarios,
                &policy,
                &recovery,
                seed,
                &SimulationOptions::default(),
            )?;
            let sample: Vec<f64> = out.iter().map(|o| o.los).collect();
            let mean = sample.iter().sum::<f64>() / runs as f64;
            println!(
                "psi={psi:>4} {strategy:<9} mean_los={mean:.4} onset={onset:.4} ({:.1}s)",
                t.elapsed().as_secs_f64()
            );
            los.push(sample);
        }
        let mw = mann_whitney_u(&los[0], &los[1])?;
        println!("psi={psi:>4} climate vs random: U={} p={:.3e}", mw.u, mw.p_value);
    }
    Ok(())
}
