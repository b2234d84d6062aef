use gridshock_core::hazard::edge_ids;
use gridshock_core::synthetic::{generate, SyntheticConfig};
use gridshock_core::{
    generate_random_scenarios, run_scenario, AssetEdge, AssetNetwork, AssetNode, FailureScenario, FlowLayer, OdSpec,
    RecoveryModel, ReroutePolicy, Strategy,
};

fn small_synthetic() -> gridshock_core::synthetic::SyntheticNetwork {
    generate(&SyntheticConfig {
        nodes: 25,
        edges: 40,
        od_pairs: 60,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

#[test]
fn demand_is_conserved_and_quality_bounded() {
    let s = small_synthetic();
    let daily = s.flow.total_daily_demand();
    for psi in [1.0, 4.0, 12.0] {
        let set = generate_random_scenarios(&s.network, psi, 30, 17).unwrap();
        for sc in &set.scenarios {
            let out = run_scenario(
                &s.network,
                &s.flow,
                sc,
                &ReroutePolicy::default(),
                &RecoveryModel::default(),
                17,
            )
            .unwrap();
            assert_eq!(*out.q_series.last().unwrap(), 1.0);
            assert!(out.q_series.iter().all(|&q| (0.0..=1.0).contains(&q)));
            for (d, m) in out.delivered.iter().zip(&out.demanded) {
                assert!(*d <= *m + 1e-9);
            }
            let injected = daily * out.q_series.len() as f64;
            let delivered: f64 = out.delivered.iter().sum();
            assert!((injected - delivered).abs() < 1e-6 * injected, "{injected} vs {delivered}");
            let shortfall: f64 = out.q_series.iter().map(|q| 1.0 - q).sum();
            assert!((out.los - shortfall).abs() < 1e-12);
            assert_eq!(out.recovery_day, out.q_series.len() - 1);
        }
    }
}

/// Every edge down for one day, no way around, backlog drained at a fraction
/// `s` of daily demand once the original paths are back. With backlog
/// `d (1 - (k-1) s)` entering day `k`, the day's loss is
/// `max(0, 1 - k s) / (2 - (k-1) s)`.
fn drain_oracle(s: f64) -> (Vec<f64>, f64) {
    let mut q = vec![0.0];
    let mut k = 1.0;
    loop {
        let left = (1.0 - k * s).max(0.0);
        let loss = left / (2.0 - (k - 1.0) * s);
        q.push(1.0 - loss);
        if left == 0.0 {
            break;
        }
        k += 1.0;
    }
    let los = q.iter().map(|v| 1.0 - v).sum();
    (q, los)
}

#[test]
fn total_failure_matches_drain_closed_form() {
    let node = |id: &str, lon: f64| AssetNode {
        id: id.into(),
        lat: 51.0,
        lon,
    };
    for fraction in [0.5, 0.25, 0.2, 0.1] {
        let net = AssetNetwork::new(
            vec![node("a", 0.0), node("b", 0.5), node("c", 1.0)],
            vec![
                AssetEdge::new("ab", "a", "b", 40.0, 100.0),
                AssetEdge::new("bc", "b", "c", 40.0, 60.0),
            ],
        )
        .unwrap()
        .with_spare_fraction(fraction)
        .unwrap();
        let flow = FlowLayer::new(
            vec![
                OdSpec::new("a", "b", 40.0, &["ab"]),
                OdSpec::new("b", "c", 20.0, &["bc"]),
                OdSpec::new("a", "c", 40.0, &["ab", "bc"]),
            ],
            &net,
        )
        .unwrap();
        let sc = FailureScenario::with_failed(edge_ids(&net), &["ab", "bc"], Strategy::Random, 0).unwrap();
        let out = run_scenario(&net, &flow, &sc, &ReroutePolicy::default(), &RecoveryModel::new(1.0).unwrap(), 9)
            .unwrap();
        let (q, los) = drain_oracle(fraction);
        assert_eq!(out.q_series.len(), q.len(), "fraction {fraction}");
        for (a, b) in out.q_series.iter().zip(&q) {
            assert!((a - b).abs() < 1e-12, "{:?} vs {q:?}", out.q_series);
        }
        assert!((out.los - los).abs() < 1e-12);
    }
}

#[test]
fn four_cycle_reroutes_the_other_way() {
    // a - b - c - d - a, every node of degree 2.
    let node = |id: &str, lat: f64, lon: f64| AssetNode { id: id.into(), lat, lon };
    let net = AssetNetwork::new(
        vec![node("a", 51.0, 0.0), node("b", 51.0, 0.5), node("c", 51.5, 0.5), node("d", 51.5, 0.0)],
        vec![
            AssetEdge::new("ab", "a", "b", 35.0, 40.0),
            AssetEdge::new("bc", "b", "c", 55.0, 40.0),
            AssetEdge::new("cd", "c", "d", 35.0, 40.0),
            AssetEdge::new("da", "d", "a", 55.0, 40.0),
        ],
    )
    .unwrap();
    for i in 0..4 {
        assert_eq!(net.degree(i), 2);
    }
    let flow = FlowLayer::new(vec![OdSpec::new("a", "b", 30.0, &["ab"])], &net).unwrap();
    let sc = FailureScenario::with_failed(edge_ids(&net), &["ab"], Strategy::Targeted, 0).unwrap();
    // The 145 km way round exceeds twice the 35 km original: nothing moves.
    let out = run_scenario(&net, &flow, &sc, &ReroutePolicy::default(), &RecoveryModel::new(1.0).unwrap(), 1).unwrap();
    assert_eq!(out.q_series, vec![0.0, 45.0 / 60.0, 1.0]);

    // A generous detour bound lets 20 of 30 trips round the cycle (spare 40 * 0.5).
    let policy = ReroutePolicy {
        detour_factor: 5.0,
        ..ReroutePolicy::default()
    };
    let out = run_scenario(&net, &flow, &sc, &policy, &RecoveryModel::new(1.0).unwrap(), 1).unwrap();
    assert_eq!(out.q_series[0], 20.0 / 30.0);
    // Day 1: 30 + min(10, 15) of 40.
    assert_eq!(out.q_series[1..], [1.0]);
}
