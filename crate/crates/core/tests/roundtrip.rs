mod common;

use edgemarket::experiments::{table1_scenario, DemandRule, PresetOptions};
use edgemarket::io::{scenario_from_json, scenario_to_json, solution_from_json, solution_to_json};
use edgemarket::market::{solve_eg, MarketOptions};
use edgemarket::verifier::{verify, DEFAULT_TOLERANCE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn scenarios_survive_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cases = vec![
        table1_scenario(&PresetOptions::default()).unwrap(),
        table1_scenario(&PresetOptions::with_rule(DemandRule::Sampled(5))).unwrap(),
    ];
    cases.extend((0..5).map(|_| common::random_small(&mut rng)));
    for sc in cases {
        let text = scenario_to_json(&sc).unwrap();
        let back = scenario_from_json(&text).unwrap();
        assert_eq!(scenario_to_json(&back).unwrap(), text);
    }
}

#[test]
fn written_solution_still_verifies() {
    let sc = table1_scenario(&PresetOptions::default()).unwrap();
    let sol = solve_eg(&sc, &MarketOptions::default()).unwrap();
    let back = solution_from_json(&solution_to_json(&sol, &sc).unwrap(), &sc).unwrap();
    assert!(verify(&back, &sc, DEFAULT_TOLERANCE).unwrap().pass);
    for (a, b) in sol.utilities.iter().zip(&back.utilities) {
        assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
    }
}
