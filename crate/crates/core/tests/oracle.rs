mod common;

use common::*;
use edgemarket::market::{solve_eg, MarketOptions};
use edgemarket::verifier::{verify, DEFAULT_TOLERANCE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_small_markets_match_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..12 {
        let sc = random_small(&mut rng);
        let sol = solve_eg(&sc, &MarketOptions::default()).unwrap();
        let (value, point) = grid_search_eg(&sc, 1e-3);
        assert!(
            (sol.objective - value).abs() <= 1e-3,
            "instance {i}: solver {} grid {} at {:?}",
            sol.objective,
            value,
            point
        );
        assert!(
            sol.objective >= value - 1e-9,
            "instance {i}: grid beats solver"
        );
        let report = verify(&sol, &sc, DEFAULT_TOLERANCE).unwrap();
        assert!(report.pass, "instance {i}\n{}", report.summary());
    }
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

    #[test]
    fn equilibria_certify_and_exhaust_budgets(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = random_small(&mut rng);
        let sol = solve_eg(&sc, &MarketOptions::default()).unwrap();
        let report = verify(&sol, &sc, DEFAULT_TOLERANCE).unwrap();
        proptest::prop_assert!(report.pass, "{}", report.summary());
        for (s, sp) in sc.sps.iter().enumerate() {
            proptest::prop_assert!((sol.spend(s) - sp.budget).abs() <= 1e-6);
        }
    }
}
