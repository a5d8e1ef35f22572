mod common;

use common::*;
use edgemarket::market::{solve_eg, solve_social_optimum, MarketOptions};
use edgemarket::verifier::{verify, DEFAULT_TOLERANCE};

fn opts() -> MarketOptions {
    MarketOptions::default()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn energy_bound_instance() {
    let sc = energy_bound();
    let sol = solve_eg(&sc, &opts()).unwrap();
    let m = &sol.prices.multipliers;
    assert!(close(sol.utilities[0], 4.0, 1e-6), "{:?}", sol.utilities);
    assert!(close(m.local_energy[0], 0.25, 1e-6));
    assert!(close(m.capacity[0][0], 0.0, 1e-6));
    assert!(close(m.global_energy, 0.0, 1e-12));
    assert!(close(sol.prices.prices[0], 0.25, 1e-6));
    assert!(close(sol.spend(0), 1.0, 1e-6));
    assert!(verify(&sol, &sc, DEFAULT_TOLERANCE).unwrap().pass);
}

#[test]
fn shared_capacity_instance() {
    let sc = shared_capacity();
    let sol = solve_eg(&sc, &opts()).unwrap();
    assert!(close(sol.utilities[0], 1.0, 1e-6));
    assert!(close(sol.utilities[1], 1.0, 1e-6));
    assert!(close(sol.prices.multipliers.capacity[0][0], 1.0, 1e-6));
    assert!(close(sol.prices.prices[0], 1.0, 1e-6));
    for s in 0..2 {
        assert!(close(sol.spend(s), 1.0, 1e-6));
    }
}

#[test]
fn quadratic_energy_instance() {
    let sc = quadratic_energy();
    let sol = solve_eg(&sc, &opts()).unwrap();
    assert!(close(sol.utilities[0], 2.0, 1e-6));
    assert!(close(sol.prices.multipliers.local_energy[0], 0.125, 1e-6));
    assert!(close(sol.prices.prices[0], 0.5, 1e-6));
    assert!(close(sol.spend(0), 1.0, 1e-6));
}

#[test]
fn hand_instances_agree_with_grid_search() {
    for sc in [energy_bound(), shared_capacity(), quadratic_energy()] {
        let sol = solve_eg(&sc, &opts()).unwrap();
        let (value, _) = grid_search_eg(&sc, 1e-3);
        assert!(
            close(sol.objective, value, 1e-3),
            "{} vs {}",
            sol.objective,
            value
        );
    }
}

#[test]
fn social_optimum_starves_and_market_shares() {
    let sc = asymmetric();
    let so = solve_social_optimum(&sc, None, &opts()).unwrap();
    let fm = solve_eg(&sc, &opts()).unwrap();
    assert!(close(so.utilities[0], 2.0, 1e-6) && close(so.utilities[1], 0.0, 1e-6));
    assert!(close(fm.utilities[0], 1.0, 1e-6) && close(fm.utilities[1], 0.5, 1e-6));
    let weighted = |u: &[f64]| u[0] + u[1];
    assert!(weighted(&so.utilities) >= weighted(&fm.utilities) - 1e-6);
}

#[test]
fn single_sp_social_optimum_matches_market() {
    let sc = energy_bound();
    let so = solve_social_optimum(&sc, None, &opts()).unwrap();
    let fm = solve_eg(&sc, &opts()).unwrap();
    assert!(close(so.utilities[0], fm.utilities[0], 1e-6));
}

#[test]
fn budget_scaling_scales_prices_only() {
    let base = two_sp();
    let sol = solve_eg(&base, &opts()).unwrap();
    for alpha in [0.5, 2.0, 10.0] {
        let mut sc = base.clone();
        for sp in &mut sc.sps {
            sp.budget *= alpha;
        }
        let scaled = solve_eg(&sc, &opts()).unwrap();
        for (a, b) in sol
            .allocation
            .bundles
            .iter()
            .flatten()
            .zip(scaled.allocation.bundles.iter().flatten())
        {
            assert!(close(*a, *b, 1e-6), "alpha {alpha}: {a} vs {b}");
        }
        for (p, q) in sol.prices.prices.iter().zip(&scaled.prices.prices) {
            assert!(
                close(alpha * p, *q, 1e-6 * (alpha * p).abs().max(1e-3)),
                "alpha {alpha}: {p} vs {q}"
            );
        }
    }
}

#[test]
fn relaxing_energy_never_lowers_the_objective() {
    let base = two_sp();
    let mut last = f64::NEG_INFINITY;
    for k in 0..5 {
        let mut sc = base.clone();
        let factor = 1.0 + 0.25 * k as f64;
        for loc in &mut sc.locations {
            loc.energy_limit = loc.energy_limit.map(|e| e * factor);
        }
        let obj = solve_eg(&sc, &opts()).unwrap().objective;
        assert!(obj >= last - 1e-7, "{obj} < {last}");
        last = obj;
    }
}

fn two_sp() -> edgemarket::model::Scenario {
    use edgemarket::experiments::{two_sp_scenario, PresetOptions};
    two_sp_scenario(&PresetOptions::default()).unwrap()
}
