//! Price-adjustment dynamics on the two-SP scenario, compared with the
//! convex solution. Pass a path to also write the per-iteration trace.

use edgemarket::dynamics::{run_tatonnement, TatonnementOptions};
use edgemarket::experiments::{two_sp_scenario, PresetOptions};
use edgemarket::market::{solve_eg, MarketOptions};
use edgemarket::verifier::verify;

fn main() -> edgemarket::Result<()> {
    let sc = two_sp_scenario(&PresetOptions::default())?;
    let eg = solve_eg(&sc, &MarketOptions::default())?;

    for eta in [0.05, 0.2, 10.0] {
        let opts = TatonnementOptions {
            eta,
            ..TatonnementOptions::default()
        };
        let trace = run_tatonnement(&sc, &opts)?;
        let gap = trace
            .final_multipliers()
            .max_abs_diff(&eg.prices.multipliers);
        let certified = verify(&trace.solution(&sc), &sc, 1e-3)?.pass;
        println!(
            "eta {eta:>5}: converged {:<5} after {:>5} iterations, multiplier gap {gap:.1e}, certified at 1e-3: {certified}",
            trace.converged, trace.iterations
        );
        if eta == 0.05 {
            if let Some(path) = std::env::args().nth(1) {
                trace.write_csv(std::fs::File::create(&path)?)?;
                println!("  trace written to {path}");
            }
        }
    }
    Ok(())
}
