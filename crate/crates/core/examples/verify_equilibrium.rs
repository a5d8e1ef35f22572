//! Certify a solution, then show the verifier catching a mispriced one.

use edgemarket::experiments::{two_sp_scenario, PresetOptions};
use edgemarket::market::{solve_eg, MarketOptions};
use edgemarket::verifier::{verify, DEFAULT_TOLERANCE};

fn main() -> edgemarket::Result<()> {
    let sc = two_sp_scenario(&PresetOptions::default())?;
    let sol = solve_eg(&sc, &MarketOptions::default())?;
    print!("{}", verify(&sol, &sc, DEFAULT_TOLERANCE)?.summary());

    // a discounted radio price makes more service affordable than was bought
    let mut cheap = sol.clone();
    let radio = sc.resource_index("radio").expect("preset has radio");
    let k = sc.dims().coord(radio, 0, 0);
    cheap.prices.prices[k] *= 0.5;
    let report = verify(&cheap, &sc, DEFAULT_TOLERANCE)?;
    println!("\nafter halving the radio price at l0:");
    print!("{}", report.summary());
    println!("best-response values {:?}", report.c1.best_response_values);
    Ok(())
}
