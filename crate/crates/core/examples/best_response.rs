//! An SP's budgeted best response to posted prices, and how a per-location
//! utility cap pushes it onto a second site.

use edgemarket::agents::{best_response, effective_rate_price};
use edgemarket::experiments::{two_sp_scenario, PresetOptions};
use edgemarket::market::{solve_eg, MarketOptions};

fn main() -> edgemarket::Result<()> {
    let mut sc = two_sp_scenario(&PresetOptions::default())?;
    let dims = sc.dims();
    let prices = solve_eg(&sc, &MarketOptions::default())?.prices;

    let sp = &sc.sps[1];
    let q = effective_rate_price(&prices, sp, &sc);
    for (o, price) in q.iter().enumerate() {
        let (l, c) = dims.option_site(o);
        println!("{} rate price at l{l}/c{c}: {price:.5}", sp.name);
    }
    let br = best_response(&sc, sp, &prices)?;
    println!("uncapped: value {:.4}, spend {:.4}", br.value, br.spend);
    println!("  rates {:.4?}", br.rates);

    sc.sps[1].utility_caps = vec![Some(1.0), Some(1.0)];
    let capped = best_response(&sc, &sc.sps[1], &prices)?;
    println!(
        "capped at 1 per location: value {:.4}, spend {:.4}",
        capped.value, capped.spend
    );
    println!("  rates {:.4?}", capped.rates);
    Ok(())
}
