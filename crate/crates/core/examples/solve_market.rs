//! Solve the four-class scenario as a Fisher market and print the
//! allocation summary, the multipliers and the per-SP rate prices.

use edgemarket::experiments::{table1_scenario, PresetOptions};
use edgemarket::market::{solve_eg, MarketOptions};

fn main() -> edgemarket::Result<()> {
    let sc = table1_scenario(&PresetOptions::default())?;
    let sol = solve_eg(&sc, &MarketOptions::default())?;
    let dims = sc.dims();

    println!(
        "{:?} in {} Newton steps",
        sol.diagnostics.status, sol.diagnostics.iterations
    );
    println!(
        "{:<14} {:>8} {:>10} {:>8}",
        "SP", "budget", "utility", "spend"
    );
    for (s, sp) in sc.sps.iter().enumerate() {
        println!(
            "{:<14} {:>8.3} {:>10.4} {:>8.4}",
            sp.name,
            sp.budget,
            sol.utilities[s],
            sol.spend(s)
        );
    }

    println!("\nnonzero multipliers");
    for (name, v) in sol.prices.multipliers.labelled() {
        if v > 1e-9 {
            println!("  {name:<16} {v:.6}");
        }
    }

    println!("\nrate prices (per unit of service)");
    for (s, sp) in sc.sps.iter().enumerate() {
        let row: Vec<String> = (0..dims.options())
            .map(|o| {
                let (l, c) = dims.option_site(o);
                let site = if c == 0 {
                    "edge".to_string()
                } else {
                    sc.clouds[c - 1].name.clone()
                };
                format!(
                    "{}/{site}={:.4}",
                    sc.locations[l].name, sol.prices.rate_prices[s][o]
                )
            })
            .collect();
        println!("  {:<14} {}", sp.name, row.join(" "));
    }
    Ok(())
}
