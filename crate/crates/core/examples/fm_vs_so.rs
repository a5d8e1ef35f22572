//! Market equilibrium against the social optimum on the same feasible set:
//! utilities, fairness metrics, and a Pareto probe of the equilibrium.

use edgemarket::experiments::{table1_scenario, PresetOptions};
use edgemarket::io::sig9;
use edgemarket::market::{solve_eg, solve_social_optimum, MarketOptions};
use edgemarket::verifier::{fairness_metrics, pareto_probe, FairnessMetrics};

fn row(label: &str, m: &FairnessMetrics) {
    let nash = if m.nash_welfare.is_finite() {
        sig9(m.nash_welfare)
    } else {
        "starved".into()
    };
    println!(
        "{label:<4} total {:>9.4}  min {:>7.4}  max/min {:>9}  Nash {:>12}  envy {:.1e}",
        m.total_utility,
        m.min_utility,
        if m.max_min_ratio.is_finite() {
            format!("{:.3}", m.max_min_ratio)
        } else {
            "inf".into()
        },
        nash,
        m.max_envy()
    );
}

fn main() -> edgemarket::Result<()> {
    let sc = table1_scenario(&PresetOptions::default())?;
    let opts = MarketOptions::default();
    let fm = solve_eg(&sc, &opts)?;
    let so = solve_social_optimum(&sc, None, &opts)?;

    println!("{:<14} {:>10} {:>10}", "SP", "FM", "SO");
    for (s, sp) in sc.sps.iter().enumerate() {
        println!(
            "{:<14} {:>10.4} {:>10.4}",
            sp.name, fm.utilities[s], so.utilities[s]
        );
    }
    let (mf, ms) = fairness_metrics(&fm, &so, &sc);
    println!();
    row("FM", &mf);
    row("SO", &ms);
    let gap = (so.total_utility() - fm.total_utility()) / so.total_utility();
    println!("efficiency given up by the market: {:.1}%", 100.0 * gap);

    for s in 0..sc.sps.len() {
        let gain = pareto_probe(&fm, &sc, s)?;
        println!("Pareto probe {:<14} gain {gain:.1e}", sc.sps[s].name);
    }
    Ok(())
}
