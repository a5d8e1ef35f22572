//! Service-class presets under each demand rule, written to and read back
//! from a scenario file.

use edgemarket::experiments::{class_scenario, DemandRule, PresetOptions, ServiceClass};
use edgemarket::io::{read_scenario, write_scenario};
use edgemarket::market::{solve_eg, MarketOptions};

fn main() -> edgemarket::Result<()> {
    for class in ServiceClass::ALL {
        let [cpu, ram, radio] = class.ranges();
        println!(
            "{:<14} cpu {cpu:?}  ram {ram:?}  radio {radio:?}",
            class.name()
        );
    }

    let rules = [
        DemandRule::Low,
        DemandRule::Midpoint,
        DemandRule::High,
        DemandRule::Sampled(42),
    ];
    for rule in rules {
        let sc = class_scenario(&ServiceClass::ALL, &PresetOptions::with_rule(rule))?;
        let sol = solve_eg(&sc, &MarketOptions::default())?;
        let u: Vec<String> = sol.utilities.iter().map(|u| format!("{u:.3}")).collect();
        println!("{:<12} utilities [{}]", format!("{rule:?}"), u.join(", "));
    }

    let pair = [ServiceClass::CpuIntensive, ServiceClass::RamIntensive];
    let sc = class_scenario(&pair, &PresetOptions::default())?;
    let path = std::env::temp_dir().join("cpu_ram.json");
    write_scenario(&path, &sc)?;
    assert_eq!(read_scenario(&path)?, sc);
    println!("wrote and re-read {}", path.display());
    Ok(())
}
