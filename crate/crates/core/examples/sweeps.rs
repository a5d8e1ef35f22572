//! The three experiment families: CPU energy exponent, radio energy
//! exponent, and budget split. CSVs go to the directory given as the first
//! argument (default: the system temp directory).

use std::fs::File;
use std::path::PathBuf;

use edgemarket::experiments::{
    sweep, table1_scenario, two_sp_scenario, PresetOptions, SchemeSelection, SweepOptions,
    SweepSpec, SweepTarget,
};
use edgemarket::io::sig9;
use edgemarket::market::Scheme;

fn main() -> edgemarket::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let classes = table1_scenario(&PresetOptions::default())?;
    let two = two_sp_scenario(&PresetOptions::default())?;
    let opts = SweepOptions::default();

    let runs = [
        (
            "beta_cpu.csv",
            &classes,
            SweepSpec::new(SweepTarget::BetaCpu, 1.0, 3.0, 9, SchemeSelection::Both),
        ),
        (
            "beta_radio.csv",
            &classes,
            SweepSpec::new(SweepTarget::BetaRadio, 1.0, 3.0, 9, SchemeSelection::Both),
        ),
        (
            "budget.csv",
            &two,
            SweepSpec::new(SweepTarget::Budget(0), 0.1, 0.9, 9, SchemeSelection::Both),
        ),
        (
            "elimit.csv",
            &two,
            SweepSpec::new(
                SweepTarget::LocalEnergyLimit(0),
                5.0,
                50.0,
                10,
                SchemeSelection::Fm,
            ),
        ),
    ];
    for (file, base, spec) in runs {
        let result = sweep(base, &spec, &opts)?;
        let path = dir.join(file);
        result.write_csv(File::create(&path)?)?;
        println!("{} ({} rows)", path.display(), result.rows.len());
        for row in result.rows_for(Scheme::Fm) {
            println!(
                "  {}={:<6} U_total {:>9.4}  lambda {:.4}",
                spec.target.param(),
                row.point
                    .iter()
                    .map(|&v| sig9(v))
                    .collect::<Vec<_>>()
                    .join(","),
                row.total_utility,
                row.lambda
            );
        }
    }
    Ok(())
}
