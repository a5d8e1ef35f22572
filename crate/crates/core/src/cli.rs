//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or schema error, 2 verification failure,
//! 3 solver did not reach an optimal status. Errors are also written to
//! standard error as one JSON line.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::dynamics::{run_tatonnement, TatonnementOptions};
use crate::error::Error;
use crate::experiments::{
    sweep, table1_scenario, two_sp_scenario, DemandRule, PresetOptions, SchemeSelection,
    SweepOptions, SweepSpec, SweepTarget,
};
use crate::io::{read_scenario, read_solution, sig9, write_scenario, write_solution};
use crate::market::{solve, MarketOptions, Scheme};
use crate::verifier::{verify, FairnessMetrics, DEFAULT_TOLERANCE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "edgemarket",
    version,
    about = "Fisher-market pricing for radio/edge/cloud resources under energy limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Table1,
    TwoSp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Fm,
    So,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a preset scenario document.
    GenScenario {
        #[arg(long, value_enum)]
        preset: Preset,
        /// midpoint, low, high or sampled:SEED
        #[arg(long, default_value = "midpoint")]
        demand_rule: DemandRule,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a scenario under the market (fm) or social-optimum (so) scheme.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        /// KKT tolerance of the interior-point solver.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a solution against the equilibrium conditions.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run price-adjustment dynamics and write the per-iteration trace.
    Dynamics {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Solve and verify a scenario over a parameter range, writing CSV.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// beta_cpu, beta_radio, beta_grid, budget:S or elimit:L
        #[arg(long)]
        target: SweepTarget,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 9)]
        steps: usize,
        #[arg(long, default_value = "both")]
        scheme: SchemeSelection,
        /// Worker threads; defaults to the number of logical cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Solver { .. } | Error::FreeOption { .. } => EXIT_SOLVER,
        Error::SweepVerification { .. } => EXIT_VERIFY,
        Error::SweepPoint { source, .. } => exit_code(source),
        _ => EXIT_INPUT,
    }
}

fn kind(code: i32) -> &'static str {
    match code {
        EXIT_VERIFY => "verification",
        EXIT_SOLVER => "solver",
        _ => "input",
    }
}

fn report_error(code: i32, message: &str) -> i32 {
    let line = serde_json::json!({ "error": kind(code), "exit": code, "message": message });
    eprintln!("{line}");
    code
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return report_error(EXIT_INPUT, first.trim_start_matches("error: "));
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => report_error(exit_code(&e), &e.to_string()),
    }
}

fn create(path: &PathBuf) -> crate::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn execute(command: Command) -> crate::Result<i32> {
    match command {
        Command::GenScenario {
            preset,
            demand_rule,
            out,
        } => {
            let opts = PresetOptions::with_rule(demand_rule);
            let sc = match preset {
                Preset::Table1 => table1_scenario(&opts)?,
                Preset::TwoSp => two_sp_scenario(&opts)?,
            };
            write_scenario(&out, &sc)?;
            println!(
                "wrote {} ({} SPs, {} locations, {} clouds)",
                out.display(),
                sc.sps.len(),
                sc.locations.len(),
                sc.clouds.len()
            );
            Ok(EXIT_OK)
        }
        Command::Solve {
            scenario,
            scheme,
            tol,
            out,
        } => {
            let sc = read_scenario(&scenario)?;
            let scheme = match scheme {
                SchemeArg::Fm => Scheme::Fm,
                SchemeArg::So => Scheme::So,
            };
            let mut opts = MarketOptions::default();
            opts.solver.tolerance = tol;
            let sol = solve(&sc, scheme, &opts)?;
            write_solution(&out, &sol, &sc)?;
            println!(
                "{} status {:?}, {} iterations, max KKT residual {:.3e}",
                scheme.label(),
                sol.diagnostics.status,
                sol.diagnostics.iterations,
                sol.diagnostics.max_kkt_residual
            );
            for (sp, u) in sc.sps.iter().zip(&sol.utilities) {
                println!("  U[{}] = {}", sp.name, sig9(*u));
            }
            println!("  total = {}", sig9(sol.total_utility()));
            Ok(EXIT_OK)
        }
        Command::Verify {
            scenario,
            solution,
            tol,
            json,
        } => {
            let sc = read_scenario(&scenario)?;
            let sol = read_solution(&solution, &sc)?;
            let report = verify(&sol, &sc, tol)?;
            let metrics = FairnessMetrics::of(&sol, &sc);
            if json {
                let doc =
                    serde_json::json!({ "report": report, "fairness": fairness_json(&metrics) });
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                print!("{}", report.summary());
                print_fairness(&metrics);
            }
            Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Dynamics {
            scenario,
            eta,
            alpha,
            max_iters,
            tol,
            trace,
        } => {
            let sc = read_scenario(&scenario)?;
            let opts = TatonnementOptions {
                eta,
                alpha,
                max_iterations: max_iters,
                tolerance: tol,
            };
            let result = run_tatonnement(&sc, &opts)?;
            result.write_csv(create(&trace)?)?;
            println!(
                "converged: {} after {} iterations",
                result.converged, result.iterations
            );
            for (name, v) in result.final_multipliers().labelled() {
                if v != 0.0 {
                    println!("  {name} = {}", sig9(v));
                }
            }
            Ok(EXIT_OK)
        }
        Command::Sweep {
            scenario,
            target,
            from,
            to,
            steps,
            scheme,
            jobs,
            tol,
            out,
        } => {
            let sc = read_scenario(&scenario)?;
            let spec = SweepSpec::new(target, from, to, steps, scheme);
            let opts = SweepOptions {
                tolerance: tol,
                jobs,
                ..SweepOptions::default()
            };
            let result = sweep(&sc, &spec, &opts)?;
            result.write_csv(create(&out)?)?;
            println!("wrote {} rows to {}", result.rows.len(), out.display());
            Ok(EXIT_OK)
        }
    }
}

fn welfare_text(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "starved".into()
    } else {
        sig9(v)
    }
}

fn fairness_json(m: &FairnessMetrics) -> serde_json::Value {
    serde_json::json!({
        "utilities": m.utilities,
        "nash_welfare": welfare_text(m.nash_welfare),
        "min_utility": m.min_utility,
        "max_min_ratio": if m.max_min_ratio.is_finite() { sig9(m.max_min_ratio) } else { "inf".into() },
        "max_envy": m.max_envy(),
        "total_utility": m.total_utility,
        "spend": m.spend,
    })
}

fn print_fairness(m: &FairnessMetrics) {
    println!(
        "Nash welfare                {}",
        welfare_text(m.nash_welfare)
    );
    println!("min utility                 {}", sig9(m.min_utility));
    println!("max/min utility             {}", sig9(m.max_min_ratio));
    println!("max scaled envy             {}", sig9(m.max_envy()));
    println!("total utility               {}", sig9(m.total_utility));
}
