//! Tâtonnement: a market operator adjusts the constraint multipliers from
//! observed violations while SPs best-respond to the posted prices.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::agents::best_response;
use crate::convex::{KktResiduals, Status};
use crate::error::Result;
use crate::io::sig9;
use crate::market::{
    extract_prices, Diagnostics, EquilibriumSolution, Multipliers, PriceSystem, Scheme,
};
use crate::model::{aggregate_usage, Allocation, Scenario, SiteUsage};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TatonnementOptions {
    /// Step size `η`.
    pub eta: f64,
    /// Demand smoothing `α` in `x̄ ← α x̄ + (1 - α) x`.
    pub alpha: f64,
    pub max_iterations: usize,
    /// Largest multiplier and (relative) demand movement accepted as converged.
    pub tolerance: f64,
}

impl Default for TatonnementOptions {
    fn default() -> Self {
        Self {
            eta: 0.05,
            alpha: 0.5,
            max_iterations: 10_000,
            tolerance: 1e-9,
        }
    }
}

/// Usage minus limit for every finite constraint; absent constraints read 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    pub capacity: Vec<Vec<f64>>,
    pub local_energy: Vec<f64>,
    pub global_energy: f64,
}

impl Violations {
    fn of(usage: &SiteUsage, scenario: &Scenario) -> Self {
        Self {
            capacity: scenario
                .locations
                .iter()
                .zip(&usage.local)
                .map(|(loc, x)| {
                    loc.capacities
                        .iter()
                        .zip(x)
                        .map(|(cap, x)| cap.map_or(0.0, |c| x - c))
                        .collect()
                })
                .collect(),
            local_energy: scenario
                .locations
                .iter()
                .zip(&usage.local_energy)
                .map(|(loc, e)| loc.energy_limit.map_or(0.0, |lim| e - lim))
                .collect(),
            global_energy: scenario
                .global_energy_limit
                .map_or(0.0, |lim| usage.total_energy - lim),
        }
    }

    pub fn max_positive(&self) -> f64 {
        self.capacity
            .iter()
            .flatten()
            .chain(&self.local_energy)
            .fold(self.global_energy, |a, &b| a.max(b))
            .max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub multipliers: Multipliers,
    pub violations: Violations,
    /// Best-response value of each SP at this iteration's prices.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TatonnementTrace {
    pub entries: Vec<TraceEntry>,
    pub prices: PriceSystem,
    /// Smoothed demand at the end of the run.
    pub allocation: Allocation,
    pub converged: bool,
    pub iterations: usize,
}

impl TatonnementTrace {
    pub fn final_multipliers(&self) -> &Multipliers {
        &self.prices.multipliers
    }

    /// The final prices and smoothed allocation as a market solution, so it
    /// can be checked with the verifier.
    pub fn solution(&self, scenario: &Scenario) -> EquilibriumSolution {
        let utilities = self.allocation.utilities();
        let objective = scenario
            .sps
            .iter()
            .zip(&utilities)
            .map(|(sp, u)| sp.budget * u.ln())
            .sum();
        EquilibriumSolution {
            scheme: Scheme::Fm,
            allocation: self.allocation.clone(),
            prices: self.prices.clone(),
            utilities,
            objective,
            diagnostics: Diagnostics {
                status: if self.converged {
                    Status::Optimal
                } else {
                    Status::MaxIterations
                },
                iterations: self.iterations,
                max_kkt_residual: self
                    .entries
                    .last()
                    .map_or(0.0, |e| e.violations.max_positive()),
                kkt: KktResiduals::default(),
                barrier_weight: 0.0,
            },
        }
    }

    /// One row per iteration: multipliers, violations, best-response values.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let Some(first) = self.entries.first() else {
            w.flush()?;
            return Ok(());
        };
        let labels: Vec<String> = first
            .multipliers
            .labelled()
            .into_iter()
            .map(|(k, _)| k)
            .collect();
        let mut header = vec!["iteration".to_string()];
        header.extend(labels.iter().filter(|k| !k.starts_with("cap")).cloned());
        let locations = first.violations.local_energy.len();
        let resources = first.violations.capacity.first().map_or(0, |r| r.len());
        for l in 0..locations {
            header.extend((0..resources).map(|r| format!("viol_cap_l{l}_r{r}")));
        }
        header.extend((0..locations).map(|l| format!("viol_energy_l{l}")));
        header.push("viol_global".into());
        header.extend((0..first.values.len()).map(|s| format!("value_s{s}")));
        w.write_record(&header)?;
        for e in &self.entries {
            let mut rec = vec![e.iteration.to_string()];
            rec.extend(
                e.multipliers
                    .labelled()
                    .into_iter()
                    .filter(|(k, _)| !k.starts_with("cap"))
                    .map(|(_, v)| sig9(v)),
            );
            rec.extend(e.violations.capacity.iter().flatten().map(|&v| sig9(v)));
            rec.extend(e.violations.local_energy.iter().map(|&v| sig9(v)));
            rec.push(sig9(e.violations.global_energy));
            rec.extend(e.values.iter().map(|&v| sig9(v)));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest rate option `o` of SP `s` could use if it were alone in the market.
fn standalone_limit(scenario: &Scenario, s: usize, o: usize) -> f64 {
    let dims = scenario.dims();
    let (l, c) = dims.option_site(o);
    let d = scenario.sps[s].demand_at(dims, l, c);
    let loc = &scenario.locations[l];
    let mut limit = f64::INFINITY;
    for (r, &dr) in d.iter().enumerate() {
        if dr <= 0.0 {
            continue;
        }
        let local = scenario.resources[r].kind == crate::model::ResourceKind::Access || c == 0;
        if local {
            if let Some(cap) = loc.capacities[r] {
                limit = limit.min(cap / dr);
            }
        }
        let terms = if local {
            &loc.energy_terms
        } else {
            &scenario.clouds[c - 1].energy_terms
        };
        let mut bounds = vec![scenario.global_energy_limit];
        if local {
            bounds.push(loc.energy_limit);
        }
        for t in terms
            .iter()
            .filter(|t| t.resource == r && t.coefficient > 0.0)
        {
            for e in bounds.iter().flatten() {
                limit = limit.min((e / t.coefficient).powf(1.0 / t.exponent) / dr);
            }
        }
    }
    limit
}

/// Multiplicative step on the violation relative to its limit, clipped to
/// `[-1, 1]` so a wild first response cannot blow the multiplier up.
fn step(theta: f64, violation: f64, limit: f64, eta: f64) -> f64 {
    theta * (eta * (violation / limit).clamp(-1.0, 1.0)).exp()
}

/// Runs the price-adjustment loop. Non-convergence is reported through
/// `converged`, never as an error.
pub fn run_tatonnement(scenario: &Scenario, opts: &TatonnementOptions) -> Result<TatonnementTrace> {
    let dims = scenario.dims();
    let n = scenario.sps.len();
    let active = scenario.sps.iter().any(|sp| sp.budget > 0.0);
    let start = if active { 1e-3 } else { 0.0 };
    let mut theta = Multipliers::zero(scenario);
    for (l, loc) in scenario.locations.iter().enumerate() {
        for (r, cap) in loc.capacities.iter().enumerate() {
            if cap.is_some() {
                theta.capacity[l][r] = start;
            }
        }
        if loc.energy_limit.is_some() {
            theta.local_energy[l] = start;
        }
    }
    if scenario.global_energy_limit.is_some() {
        theta.global_energy = start;
    }

    // smoothed demand starts at a small interior point so energy gradients are positive
    let mut smoothed = if active {
        interior_point(scenario)?
    } else {
        Allocation::zero(scenario)
    };
    let limits: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            (0..dims.options())
                .map(|o| standalone_limit(scenario, s, o))
                .collect()
        })
        .collect();

    // spending per option; uncapped SPs spread it and shift it toward
    // options with more service per unit of money
    let mut spend: Vec<Vec<f64>> = scenario
        .sps
        .iter()
        .map(|sp| {
            let usable = sp.usable_options(dims);
            let mut b = vec![0.0; dims.options()];
            for &o in &usable {
                b[o] = sp.budget / usable.len() as f64;
            }
            b
        })
        .collect();

    let mut entries = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut prices = extract_prices(&smoothed, &theta, scenario)?;
    for k in 0..opts.max_iterations {
        iterations = k + 1;
        prices = extract_prices(&smoothed, &theta, scenario)?;
        let mut rates = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for (s, sp) in scenario.sps.iter().enumerate() {
            let br = best_response(scenario, sp, &prices)?;
            values.push(br.value);
            let capped = sp.utility_caps.iter().any(Option::is_some);
            let q = &prices.rate_prices[s];
            let free = sp.usable_options(dims).into_iter().find(|&o| q[o] <= 0.0);
            let u = if capped || free.is_some() || !(sp.budget > 0.0) {
                let mut u = br.rates;
                if let Some(o) = br.unbounded_option {
                    u[o] = limits[s][o];
                }
                u
            } else {
                let u: Vec<f64> = spend[s]
                    .iter()
                    .zip(q)
                    .map(|(b, q)| if *b > 0.0 { b / q } else { 0.0 })
                    .collect();
                let total: f64 = u.iter().sum();
                for (b, x) in spend[s].iter_mut().zip(&u) {
                    *b = sp.budget * x / total;
                }
                u
            };
            rates.push(u);
        }
        let demand = Allocation::from_rates(scenario, rates)?;
        let usage = aggregate_usage(&demand, scenario)?;
        let viol = Violations::of(&usage, scenario);

        let mut next = theta.clone();
        for (l, loc) in scenario.locations.iter().enumerate() {
            for r in 0..dims.resources {
                if let Some(cap) = loc.capacities[r] {
                    next.capacity[l][r] =
                        step(theta.capacity[l][r], viol.capacity[l][r], cap, opts.eta);
                }
            }
            if let Some(limit) = loc.energy_limit {
                next.local_energy[l] =
                    step(theta.local_energy[l], viol.local_energy[l], limit, opts.eta);
            }
        }
        if let Some(limit) = scenario.global_energy_limit {
            next.global_energy = step(theta.global_energy, viol.global_energy, limit, opts.eta);
        }

        let mut moved = 0.0f64;
        for (bar, x) in smoothed.bundles.iter_mut().zip(&demand.bundles) {
            for (b, &v) in bar.iter_mut().zip(x) {
                let nb = opts.alpha * *b + (1.0 - opts.alpha) * v;
                moved = moved.max((nb - *b).abs() / b.abs().max(1.0));
                *b = nb;
            }
        }
        for (bar, u) in smoothed.rates.iter_mut().zip(&demand.rates) {
            for (b, &v) in bar.iter_mut().zip(u) {
                *b = opts.alpha * *b + (1.0 - opts.alpha) * v;
            }
        }
        let step = next.max_abs_diff(&theta);
        theta = next;
        entries.push(TraceEntry {
            iteration: k,
            multipliers: theta.clone(),
            violations: viol,
            values,
        });
        if step <= opts.tolerance && moved <= opts.tolerance {
            converged = true;
            break;
        }
    }
    if converged {
        prices = extract_prices(&smoothed, &theta, scenario)?;
    }
    Ok(TatonnementTrace {
        entries,
        prices,
        allocation: smoothed,
        converged,
        iterations,
    })
}

/// Equal rates on every usable option, halved until every finite
/// constraint is strictly slack.
fn interior_point(scenario: &Scenario) -> Result<Allocation> {
    let dims = scenario.dims();
    let mut t = 1.0;
    loop {
        let rates = scenario
            .sps
            .iter()
            .map(|sp| {
                let mut u = vec![0.0; dims.options()];
                for o in sp.usable_options(dims) {
                    u[o] = t;
                }
                u
            })
            .collect();
        let alloc = Allocation::from_rates(scenario, rates)?;
        let usage = aggregate_usage(&alloc, scenario)?;
        let v = Violations::of(&usage, scenario);
        let slack = v
            .capacity
            .iter()
            .flatten()
            .chain(&v.local_energy)
            .all(|&g| g < 0.0)
            && (scenario.global_energy_limit.is_none() || v.global_energy < 0.0);
        if slack || t < 1e-12 {
            return Ok(alloc);
        }
        t *= 0.5;
    }
}
