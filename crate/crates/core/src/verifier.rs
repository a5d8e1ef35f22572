//! Equilibrium certification and fairness metrics.
//!
//! C1 is checked by value: each SP's exact best response at the posted
//! prices must not beat the utility it actually receives. C2 recomputes the
//! prices from the reported multipliers and checks complementary slackness
//! and feasibility of every market constraint.

use serde::{Deserialize, Serialize};

use crate::agents::best_response;
use crate::convex::{solve_convex, Affine, SolveOptions, Status};
use crate::error::{Error, Result};
use crate::market::{
    extract_prices, ConstraintTag, EquilibriumSolution, MarketObjective, MarketProgram,
};
use crate::model::{aggregate_usage, leontief_rate, Scenario};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1Report {
    /// `best_response.value - U^s`, clamped at zero.
    pub residuals: Vec<f64>,
    /// Best-response values at the posted prices.
    pub best_response_values: Vec<f64>,
    /// SPs whose best response is unbounded at the posted prices.
    pub unbounded: Vec<usize>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    /// Indexed `[l][r]`.
    pub capacity: Vec<Vec<f64>>,
    pub local_energy: Vec<f64>,
    pub global_energy: f64,
    /// Indexed `[s][l]`.
    pub utility_caps: Vec<Vec<f64>>,
}

impl ConstraintResiduals {
    fn zero(scenario: &Scenario) -> Self {
        let d = scenario.dims();
        Self {
            capacity: vec![vec![0.0; d.resources]; d.locations],
            local_energy: vec![0.0; d.locations],
            global_energy: 0.0,
            utility_caps: vec![vec![0.0; d.locations]; scenario.sps.len()],
        }
    }

    pub fn max(&self) -> f64 {
        self.capacity
            .iter()
            .flatten()
            .chain(&self.local_energy)
            .chain(self.utility_caps.iter().flatten())
            .fold(self.global_energy, |a, &b| a.max(b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C2Report {
    /// `max |p_given - p_recomputed|` over coordinates.
    pub price_mismatch: f64,
    /// `|multiplier * (usage - limit)|` per constraint.
    pub slackness: ConstraintResiduals,
    /// `max(0, usage - limit)` per constraint.
    pub feasibility: ConstraintResiduals,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub tolerance: f64,
    pub c1: C1Report,
    pub c2: C2Report,
    /// `|spend - B^s|` for SPs with positive utility; informational.
    pub budget_gap: Vec<f64>,
    pub pass: bool,
}

impl EquilibriumReport {
    /// One line per check, for terminal output.
    pub fn summary(&self) -> String {
        let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
        let mut out = String::new();
        let c1_max = self.c1.residuals.iter().fold(0.0f64, |a, &b| a.max(b));
        out.push_str(&format!(
            "C1 best-response residual   max {:.3e}  {}\n",
            c1_max,
            verdict(self.c1.pass)
        ));
        if !self.c1.unbounded.is_empty() {
            out.push_str(&format!(
                "   unbounded best responses for SPs {:?}\n",
                self.c1.unbounded
            ));
        }
        let tol = self.tolerance;
        let c2 = &self.c2;
        for (label, value) in [
            ("C2 price formula mismatch  ", c2.price_mismatch),
            ("C2 complementary slackness ", c2.slackness.max()),
            ("feasibility violation      ", c2.feasibility.max()),
        ] {
            out.push_str(&format!(
                "{label} max {value:.3e}  {}\n",
                verdict(value <= tol)
            ));
        }
        let gap = self.budget_gap.iter().fold(0.0f64, |a, &b| a.max(b));
        out.push_str(&format!("budget exhaustion gap       max {gap:.3e}\n"));
        out.push_str(&format!(
            "verdict at tol {:.1e}: {}\n",
            self.tolerance,
            verdict(self.pass)
        ));
        out
    }
}

fn budget_scale(b: f64) -> f64 {
    b.abs().max(1.0)
}

pub fn verify_c1(
    solution: &EquilibriumSolution,
    scenario: &Scenario,
    tol: f64,
) -> Result<C1Report> {
    solution.allocation.check_dims(scenario)?;
    let mut residuals = Vec::with_capacity(scenario.sps.len());
    let mut values = Vec::with_capacity(scenario.sps.len());
    let mut unbounded = Vec::new();
    let mut pass = true;
    for (s, sp) in scenario.sps.iter().enumerate() {
        let br = best_response(scenario, sp, &solution.prices)?;
        let achieved = solution.allocation.utility(s);
        let residual = if br.unbounded_option.is_some() {
            unbounded.push(s);
            f64::INFINITY
        } else {
            (br.value - achieved).max(0.0)
        };
        pass &= residual <= tol * budget_scale(sp.budget);
        residuals.push(residual);
        values.push(br.value);
    }
    Ok(C1Report {
        residuals,
        best_response_values: values,
        unbounded,
        pass,
    })
}

pub fn verify_c2(
    solution: &EquilibriumSolution,
    scenario: &Scenario,
    tol: f64,
) -> Result<C2Report> {
    let dims = scenario.dims();
    let m = &solution.prices.multipliers;
    if solution.prices.prices.len() != dims.coords() {
        return Err(Error::Dimension(
            "price vector does not match scenario".into(),
        ));
    }
    let recomputed = extract_prices(&solution.allocation, m, scenario)?;
    let price_mismatch = recomputed
        .prices
        .iter()
        .zip(&solution.prices.prices)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let usage = aggregate_usage(&solution.allocation, scenario)?;
    let mut slack = ConstraintResiduals::zero(scenario);
    let mut feas = ConstraintResiduals::zero(scenario);
    // a positive multiplier on an absent constraint can never be slack-consistent
    let product = |mult: f64, gap: Option<f64>| match gap {
        Some(g) => (mult * g).abs(),
        None if mult > 0.0 => f64::INFINITY,
        None => 0.0,
    };
    for (l, loc) in scenario.locations.iter().enumerate() {
        for r in 0..dims.resources {
            let gap = loc.capacities[r].map(|cap| usage.local[l][r] - cap);
            slack.capacity[l][r] = product(m.capacity[l][r], gap);
            feas.capacity[l][r] = gap.unwrap_or(0.0).max(0.0);
        }
        let gap = loc.energy_limit.map(|e| usage.local_energy[l] - e);
        slack.local_energy[l] = product(m.local_energy[l], gap);
        feas.local_energy[l] = gap.unwrap_or(0.0).max(0.0);
    }
    let gap = scenario.global_energy_limit.map(|e| usage.total_energy - e);
    slack.global_energy = product(m.global_energy, gap);
    feas.global_energy = gap.unwrap_or(0.0).max(0.0);
    for (s, sp) in scenario.sps.iter().enumerate() {
        for (l, cap) in sp.utility_caps.iter().enumerate() {
            let at_l: f64 = (0..dims.facilities)
                .map(|c| solution.allocation.rates[s][dims.option(l, c)])
                .sum();
            let gap = cap.map(|u| at_l - u);
            let mult = m
                .utility_caps
                .get(s)
                .and_then(|row| row.get(l))
                .copied()
                .unwrap_or(0.0);
            slack.utility_caps[s][l] = product(mult, gap);
            feas.utility_caps[s][l] = gap.unwrap_or(0.0).max(0.0);
        }
    }
    let pass = price_mismatch <= tol && slack.max() <= tol && feas.max() <= tol;
    Ok(C2Report {
        price_mismatch,
        slackness: slack,
        feasibility: feas,
        pass,
    })
}

/// Full equilibrium check: C1, C2, and the budget-exhaustion figures.
pub fn verify(
    solution: &EquilibriumSolution,
    scenario: &Scenario,
    tol: f64,
) -> Result<EquilibriumReport> {
    let c1 = verify_c1(solution, scenario, tol)?;
    let c2 = verify_c2(solution, scenario, tol)?;
    let budget_gap = scenario
        .sps
        .iter()
        .enumerate()
        .map(|(s, sp)| {
            if solution.allocation.utility(s) > 0.0 {
                (solution.spend(s) - sp.budget).abs()
            } else {
                0.0
            }
        })
        .collect();
    let pass = c1.pass && c2.pass;
    Ok(EquilibriumReport {
        tolerance: tol,
        c1,
        c2,
        budget_gap,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessMetrics {
    pub utilities: Vec<f64>,
    /// `Σ B^s ln U^s`; `-∞` when some SP is starved.
    pub nash_welfare: f64,
    pub min_utility: f64,
    /// `max U / min U`; `+∞` when some SP is starved.
    pub max_min_ratio: f64,
    /// `ε_st = max(0, U^s((B^s/B^t) x^t) - U^s(x^s))`.
    pub envy: Vec<Vec<f64>>,
    pub total_utility: f64,
    pub spend: Vec<f64>,
}

impl FairnessMetrics {
    pub fn of(solution: &EquilibriumSolution, scenario: &Scenario) -> Self {
        let dims = scenario.dims();
        let utilities = solution.allocation.utilities();
        let starved = utilities.iter().any(|&u| !(u > 0.0));
        let nash_welfare = if starved {
            f64::NEG_INFINITY
        } else {
            scenario
                .sps
                .iter()
                .zip(&utilities)
                .map(|(sp, u)| sp.budget * u.ln())
                .sum()
        };
        let min_utility = utilities.iter().copied().fold(f64::INFINITY, f64::min);
        let max_utility = utilities.iter().copied().fold(0.0, f64::max);
        let max_min_ratio = if starved {
            f64::INFINITY
        } else {
            max_utility / min_utility
        };
        let n = scenario.sps.len();
        let mut envy = vec![vec![0.0; n]; n];
        for (s, sp) in scenario.sps.iter().enumerate() {
            for (t, other) in scenario.sps.iter().enumerate() {
                if s == t {
                    continue;
                }
                let bt = other.budget;
                if !(bt > 0.0) {
                    continue;
                }
                let scale = sp.budget / bt;
                let value: f64 = (0..dims.options())
                    .map(|o| {
                        let k = o * dims.resources;
                        let d = &sp.demand[k..k + dims.resources];
                        let y: Vec<f64> = solution.allocation.bundles[t][k..k + dims.resources]
                            .iter()
                            .map(|x| scale * x)
                            .collect();
                        leontief_rate(&y, d).unwrap_or(0.0)
                    })
                    .sum();
                envy[s][t] = (value - utilities[s]).max(0.0);
            }
        }
        Self {
            total_utility: utilities.iter().sum(),
            spend: (0..n).map(|s| solution.spend(s)).collect(),
            utilities,
            nash_welfare,
            min_utility,
            max_min_ratio,
            envy,
        }
    }

    pub fn max_envy(&self) -> f64 {
        self.envy.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// Metrics for an FM and an SO solution of the same scenario.
pub fn fairness_metrics(
    fm: &EquilibriumSolution,
    so: &EquilibriumSolution,
    scenario: &Scenario,
) -> (FairnessMetrics, FairnessMetrics) {
    (
        FairnessMetrics::of(fm, scenario),
        FairnessMetrics::of(so, scenario),
    )
}

/// Largest gain SP `sp` can obtain over the feasible set while every other
/// SP keeps (up to a relative 1e-7) its utility in `solution`.
///
/// A gain at the tolerance level means the allocation is Pareto optimal.
pub fn pareto_probe(solution: &EquilibriumSolution, scenario: &Scenario, sp: usize) -> Result<f64> {
    const FLOOR: f64 = 1.0 - 1e-7;
    const SHRINK: f64 = 1.0 - 1e-8;
    let mut weights = vec![0.0; scenario.sps.len()];
    weights[sp] = 1.0;
    let mut market = MarketProgram::new(scenario, MarketObjective::Weighted(weights));
    for (t, vars) in market.sp_variables.iter().enumerate() {
        if t == sp {
            continue;
        }
        let floor = FLOOR * solution.allocation.utility(t);
        let form = vars.iter().map(|&k| (k, -1.0)).collect();
        market.program.constrain(
            Affine::new(form, floor),
            ConstraintTag::UtilityFloor { sp: t },
        );
    }
    let start = market
        .variables
        .iter()
        .map(|&(s, o)| (SHRINK * solution.allocation.rates[s][o]).max(1e-12))
        .collect();
    market.program.initial_point = Some(start);
    let result = solve_convex(&market.program, &SolveOptions::default());
    if result.status != Status::Optimal {
        return Err(Error::Solver {
            status: result.status,
            detail: format!("Pareto probe for SP {sp}"),
        });
    }
    let gained: f64 = market.sp_variables[sp]
        .iter()
        .map(|&k| result.primal[k])
        .sum();
    Ok((gained - solution.allocation.utility(sp)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::tests::single_site;
    use crate::market::{solve_eg, solve_social_optimum, MarketOptions};

    fn eg(sc: &Scenario) -> EquilibriumSolution {
        solve_eg(sc, &MarketOptions::default()).unwrap()
    }

    #[test]
    fn energy_bound_equilibrium_passes() {
        let sc = single_site(&[1.0], &[1.0], Some(10.0), Some((1.0, 4.0)));
        let sol = eg(&sc);
        let report = verify(&sol, &sc, DEFAULT_TOLERANCE).unwrap();
        assert!(report.pass, "{}", report.summary());
        assert!(report.budget_gap[0] < 1e-6);
    }

    #[test]
    fn halved_price_fails_best_response() {
        let sc = single_site(&[1.0], &[1.0], Some(10.0), Some((1.0, 4.0)));
        let mut sol = eg(&sc);
        sol.prices.prices[0] = 0.125;
        let c1 = verify_c1(&sol, &sc, DEFAULT_TOLERANCE).unwrap();
        assert!(!c1.pass);
        assert!((c1.residuals[0] - 4.0).abs() < 1e-5, "{:?}", c1.residuals);
        assert!(!verify(&sol, &sc, DEFAULT_TOLERANCE).unwrap().pass);
    }

    #[test]
    fn multiplier_on_slack_constraint_breaks_slackness() {
        let sc = single_site(&[1.0], &[1.0], Some(10.0), Some((1.0, 1.0)));
        let mut sol = eg(&sc);
        assert!((sol.allocation.utility(0) - 1.0).abs() < 1e-6);
        sol.prices.multipliers.capacity[0][0] = 0.1;
        let c2 = verify_c2(&sol, &sc, DEFAULT_TOLERANCE).unwrap();
        assert!((c2.slackness.capacity[0][0] - 0.9).abs() < 1e-5);
        assert!(!c2.pass);
    }

    #[test]
    fn multiplier_on_absent_constraint_is_infinite() {
        let sc = single_site(&[1.0], &[1.0], None, Some((1.0, 1.0)));
        let mut sol = eg(&sc);
        sol.prices.multipliers.capacity[0][0] = 0.1;
        let c2 = verify_c2(&sol, &sc, DEFAULT_TOLERANCE).unwrap();
        assert!(c2.slackness.max().is_infinite());
    }

    #[test]
    fn symmetric_market_has_no_envy() {
        let sc = single_site(&[1.0, 1.0], &[1.0, 1.0], Some(2.0), None);
        let sol = eg(&sc);
        let m = FairnessMetrics::of(&sol, &sc);
        assert!(m.max_envy() < 1e-6);
        assert!((m.max_min_ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn social_optimum_starves_the_costly_sp() {
        let sc = single_site(&[1.0, 2.0], &[1.0, 1.0], Some(2.0), None);
        let fm = eg(&sc);
        let so = solve_social_optimum(&sc, None, &MarketOptions::default()).unwrap();
        let (mf, ms) = fairness_metrics(&fm, &so, &sc);
        assert!((mf.min_utility - 0.5).abs() < 1e-6);
        assert!(ms.min_utility < 1e-6);
        assert!(mf.nash_welfare.is_finite());
        assert!((ms.total_utility - 2.0).abs() < 1e-6);
        assert!(mf.max_envy() < 1e-6);
    }

    #[test]
    fn equilibrium_is_pareto_optimal() {
        let sc = single_site(&[1.0, 2.0], &[1.0, 3.0], Some(2.0), Some((1.0, 1.5)));
        let sol = eg(&sc);
        for s in 0..2 {
            let gain = pareto_probe(&sol, &sc, s).unwrap();
            assert!(gain < 1e-5, "sp {s} gains {gain}");
        }
    }

    #[test]
    fn wasteful_allocation_is_not_pareto_optimal() {
        let sc = single_site(&[1.0, 1.0], &[1.0, 1.0], Some(2.0), None);
        let mut sol = eg(&sc);
        sol.allocation.rates[0][0] = 0.5;
        sol.allocation.bundles[0][0] = 0.5;
        let gain = pareto_probe(&sol, &sc, 0).unwrap();
        assert!((gain - 0.5).abs() < 1e-4, "{gain}");
    }
}
