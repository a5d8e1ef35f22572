//! Eisenberg-Gale market program, social-optimum baseline, and equilibrium
//! prices recovered from the constraint multipliers.
//!
//! Both programs are posed over rate variables `u^s_lc` (one per usable
//! option) with bundles fixed to the no-waste form `x = d * u`.

use serde::{Deserialize, Serialize};

use crate::convex::{
    solve_convex, Affine, ConvexProgram, KktResiduals, LinearForm, LogSum, PowerSum, PowerTerm,
    SolveOptions, Status,
};
use crate::error::{Error, Result};
use crate::model::{
    aggregate_usage, site_energy_gradient, Allocation, EnergyTerm, ResourceKind, Scenario,
};

/// Rates below this are reported as zero.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Fisher market equilibrium via the Eisenberg-Gale program.
    Fm,
    /// Social optimum: maximum weighted total utility.
    So,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Fm => "fm",
            Scheme::So => "so",
        }
    }
}

/// Which market constraint a solver multiplier belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintTag {
    Capacity {
        resource: usize,
        location: usize,
    },
    LocalEnergy {
        location: usize,
    },
    GlobalEnergy,
    UtilityCap {
        sp: usize,
        location: usize,
    },
    /// Lower bound on one SP's utility (Pareto probes).
    UtilityFloor {
        sp: usize,
    },
}

/// Dual multipliers of the market constraints. Absent constraints carry zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    /// `γ_rl`, indexed `[l][r]`.
    pub capacity: Vec<Vec<f64>>,
    /// `μ_l`.
    pub local_energy: Vec<f64>,
    /// `λ`.
    pub global_energy: f64,
    /// Utility-cap multipliers, indexed `[s][l]`; they do not enter resource prices.
    pub utility_caps: Vec<Vec<f64>>,
}

impl Multipliers {
    pub fn zero(scenario: &Scenario) -> Self {
        let dims = scenario.dims();
        Self {
            capacity: vec![vec![0.0; dims.resources]; dims.locations],
            local_energy: vec![0.0; dims.locations],
            global_energy: 0.0,
            utility_caps: vec![vec![0.0; dims.locations]; scenario.sps.len()],
        }
    }

    /// Every multiplier with a label, in a fixed order.
    pub fn labelled(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (l, row) in self.capacity.iter().enumerate() {
            for (r, &g) in row.iter().enumerate() {
                out.push((format!("gamma_l{l}_r{r}"), g));
            }
        }
        for (l, &m) in self.local_energy.iter().enumerate() {
            out.push((format!("mu_l{l}"), m));
        }
        out.push(("lambda".into(), self.global_energy));
        for (s, row) in self.utility_caps.iter().enumerate() {
            for (l, &c) in row.iter().enumerate() {
                out.push((format!("cap_s{s}_l{l}"), c));
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Multipliers) -> f64 {
        self.labelled()
            .iter()
            .zip(other.labelled())
            .map(|((_, a), (_, b))| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_nonnegative(&self) -> Result<()> {
        match self.labelled().into_iter().find(|(_, v)| !(*v >= 0.0)) {
            Some((name, value)) => Err(Error::NegativeMultiplier { name, value }),
            None => Ok(()),
        }
    }
}

/// Per-coordinate prices together with the multipliers they derive from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceSystem {
    /// `p_rlc`, dense over `(l, c, r)`.
    pub prices: Vec<f64>,
    pub multipliers: Multipliers,
    /// Per-SP price of one unit of rate, `q^s_lc = Σ_r p_rlc d^s_rlc`, indexed `[s][option]`.
    pub rate_prices: Vec<Vec<f64>>,
}

impl PriceSystem {
    pub fn price(&self, scenario: &Scenario, r: usize, l: usize, c: usize) -> f64 {
        self.prices[scenario.dims().coord(r, l, c)]
    }
}

/// Prices each coordinate by the multipliers of the aggregate constraints it
/// enters, times the derivative of that aggregate.
///
/// Access resources and edge compute pay `γ_rl + (μ_l + λ) ∇ê_rl(x̂_rl)`;
/// cloud compute pays `λ ∇ẽ_rc(x̃_rc)`.
pub fn extract_prices(
    allocation: &Allocation,
    multipliers: &Multipliers,
    scenario: &Scenario,
) -> Result<PriceSystem> {
    multipliers.check_nonnegative()?;
    let dims = scenario.dims();
    if multipliers.capacity.len() != dims.locations
        || multipliers
            .capacity
            .iter()
            .any(|r| r.len() != dims.resources)
        || multipliers.local_energy.len() != dims.locations
    {
        return Err(Error::Dimension("multipliers do not match scenario".into()));
    }
    let usage = aggregate_usage(allocation, scenario)?;
    let lambda = multipliers.global_energy;
    let mut prices = vec![0.0; dims.coords()];
    for l in 0..dims.locations {
        let loc = &scenario.locations[l];
        for c in 0..dims.facilities {
            for (r, res) in scenario.resources.iter().enumerate() {
                prices[dims.coord(r, l, c)] = if res.kind == ResourceKind::Access || c == 0 {
                    multipliers.capacity[l][r]
                        + (multipliers.local_energy[l] + lambda)
                            * site_energy_gradient(&loc.energy_terms, &usage.local[l], r)
                } else {
                    lambda
                        * site_energy_gradient(
                            &scenario.clouds[c - 1].energy_terms,
                            &usage.cloud[c - 1],
                            r,
                        )
                };
            }
        }
    }
    let rate_prices = scenario
        .sps
        .iter()
        .map(|sp| rate_prices_for(&prices, &sp.demand, dims.resources))
        .collect();
    Ok(PriceSystem {
        prices,
        multipliers: multipliers.clone(),
        rate_prices,
    })
}

pub(crate) fn rate_prices_for(prices: &[f64], demand: &[f64], resources: usize) -> Vec<f64> {
    prices
        .chunks(resources)
        .zip(demand.chunks(resources))
        .map(|(p, d)| p.iter().zip(d).map(|(a, b)| a * b).sum())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub status: Status,
    pub iterations: usize,
    pub max_kkt_residual: f64,
    pub kkt: KktResiduals,
    pub barrier_weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumSolution {
    pub scheme: Scheme,
    pub allocation: Allocation,
    pub prices: PriceSystem,
    /// `U^s = Σ_{l,c} u^s_lc`.
    pub utilities: Vec<f64>,
    /// Program objective: `Σ B^s ln U^s` for FM, `Σ w_s U^s` for SO.
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

impl EquilibriumSolution {
    pub fn total_utility(&self) -> f64 {
        self.utilities.iter().sum()
    }

    /// Money SP `s` pays for its bundle at the posted prices.
    pub fn spend(&self, s: usize) -> f64 {
        self.allocation.bundles[s]
            .iter()
            .zip(&self.prices.prices)
            .map(|(x, p)| x * p)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MarketOptions {
    pub solver: SolveOptions,
}

/// Objective of a market program over rate variables.
#[derive(Clone, Debug)]
pub enum MarketObjective {
    /// `Σ_s B_s ln U^s`.
    NashWelfare,
    /// `Σ_s w_s U^s`.
    Weighted(Vec<f64>),
}

/// A market program posed over the scenario's rate variables.
pub struct MarketProgram {
    /// `(sp, option)` for each variable.
    pub variables: Vec<(usize, usize)>,
    /// Variable indices per SP.
    pub sp_variables: Vec<Vec<usize>>,
    pub program: ConvexProgram<ConstraintTag>,
}

impl MarketProgram {
    /// Builds the feasible set shared by the FM and SO programs: capacities,
    /// local and global energy limits, and finite utility caps.
    pub fn new(scenario: &Scenario, objective: MarketObjective) -> Self {
        let dims = scenario.dims();
        let mut variables = Vec::new();
        let mut sp_variables = Vec::new();
        for (s, sp) in scenario.sps.iter().enumerate() {
            let mut mine = Vec::new();
            for o in sp.usable_options(dims) {
                mine.push(variables.len());
                variables.push((s, o));
            }
            sp_variables.push(mine);
        }

        let demand = |k: usize, r: usize| {
            let (s, o) = variables[k];
            let (l, c) = dims.option_site(o);
            scenario.sps[s].demand[dims.coord(r, l, c)]
        };
        // linear forms for x̂_rl and x̃_rc over the rate variables
        let local_form = |r: usize, l: usize| -> LinearForm {
            let access = scenario.resources[r].kind == ResourceKind::Access;
            (0..variables.len())
                .filter(|&k| {
                    let (ll, c) = dims.option_site(variables[k].1);
                    ll == l && (access || c == 0)
                })
                .map(|k| (k, demand(k, r)))
                .filter(|&(_, d)| d > 0.0)
                .collect()
        };
        let cloud_form = |r: usize, c: usize| -> LinearForm {
            if scenario.resources[r].kind == ResourceKind::Access {
                return Vec::new();
            }
            (0..variables.len())
                .filter(|&k| dims.option_site(variables[k].1).1 == c)
                .map(|k| (k, demand(k, r)))
                .filter(|&(_, d)| d > 0.0)
                .collect()
        };
        let power_terms = |terms: &[EnergyTerm], form: &dyn Fn(usize) -> LinearForm| {
            terms
                .iter()
                .filter(|t| t.coefficient > 0.0)
                .map(|t| PowerTerm {
                    coefficient: t.coefficient,
                    exponent: t.exponent,
                    form: form(t.resource),
                })
                .filter(|t| !t.form.is_empty())
                .collect::<Vec<_>>()
        };

        let n = variables.len();
        let mut program = match objective {
            MarketObjective::NashWelfare => ConvexProgram::new(
                n,
                LogSum {
                    groups: scenario
                        .sps
                        .iter()
                        .zip(&sp_variables)
                        .map(|(sp, vars)| (sp.budget, vars.clone()))
                        .collect(),
                },
            ),
            MarketObjective::Weighted(weights) => ConvexProgram::new(
                n,
                Affine::new(
                    variables
                        .iter()
                        .enumerate()
                        .map(|(k, &(s, _))| (k, weights[s]))
                        .collect(),
                    0.0,
                ),
            ),
        };

        for (l, loc) in scenario.locations.iter().enumerate() {
            for (r, cap) in loc.capacities.iter().enumerate() {
                if let Some(cap) = cap {
                    let form = local_form(r, l);
                    if !form.is_empty() {
                        program.constrain(
                            Affine::new(form, -cap),
                            ConstraintTag::Capacity {
                                resource: r,
                                location: l,
                            },
                        );
                    }
                }
            }
        }
        for (l, loc) in scenario.locations.iter().enumerate() {
            if let Some(limit) = loc.energy_limit {
                let terms = power_terms(&loc.energy_terms, &|r| local_form(r, l));
                if !terms.is_empty() {
                    program.constrain(
                        PowerSum {
                            terms,
                            constant: -limit,
                        },
                        ConstraintTag::LocalEnergy { location: l },
                    );
                }
            }
        }
        if let Some(limit) = scenario.global_energy_limit {
            let mut terms = Vec::new();
            for (l, loc) in scenario.locations.iter().enumerate() {
                terms.extend(power_terms(&loc.energy_terms, &|r| local_form(r, l)));
            }
            for (c, cloud) in scenario.clouds.iter().enumerate() {
                terms.extend(power_terms(&cloud.energy_terms, &|r| cloud_form(r, c + 1)));
            }
            if !terms.is_empty() {
                program.constrain(
                    PowerSum {
                        terms,
                        constant: -limit,
                    },
                    ConstraintTag::GlobalEnergy,
                );
            }
        }
        for (s, sp) in scenario.sps.iter().enumerate() {
            for (l, cap) in sp.utility_caps.iter().enumerate() {
                if let Some(cap) = cap {
                    let form: LinearForm = sp_variables[s]
                        .iter()
                        .filter(|&&k| dims.option_site(variables[k].1).0 == l)
                        .map(|&k| (k, 1.0))
                        .collect();
                    if !form.is_empty() {
                        program.constrain(
                            Affine::new(form, -cap),
                            ConstraintTag::UtilityCap { sp: s, location: l },
                        );
                    }
                }
            }
        }

        Self {
            variables,
            sp_variables,
            program,
        }
    }

    /// Rates per SP and option from a primal vector, zeroing tiny entries.
    pub fn rates(&self, scenario: &Scenario, primal: &[f64]) -> Vec<Vec<f64>> {
        let dims = scenario.dims();
        let mut rates = vec![vec![0.0; dims.options()]; scenario.sps.len()];
        for (k, &(s, o)) in self.variables.iter().enumerate() {
            let u = primal[k];
            rates[s][o] = if u < SUPPORT_THRESHOLD { 0.0 } else { u };
        }
        rates
    }

    pub fn multipliers(&self, scenario: &Scenario, theta: &[f64]) -> Multipliers {
        let mut m = Multipliers::zero(scenario);
        for (c, &t) in self.program.constraints.iter().zip(theta) {
            match c.tag {
                ConstraintTag::Capacity { resource, location } => {
                    m.capacity[location][resource] = t
                }
                ConstraintTag::LocalEnergy { location } => m.local_energy[location] = t,
                ConstraintTag::GlobalEnergy => m.global_energy = t,
                ConstraintTag::UtilityCap { sp, location } => m.utility_caps[sp][location] = t,
                ConstraintTag::UtilityFloor { .. } => {}
            }
        }
        m
    }
}

fn solve_market(
    scenario: &Scenario,
    scheme: Scheme,
    objective: MarketObjective,
    opts: &MarketOptions,
) -> Result<EquilibriumSolution> {
    scenario.validate()?;
    // The argmax is invariant to scaling the objective, so solve with budgets
    // (or weights) summing to one and scale the multipliers back afterwards.
    let mut normalized;
    let (program_scenario, objective, scale) = match objective {
        MarketObjective::NashWelfare => {
            let total: f64 = scenario.sps.iter().map(|sp| sp.budget).sum();
            if total > 0.0 {
                normalized = scenario.clone();
                for sp in &mut normalized.sps {
                    sp.budget /= total;
                }
                (&normalized, MarketObjective::NashWelfare, total)
            } else {
                (scenario, MarketObjective::NashWelfare, 1.0)
            }
        }
        MarketObjective::Weighted(w) => {
            let total: f64 = w.iter().sum();
            if total > 0.0 {
                let w = w.iter().map(|x| x / total).collect();
                (scenario, MarketObjective::Weighted(w), total)
            } else {
                (scenario, MarketObjective::Weighted(w), 1.0)
            }
        }
    };
    let market = MarketProgram::new(program_scenario, objective);
    let sol = solve_convex(&market.program, &opts.solver);
    match sol.status {
        Status::Optimal => {}
        Status::Unbounded => {
            let (sp, (location, facility)) = (0..scenario.sps.len())
                .find_map(|s| scenario.free_option(s).map(|o| (s, o)))
                .unwrap_or_else(|| {
                    // report the variable that ran away
                    let k = sol
                        .primal
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.total_cmp(b.1))
                        .map(|(k, _)| k)
                        .unwrap_or(0);
                    let (s, o) = market.variables[k];
                    (s, scenario.dims().option_site(o))
                });
            return Err(Error::FreeOption {
                sp,
                location,
                facility,
            });
        }
        status => {
            return Err(Error::Solver {
                status,
                detail: format!(
                    "max KKT residual {:.3e} after {} Newton iterations",
                    sol.max_residual, sol.iterations
                ),
            })
        }
    }
    let rates = market.rates(scenario, &sol.primal);
    let allocation = Allocation::from_rates(scenario, rates)?;
    let theta: Vec<f64> = sol.multipliers.iter().map(|t| t * scale).collect();
    let multipliers = market.multipliers(scenario, &theta);
    let prices = extract_prices(&allocation, &multipliers, scenario)?;
    let utilities = allocation.utilities();
    Ok(EquilibriumSolution {
        scheme,
        allocation,
        prices,
        utilities,
        objective: sol.objective * scale,
        diagnostics: Diagnostics {
            status: sol.status,
            iterations: sol.iterations,
            max_kkt_residual: sol.max_residual,
            kkt: sol.residuals,
            barrier_weight: sol.barrier_weight,
        },
    })
}

/// Market equilibrium: maximizes `Σ_s B^s ln U^s` over the shared feasible set.
pub fn solve_eg(scenario: &Scenario, opts: &MarketOptions) -> Result<EquilibriumSolution> {
    solve_market(scenario, Scheme::Fm, MarketObjective::NashWelfare, opts)
}

/// Social optimum: maximizes `Σ_s w_s U^s`; weights default to the budgets.
pub fn solve_social_optimum(
    scenario: &Scenario,
    weights: Option<&[f64]>,
    opts: &MarketOptions,
) -> Result<EquilibriumSolution> {
    let weights = match weights {
        Some(w) => {
            if w.len() != scenario.sps.len() {
                return Err(Error::Dimension(format!(
                    "{} weights for {} SPs",
                    w.len(),
                    scenario.sps.len()
                )));
            }
            if let Some(k) = w.iter().position(|x| !(*x > 0.0)) {
                return Err(Error::invalid(
                    format!("weights[{k}]"),
                    "weight must be positive",
                ));
            }
            w.to_vec()
        }
        None => scenario.budgets(),
    };
    solve_market(
        scenario,
        Scheme::So,
        MarketObjective::Weighted(weights),
        opts,
    )
}

pub fn solve(
    scenario: &Scenario,
    scheme: Scheme,
    opts: &MarketOptions,
) -> Result<EquilibriumSolution> {
    match scheme {
        Scheme::Fm => solve_eg(scenario, opts),
        Scheme::So => solve_social_optimum(scenario, None, opts),
    }
}
