//! Budgeted best response of a single SP to posted prices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{rate_prices_for, PriceSystem};
use crate::model::{Scenario, ServiceProvider};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    /// Rates per option `(l, c)`.
    pub rates: Vec<f64>,
    /// `Σ u`; `+∞` when a free option has no cap.
    pub value: f64,
    pub spend: f64,
    pub budget_binding: bool,
    /// Locations whose utility cap is exhausted.
    pub saturated_locations: Vec<usize>,
    /// Option that made the response unbounded, if any.
    pub unbounded_option: Option<usize>,
}

/// `q^s_lc = Σ_r p_rlc d^s_rlc` for every option.
pub fn effective_rate_price(
    prices: &PriceSystem,
    sp: &ServiceProvider,
    scenario: &Scenario,
) -> Vec<f64> {
    rate_prices_for(&prices.prices, &sp.demand, scenario.dims().resources)
}

/// Exact optimum of the SP problem at the given prices.
///
/// Options are filled in increasing order of rate price (ties by option
/// index) up to the remaining cap of their location until the budget runs
/// out. A zero budget buys nothing.
pub fn best_response(
    scenario: &Scenario,
    sp: &ServiceProvider,
    prices: &PriceSystem,
) -> Result<BestResponse> {
    let dims = scenario.dims();
    if let Some(k) = prices.prices.iter().position(|p| !(*p >= 0.0)) {
        return Err(Error::invalid(
            format!("prices[{k}]"),
            "price must be nonnegative",
        ));
    }
    let q = effective_rate_price(prices, sp, scenario);
    let location_of: Vec<usize> = (0..dims.options()).map(|o| dims.option_site(o).0).collect();
    Ok(greedy_fill(
        &q,
        &sp.usable_options(dims),
        &location_of,
        &sp.utility_caps,
        sp.budget,
    ))
}

/// Capped fractional knapsack over options.
///
/// `q` is indexed by option; only `usable` options are considered.
pub fn greedy_fill(
    q: &[f64],
    usable: &[usize],
    location_of: &[usize],
    caps: &[Option<f64>],
    budget: f64,
) -> BestResponse {
    let mut rates = vec![0.0; q.len()];
    let mut response = BestResponse {
        rates: Vec::new(),
        value: 0.0,
        spend: 0.0,
        budget_binding: false,
        saturated_locations: Vec::new(),
        unbounded_option: None,
    };
    if !(budget > 0.0) {
        response.rates = rates;
        return response;
    }
    let mut order = usable.to_vec();
    order.sort_by(|&a, &b| q[a].total_cmp(&q[b]).then(a.cmp(&b)));
    let mut remaining_cap: Vec<f64> = caps.iter().map(|c| c.unwrap_or(f64::INFINITY)).collect();
    let mut left = budget;
    for o in order {
        let l = location_of[o];
        let room = remaining_cap[l];
        if room <= 0.0 {
            continue;
        }
        let price = q[o];
        if price <= 0.0 {
            if room.is_infinite() {
                response.unbounded_option = Some(o);
                response.value = f64::INFINITY;
                rates[o] = f64::INFINITY;
                break;
            }
            rates[o] += room;
            remaining_cap[l] = 0.0;
            continue;
        }
        if left <= 0.0 {
            break;
        }
        let affordable = left / price;
        if affordable <= room {
            rates[o] += affordable;
            remaining_cap[l] -= affordable;
            response.spend += affordable * price;
            left = 0.0;
            response.budget_binding = true;
        } else {
            rates[o] += room;
            remaining_cap[l] = 0.0;
            response.spend += room * price;
            left -= room * price;
        }
    }
    if response.unbounded_option.is_none() {
        response.value = rates.iter().sum();
    }
    response.saturated_locations = caps
        .iter()
        .enumerate()
        .filter(|(l, c)| c.is_some() && remaining_cap[*l] <= 0.0)
        .map(|(l, _)| l)
        .collect();
    response.rates = rates;
    response
}
