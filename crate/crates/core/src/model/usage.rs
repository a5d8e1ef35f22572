use serde::{Deserialize, Serialize};

use super::{site_energy, ResourceKind, Scenario};
use crate::error::{Error, Result};

/// Leontief service rate: `min_{r: d_r > 0} bundle_r / d_r`.
pub fn leontief_rate(bundle: &[f64], demand: &[f64]) -> Result<f64> {
    if bundle.len() != demand.len() {
        return Err(Error::Dimension(format!(
            "bundle has {} entries, demand has {}",
            bundle.len(),
            demand.len()
        )));
    }
    bundle
        .iter()
        .zip(demand)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&x, &d)| x.max(0.0) / d)
        .min_by(f64::total_cmp)
        .ok_or(Error::UndefinedRate)
}

/// Resource bundles `x^s_rlc` together with the service rates they deliver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Per SP, dense over `(l, c, r)`.
    pub bundles: Vec<Vec<f64>>,
    /// Per SP, dense over options `(l, c)`.
    pub rates: Vec<Vec<f64>>,
}

impl Allocation {
    pub fn zero(scenario: &Scenario) -> Self {
        let dims = scenario.dims();
        let n = scenario.sps.len();
        Self {
            bundles: vec![vec![0.0; dims.coords()]; n],
            rates: vec![vec![0.0; dims.options()]; n],
        }
    }

    /// No-waste allocation `x = d * u`.
    pub fn from_rates(scenario: &Scenario, rates: Vec<Vec<f64>>) -> Result<Self> {
        let dims = scenario.dims();
        if rates.len() != scenario.sps.len() || rates.iter().any(|r| r.len() != dims.options()) {
            return Err(Error::Dimension(
                "rates do not match scenario options".into(),
            ));
        }
        let bundles = scenario
            .sps
            .iter()
            .zip(&rates)
            .map(|(sp, u)| {
                sp.demand
                    .iter()
                    .enumerate()
                    .map(|(k, &d)| d * u[k / dims.resources])
                    .collect()
            })
            .collect();
        Ok(Self { bundles, rates })
    }

    /// Allocation from arbitrary bundles; rates follow from the Leontief rule.
    pub fn from_bundles(scenario: &Scenario, bundles: Vec<Vec<f64>>) -> Result<Self> {
        let dims = scenario.dims();
        if bundles.len() != scenario.sps.len() || bundles.iter().any(|b| b.len() != dims.coords()) {
            return Err(Error::Dimension(
                "bundles do not match scenario coordinates".into(),
            ));
        }
        let rates = scenario
            .sps
            .iter()
            .zip(&bundles)
            .map(|(sp, x)| utility_rates(scenario, &sp.demand, x))
            .collect();
        Ok(Self { bundles, rates })
    }

    pub fn utility(&self, s: usize) -> f64 {
        self.rates[s].iter().sum()
    }

    pub fn utilities(&self) -> Vec<f64> {
        (0..self.rates.len()).map(|s| self.utility(s)).collect()
    }

    pub fn check_dims(&self, scenario: &Scenario) -> Result<()> {
        let dims = scenario.dims();
        let ok = self.bundles.len() == scenario.sps.len()
            && self.rates.len() == scenario.sps.len()
            && self.bundles.iter().all(|b| b.len() == dims.coords())
            && self.rates.iter().all(|r| r.len() == dims.options());
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(
                "allocation does not match scenario".into(),
            ))
        }
    }
}

/// Per-option Leontief rates of `bundle` for an SP with base demand `demand`.
/// Options with an all-zero demand deliver nothing.
pub(crate) fn utility_rates(scenario: &Scenario, demand: &[f64], bundle: &[f64]) -> Vec<f64> {
    let dims = scenario.dims();
    (0..dims.options())
        .map(|o| {
            let k = o * dims.resources;
            let d = &demand[k..k + dims.resources];
            leontief_rate(&bundle[k..k + dims.resources], d).unwrap_or(0.0)
        })
        .collect()
}

/// Aggregate usage per site and the resulting energy figures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteUsage {
    /// `x̂_rl`, indexed `[l][r]`.
    pub local: Vec<Vec<f64>>,
    /// `x̃_rc` for clouds `c = 1..=C`, indexed `[c - 1][r]`.
    pub cloud: Vec<Vec<f64>>,
    pub local_energy: Vec<f64>,
    pub cloud_energy: Vec<f64>,
    pub total_energy: f64,
}

/// Aggregates bundles per site.
///
/// Access resources count at the local site for every destination facility;
/// compute resources count at the edge for `c = 0` and at cloud `c` otherwise.
pub fn aggregate_usage(allocation: &Allocation, scenario: &Scenario) -> Result<SiteUsage> {
    allocation.check_dims(scenario)?;
    Ok(aggregate_bundles(
        scenario,
        allocation.bundles.iter().map(Vec::as_slice),
    ))
}

pub(crate) fn aggregate_bundles<'a>(
    scenario: &Scenario,
    bundles: impl Iterator<Item = &'a [f64]>,
) -> SiteUsage {
    let dims = scenario.dims();
    let mut local = vec![vec![0.0; dims.resources]; dims.locations];
    let mut cloud = vec![vec![0.0; dims.resources]; dims.clouds()];
    for x in bundles {
        for l in 0..dims.locations {
            for c in 0..dims.facilities {
                for (r, res) in scenario.resources.iter().enumerate() {
                    let v = x[dims.coord(r, l, c)];
                    if res.kind == ResourceKind::Access || c == 0 {
                        local[l][r] += v;
                    } else {
                        cloud[c - 1][r] += v;
                    }
                }
            }
        }
    }
    let local_energy: Vec<f64> = scenario
        .locations
        .iter()
        .zip(&local)
        .map(|(loc, u)| site_energy(&loc.energy_terms, u))
        .collect();
    let cloud_energy: Vec<f64> = scenario
        .clouds
        .iter()
        .zip(&cloud)
        .map(|(cl, u)| site_energy(&cl.energy_terms, u))
        .collect();
    let total_energy = local_energy.iter().sum::<f64>() + cloud_energy.iter().sum::<f64>();
    SiteUsage {
        local,
        cloud,
        local_energy,
        cloud_energy,
        total_energy,
    }
}
