//! Market instance data model.
//!
//! A scenario is indexed by resource `r`, location `l` and facility `c`,
//! where `c = 0` is the edge facility co-located with `l` and `c = 1..=C`
//! are the shared clouds. Per-SP demands and bundles are dense vectors laid
//! out as `(l, c, r)` with `r` fastest.

mod energy;
mod usage;

pub use energy::{energy_eval, EnergyTerm};
pub(crate) use energy::{site_energy, site_energy_gradient};
pub use usage::{aggregate_usage, leontief_rate, Allocation, SiteUsage};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    /// Consumed at the local site whatever the destination facility (radio).
    Access,
    /// Consumed at the facility that serves the request (CPU, RAM).
    Compute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resource {
    pub name: String,
    pub kind: ResourceKind,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Location {
    pub name: String,
    /// Per-resource capacity `X_rl`; `None` means unlimited.
    pub capacities: Vec<Option<f64>>,
    /// Local energy limit `E_l`; `None` means unlimited.
    pub energy_limit: Option<f64>,
    pub energy_terms: Vec<EnergyTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cloud {
    pub name: String,
    pub energy_terms: Vec<EnergyTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceProvider {
    pub name: String,
    pub budget: f64,
    /// Base demand `d_rlc`, dense over `(l, c, r)`.
    pub demand: Vec<f64>,
    /// Per-location cap on `sum_c u_lc`; `None` means unlimited.
    pub utility_caps: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub resources: Vec<Resource>,
    pub locations: Vec<Location>,
    pub clouds: Vec<Cloud>,
    pub sps: Vec<ServiceProvider>,
    pub global_energy_limit: Option<f64>,
}

/// Sizes of the `(r, l, c)` index space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub resources: usize,
    pub locations: usize,
    /// Number of facilities per location, `C + 1`.
    pub facilities: usize,
}

impl Dims {
    #[inline]
    pub fn coord(&self, r: usize, l: usize, c: usize) -> usize {
        (l * self.facilities + c) * self.resources + r
    }

    #[inline]
    pub fn option(&self, l: usize, c: usize) -> usize {
        l * self.facilities + c
    }

    /// Inverse of [`Dims::option`].
    #[inline]
    pub fn option_site(&self, option: usize) -> (usize, usize) {
        (option / self.facilities, option % self.facilities)
    }

    pub fn options(&self) -> usize {
        self.locations * self.facilities
    }

    pub fn coords(&self) -> usize {
        self.options() * self.resources
    }

    pub fn clouds(&self) -> usize {
        self.facilities - 1
    }
}

impl ServiceProvider {
    /// Base demand vector over resources for option `(l, c)`.
    pub fn demand_at(&self, dims: Dims, l: usize, c: usize) -> &[f64] {
        let start = dims.coord(0, l, c);
        &self.demand[start..start + dims.resources]
    }

    /// Options `(l, c)` with at least one positive base demand, in index order.
    pub fn usable_options(&self, dims: Dims) -> Vec<usize> {
        (0..dims.options())
            .filter(|&o| {
                let (l, c) = dims.option_site(o);
                self.demand_at(dims, l, c).iter().any(|&d| d > 0.0)
            })
            .collect()
    }
}

impl Scenario {
    pub fn dims(&self) -> Dims {
        Dims {
            resources: self.resources.len(),
            locations: self.locations.len(),
            facilities: self.clouds.len() + 1,
        }
    }

    pub fn resource_index(&self, name: &str) -> Option<usize> {
        self.resources.iter().position(|r| r.name == name)
    }

    pub fn budgets(&self) -> Vec<f64> {
        self.sps.iter().map(|s| s.budget).collect()
    }

    /// Checks every invariant; errors name the offending field path.
    ///
    /// Budgets must be strictly positive here. Programmatic callers that need
    /// a zero-budget SP (dynamics, best responses) may build one by editing
    /// a validated scenario; the market solvers reject it.
    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        if self.resources.is_empty() {
            return Err(Error::invalid(
                "resources",
                "at least one resource required",
            ));
        }
        if self.locations.is_empty() {
            return Err(Error::invalid(
                "locations",
                "at least one location required",
            ));
        }
        if self.sps.is_empty() {
            return Err(Error::invalid(
                "sps",
                "at least one service provider required",
            ));
        }
        for (i, r) in self.resources.iter().enumerate() {
            if self.resources[..i].iter().any(|o| o.name == r.name) {
                return Err(Error::invalid(
                    format!("resources[{i}].name"),
                    format!("duplicate resource '{}'", r.name),
                ));
            }
        }
        let check_terms = |terms: &[EnergyTerm], path: &str, cloud: bool| -> Result<()> {
            for (k, t) in terms.iter().enumerate() {
                let p = format!("{path}.energy_terms[{k}]");
                if t.resource >= dims.resources {
                    return Err(Error::invalid(format!("{p}.resource"), "unknown resource"));
                }
                if cloud && self.resources[t.resource].kind == ResourceKind::Access {
                    return Err(Error::invalid(
                        format!("{p}.resource"),
                        "access resources are not consumed at clouds",
                    ));
                }
                if !(t.coefficient >= 0.0) || !t.coefficient.is_finite() {
                    return Err(Error::invalid(
                        format!("{p}.coefficient"),
                        "coefficient must be finite and nonnegative",
                    ));
                }
                if !(t.exponent >= 1.0) || !t.exponent.is_finite() {
                    return Err(Error::invalid(format!("{p}.exponent"), "exponent below 1"));
                }
            }
            Ok(())
        };
        for (l, loc) in self.locations.iter().enumerate() {
            let path = format!("locations[{l}]");
            if loc.capacities.len() != dims.resources {
                return Err(Error::invalid(
                    format!("{path}.capacities"),
                    "one entry per resource required",
                ));
            }
            for (r, cap) in loc.capacities.iter().enumerate() {
                if let Some(x) = cap {
                    if !(*x > 0.0) || !x.is_finite() {
                        return Err(Error::invalid(
                            format!("{path}.capacities.{}", self.resources[r].name),
                            "capacity must be positive",
                        ));
                    }
                }
            }
            if let Some(e) = loc.energy_limit {
                if !(e > 0.0) || !e.is_finite() {
                    return Err(Error::invalid(
                        format!("{path}.energy_limit"),
                        "energy limit must be positive",
                    ));
                }
            }
            check_terms(&loc.energy_terms, &path, false)?;
        }
        for (c, cloud) in self.clouds.iter().enumerate() {
            check_terms(&cloud.energy_terms, &format!("clouds[{c}]"), true)?;
        }
        if let Some(e) = self.global_energy_limit {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::invalid(
                    "global_energy_limit",
                    "energy limit must be positive",
                ));
            }
        }
        for (s, sp) in self.sps.iter().enumerate() {
            let path = format!("sps[{s}]");
            if !(sp.budget > 0.0) || !sp.budget.is_finite() {
                return Err(Error::invalid(
                    format!("{path}.budget"),
                    "budget must be positive",
                ));
            }
            if sp.demand.len() != dims.coords() {
                return Err(Error::invalid(
                    format!("{path}.demands"),
                    format!(
                        "expected {} entries, found {}",
                        dims.coords(),
                        sp.demand.len()
                    ),
                ));
            }
            if let Some(k) = sp
                .demand
                .iter()
                .position(|d| !(*d >= 0.0) || !d.is_finite())
            {
                return Err(Error::invalid(
                    format!("{path}.demands[{k}]"),
                    "base demand must be finite and nonnegative",
                ));
            }
            if sp.utility_caps.len() != dims.locations {
                return Err(Error::invalid(
                    format!("{path}.utility_caps"),
                    "one entry per location required",
                ));
            }
            for (l, cap) in sp.utility_caps.iter().enumerate() {
                if let Some(u) = cap {
                    if !(*u > 0.0) || !u.is_finite() {
                        return Err(Error::invalid(
                            format!("{path}.utility_caps.{}", self.locations[l].name),
                            "utility cap must be positive",
                        ));
                    }
                }
            }
            if sp.usable_options(dims).is_empty() {
                return Err(Error::invalid(
                    format!("{path}.demands"),
                    "no option with positive base demand",
                ));
            }
            if let Some((l, c)) = self.free_option(s) {
                return Err(Error::invalid(
                    format!("{path}.demands"),
                    format!(
                        "unbounded: option (location {}, facility {c}) touches no finite capacity or energy limit",
                        self.locations[l].name
                    ),
                ));
            }
        }
        Ok(())
    }

    /// First usable option of SP `s` whose rate no finite constraint bounds.
    pub fn free_option(&self, s: usize) -> Option<(usize, usize)> {
        let dims = self.dims();
        let sp = &self.sps[s];
        sp.usable_options(dims)
            .into_iter()
            .map(|o| dims.option_site(o))
            .find(|&(l, c)| {
                if sp.utility_caps.get(l).copied().flatten().is_some() {
                    return false;
                }
                !sp.demand_at(dims, l, c)
                    .iter()
                    .enumerate()
                    .any(|(r, &d)| d > 0.0 && self.bounds_coordinate(r, l, c))
            })
    }

    /// Whether coordinate `(r, l, c)` appears in some finite capacity or energy constraint.
    fn bounds_coordinate(&self, r: usize, l: usize, c: usize) -> bool {
        let global = self.global_energy_limit.is_some();
        let loc = &self.locations[l];
        let priced =
            |terms: &[EnergyTerm]| terms.iter().any(|t| t.resource == r && t.coefficient > 0.0);
        if self.resources[r].kind == ResourceKind::Access || c == 0 {
            loc.capacities[r].is_some()
                || (priced(&loc.energy_terms) && (loc.energy_limit.is_some() || global))
        } else {
            global && priced(&self.clouds[c - 1].energy_terms)
        }
    }
}
