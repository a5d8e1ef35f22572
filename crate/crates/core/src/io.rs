//! JSON documents for scenarios and solutions.
//!
//! Limits and capacities that are omitted mean "no constraint". Resources,
//! locations and clouds are referenced by name; the edge facility of a
//! location is called `"edge"`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::convex::{KktResiduals, Status};
use crate::error::{Error, Result};
use crate::market::{
    rate_prices_for, Diagnostics, EquilibriumSolution, Multipliers, PriceSystem, Scheme,
};
use crate::model::{Allocation, Cloud, EnergyTerm, Location, Resource, Scenario, ServiceProvider};

pub const SCHEMA_VERSION: u32 = 1;
pub const EDGE: &str = "edge";

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Shortest decimal text of `x` rounded to 9 significant digits; exponent
/// form outside `[1e-4, 1e15)`.
pub fn sig9(x: f64) -> String {
    let r = round9(x);
    let a = r.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyTermDoc {
    pub resource: String,
    pub coefficient: f64,
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationDoc {
    pub name: String,
    #[serde(default)]
    pub capacities: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_limit: Option<f64>,
    #[serde(default)]
    pub energy_terms: Vec<EnergyTermDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudDoc {
    pub name: String,
    #[serde(default)]
    pub energy_terms: Vec<EnergyTermDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandDoc {
    pub location: String,
    pub facility: String,
    pub demand: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpDoc {
    pub name: String,
    pub budget: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub utility_caps: BTreeMap<String, f64>,
    pub demands: Vec<DemandDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub schema: u32,
    pub resources: Vec<Resource>,
    pub locations: Vec<LocationDoc>,
    #[serde(default)]
    pub clouds: Vec<CloudDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_energy_limit: Option<f64>,
    pub sps: Vec<SpDoc>,
}

struct Names<'a> {
    what: &'static str,
    names: Vec<&'a str>,
}

impl<'a> Names<'a> {
    fn new(what: &'static str, names: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            what,
            names: names.into_iter().collect(),
        }
    }

    fn find(&self, path: &str, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::schema(path, format!("unknown {} '{name}'", self.what)))
    }

    fn check_unique(&self, path: &str) -> Result<()> {
        for (i, n) in self.names.iter().enumerate() {
            if self.names[..i].contains(n) {
                return Err(Error::schema(
                    format!("{path}[{i}].name"),
                    format!("duplicate name '{n}'"),
                ));
            }
        }
        Ok(())
    }
}

impl ScenarioDoc {
    pub fn from_scenario(sc: &Scenario) -> Self {
        let dims = sc.dims();
        let rname = |r: usize| sc.resources[r].name.clone();
        let terms = |ts: &[EnergyTerm]| {
            ts.iter()
                .map(|t| EnergyTermDoc {
                    resource: rname(t.resource),
                    coefficient: t.coefficient,
                    exponent: t.exponent,
                })
                .collect()
        };
        let facility = |c: usize| {
            if c == 0 {
                EDGE.to_string()
            } else {
                sc.clouds[c - 1].name.clone()
            }
        };
        Self {
            schema: SCHEMA_VERSION,
            resources: sc.resources.clone(),
            locations: sc
                .locations
                .iter()
                .map(|l| LocationDoc {
                    name: l.name.clone(),
                    capacities: l
                        .capacities
                        .iter()
                        .enumerate()
                        .filter_map(|(r, c)| c.map(|c| (rname(r), c)))
                        .collect(),
                    energy_limit: l.energy_limit,
                    energy_terms: terms(&l.energy_terms),
                })
                .collect(),
            clouds: sc
                .clouds
                .iter()
                .map(|c| CloudDoc {
                    name: c.name.clone(),
                    energy_terms: terms(&c.energy_terms),
                })
                .collect(),
            global_energy_limit: sc.global_energy_limit,
            sps: sc
                .sps
                .iter()
                .map(|sp| SpDoc {
                    name: sp.name.clone(),
                    budget: sp.budget,
                    utility_caps: sp
                        .utility_caps
                        .iter()
                        .enumerate()
                        .filter_map(|(l, u)| u.map(|u| (sc.locations[l].name.clone(), u)))
                        .collect(),
                    demands: (0..dims.options())
                        .filter_map(|o| {
                            let (l, c) = dims.option_site(o);
                            let d = sp.demand_at(dims, l, c);
                            let demand: BTreeMap<String, f64> = d
                                .iter()
                                .enumerate()
                                .filter(|(_, &v)| v != 0.0)
                                .map(|(r, &v)| (rname(r), v))
                                .collect();
                            (!demand.is_empty()).then(|| DemandDoc {
                                location: sc.locations[l].name.clone(),
                                facility: facility(c),
                                demand,
                            })
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Resolves names into a validated scenario.
    pub fn build(&self) -> Result<Scenario> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema",
                format!(
                    "unsupported schema version {} (expected {SCHEMA_VERSION})",
                    self.schema
                ),
            ));
        }
        let resources = Names::new("resource", self.resources.iter().map(|r| r.name.as_str()));
        let locations = Names::new("location", self.locations.iter().map(|l| l.name.as_str()));
        let mut facilities = vec![EDGE];
        facilities.extend(self.clouds.iter().map(|c| c.name.as_str()));
        let facilities = Names::new("facility", facilities);
        resources.check_unique("resources")?;
        locations.check_unique("locations")?;
        facilities.check_unique("clouds")?;
        let r_count = self.resources.len();
        let f_count = self.clouds.len() + 1;

        let terms = |path: &str, ts: &[EnergyTermDoc]| -> Result<Vec<EnergyTerm>> {
            ts.iter()
                .enumerate()
                .map(|(i, t)| {
                    let r = resources
                        .find(&format!("{path}.energy_terms[{i}].resource"), &t.resource)?;
                    Ok(EnergyTerm::new(r, t.coefficient, t.exponent))
                })
                .collect()
        };

        let mut locs = Vec::with_capacity(self.locations.len());
        for (l, doc) in self.locations.iter().enumerate() {
            let path = format!("locations[{l}]");
            let mut capacities = vec![None; r_count];
            for (name, &v) in &doc.capacities {
                let r = resources.find(&format!("{path}.capacities.{name}"), name)?;
                capacities[r] = Some(v);
            }
            locs.push(Location {
                name: doc.name.clone(),
                capacities,
                energy_limit: doc.energy_limit,
                energy_terms: terms(&path, &doc.energy_terms)?,
            });
        }
        let clouds = self
            .clouds
            .iter()
            .enumerate()
            .map(|(k, c)| {
                Ok(Cloud {
                    name: c.name.clone(),
                    energy_terms: terms(&format!("clouds[{k}]"), &c.energy_terms)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut sps = Vec::with_capacity(self.sps.len());
        for (s, doc) in self.sps.iter().enumerate() {
            let path = format!("sps[{s}]");
            let mut caps = vec![None; locs.len()];
            for (name, &v) in &doc.utility_caps {
                let l = locations.find(&format!("{path}.utility_caps.{name}"), name)?;
                caps[l] = Some(v);
            }
            let mut demand = vec![0.0; locs.len() * f_count * r_count];
            let mut seen = vec![false; locs.len() * f_count];
            for (i, entry) in doc.demands.iter().enumerate() {
                let epath = format!("{path}.demands[{i}]");
                let l = locations.find(&format!("{epath}.location"), &entry.location)?;
                let c = facilities.find(&format!("{epath}.facility"), &entry.facility)?;
                let o = l * f_count + c;
                if seen[o] {
                    return Err(Error::schema(
                        epath,
                        format!(
                            "duplicate demand for ({}, {})",
                            entry.location, entry.facility
                        ),
                    ));
                }
                seen[o] = true;
                for (name, &v) in &entry.demand {
                    let r = resources.find(&format!("{epath}.demand.{name}"), name)?;
                    demand[o * r_count + r] = v;
                }
            }
            sps.push(ServiceProvider {
                name: doc.name.clone(),
                budget: doc.budget,
                demand,
                utility_caps: caps,
            });
        }
        let scenario = Scenario {
            resources: self.resources.clone(),
            locations: locs,
            clouds,
            sps,
            global_energy_limit: self.global_energy_limit,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::schema(path.display().to_string(), e.to_string()))
}

pub fn scenario_to_json(sc: &Scenario) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ScenarioDoc::from_scenario(
        sc,
    ))?)
}

pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc =
        serde_json::from_str(text).map_err(|e| Error::schema("scenario", e.to_string()))?;
    doc.build()
}

pub fn read_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let doc: ScenarioDoc = parse_json(path, &read_text(path)?)?;
    doc.build()
}

pub fn write_scenario(path: impl AsRef<Path>, sc: &Scenario) -> Result<()> {
    fs::write(path, scenario_to_json(sc)? + "\n")?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsDoc {
    pub status: Status,
    pub iterations: usize,
    pub max_kkt_residual: f64,
    pub kkt: KktResiduals,
    pub barrier_weight: f64,
}

/// Solution document. Tensors are nested `s/l/c/r` (allocation), `s/l/c`
/// (rates, rate prices) and `l/c/r` (prices).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDoc {
    pub schema: u32,
    pub scheme: Scheme,
    pub objective: f64,
    pub utilities: Vec<f64>,
    pub allocation: Vec<Vec<Vec<Vec<f64>>>>,
    pub rates: Vec<Vec<Vec<f64>>>,
    pub prices: Vec<Vec<Vec<f64>>>,
    pub rate_prices: Vec<Vec<Vec<f64>>>,
    pub multipliers: Multipliers,
    pub diagnostics: DiagnosticsDoc,
}

fn nest(flat: &[f64], outer: usize, inner: usize) -> Vec<Vec<f64>> {
    (0..outer)
        .map(|i| flat[i * inner..(i + 1) * inner].to_vec())
        .collect()
}

fn flatten<'a>(
    path: &str,
    rows: impl Iterator<Item = &'a Vec<f64>>,
    expected: usize,
) -> Result<Vec<f64>> {
    let flat: Vec<f64> = rows.flatten().copied().collect();
    if flat.len() != expected {
        return Err(Error::schema(
            path,
            format!("expected {expected} numbers, found {}", flat.len()),
        ));
    }
    Ok(flat)
}

fn round_all(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| round9(x)).collect()
}

impl SolutionDoc {
    pub fn from_solution(sol: &EquilibriumSolution, sc: &Scenario) -> Self {
        let d = sc.dims();
        let f = d.facilities;
        let r = d.resources;
        let m = &sol.prices.multipliers;
        let per_site = |flat: &[f64]| nest(&round_all(flat), d.locations * f, r);
        let by_location = |rows: Vec<Vec<f64>>| -> Vec<Vec<Vec<f64>>> {
            rows.chunks(f).map(|c| c.to_vec()).collect()
        };
        Self {
            schema: SCHEMA_VERSION,
            scheme: sol.scheme,
            objective: round9(sol.objective),
            utilities: round_all(&sol.utilities),
            allocation: sol
                .allocation
                .bundles
                .iter()
                .map(|x| by_location(per_site(x)))
                .collect(),
            rates: sol
                .allocation
                .rates
                .iter()
                .map(|u| nest(&round_all(u), d.locations, f))
                .collect(),
            prices: by_location(per_site(&sol.prices.prices)),
            rate_prices: sol
                .prices
                .rate_prices
                .iter()
                .map(|q| nest(&round_all(q), d.locations, f))
                .collect(),
            multipliers: Multipliers {
                capacity: m.capacity.iter().map(|row| round_all(row)).collect(),
                local_energy: round_all(&m.local_energy),
                global_energy: round9(m.global_energy),
                utility_caps: m.utility_caps.iter().map(|row| round_all(row)).collect(),
            },
            diagnostics: DiagnosticsDoc {
                status: sol.diagnostics.status,
                iterations: sol.diagnostics.iterations,
                max_kkt_residual: sol.diagnostics.max_kkt_residual,
                kkt: sol.diagnostics.kkt,
                barrier_weight: sol.diagnostics.barrier_weight,
            },
        }
    }

    /// Rebuilds a solution against its scenario. Prices are taken as
    /// written, so a tampered document is caught by verification.
    pub fn into_solution(self, sc: &Scenario) -> Result<EquilibriumSolution> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema",
                format!(
                    "unsupported schema version {} (expected {SCHEMA_VERSION})",
                    self.schema
                ),
            ));
        }
        let d = sc.dims();
        let n = sc.sps.len();
        if self.allocation.len() != n {
            return Err(Error::schema(
                "allocation",
                format!("expected {n} SPs, found {}", self.allocation.len()),
            ));
        }
        let bundles = self
            .allocation
            .iter()
            .enumerate()
            .map(|(s, x)| flatten(&format!("allocation[{s}]"), x.iter().flatten(), d.coords()))
            .collect::<Result<Vec<_>>>()?;
        let prices = flatten("prices", self.prices.iter().flatten(), d.coords())?;
        let m = self.multipliers;
        let shape_ok = m.capacity.len() == d.locations
            && m.capacity.iter().all(|row| row.len() == d.resources)
            && m.local_energy.len() == d.locations
            && m.utility_caps.len() == n
            && m.utility_caps.iter().all(|row| row.len() == d.locations);
        if !shape_ok {
            return Err(Error::schema(
                "multipliers",
                "shape does not match scenario",
            ));
        }
        let allocation = Allocation::from_bundles(sc, bundles)?;
        let rate_prices = sc
            .sps
            .iter()
            .map(|sp| rate_prices_for(&prices, &sp.demand, d.resources))
            .collect();
        Ok(EquilibriumSolution {
            scheme: self.scheme,
            utilities: allocation.utilities(),
            allocation,
            prices: PriceSystem {
                prices,
                multipliers: m,
                rate_prices,
            },
            objective: self.objective,
            diagnostics: Diagnostics {
                status: self.diagnostics.status,
                iterations: self.diagnostics.iterations,
                max_kkt_residual: self.diagnostics.max_kkt_residual,
                kkt: self.diagnostics.kkt,
                barrier_weight: self.diagnostics.barrier_weight,
            },
        })
    }
}

pub fn solution_to_json(sol: &EquilibriumSolution, sc: &Scenario) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SolutionDoc::from_solution(
        sol, sc,
    ))?)
}

pub fn solution_from_json(text: &str, sc: &Scenario) -> Result<EquilibriumSolution> {
    let doc: SolutionDoc =
        serde_json::from_str(text).map_err(|e| Error::schema("solution", e.to_string()))?;
    doc.into_solution(sc)
}

pub fn read_solution(path: impl AsRef<Path>, sc: &Scenario) -> Result<EquilibriumSolution> {
    let path = path.as_ref();
    let doc: SolutionDoc = parse_json(path, &read_text(path)?)?;
    doc.into_solution(sc)
}

pub fn write_solution(
    path: impl AsRef<Path>,
    sol: &EquilibriumSolution,
    sc: &Scenario,
) -> Result<()> {
    fs::write(path, solution_to_json(sol, sc)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{table1_scenario, PresetOptions};

    #[test]
    fn nine_digits() {
        assert_eq!(sig9(0.1 + 0.2), "0.3");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(123456789012.0), "123456789000");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(2.004763381e-12), "2.00476338e-12");
        assert_eq!(sig9(-0.00012), "-0.00012");
    }

    #[test]
    fn scenario_round_trip() {
        let sc = table1_scenario(&PresetOptions::default()).unwrap();
        let back = scenario_from_json(&scenario_to_json(&sc).unwrap()).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn omitted_limits_are_unconstrained() {
        let text = r#"{
            "schema": 1,
            "resources": [{"name": "cpu", "kind": "compute", "unit": "vCPU"}],
            "locations": [{"name": "a", "capacities": {"cpu": 10}}],
            "sps": [{"name": "s", "budget": 1,
                     "demands": [{"location": "a", "facility": "edge", "demand": {"cpu": 1}}]}]
        }"#;
        let sc = scenario_from_json(text).unwrap();
        assert_eq!(sc.locations[0].energy_limit, None);
        assert_eq!(sc.global_energy_limit, None);
        assert_eq!(sc.locations[0].capacities, vec![Some(10.0)]);
    }

    #[test]
    fn unknown_names_carry_a_path() {
        let text = r#"{
            "schema": 1,
            "resources": [{"name": "cpu", "kind": "compute", "unit": "vCPU"}],
            "locations": [{"name": "a", "capacities": {"cpu": 10}}],
            "sps": [{"name": "s", "budget": 1,
                     "demands": [{"location": "a", "facility": "far", "demand": {"cpu": 1}}]}]
        }"#;
        let err = scenario_from_json(text).unwrap_err().to_string();
        assert!(err.contains("sps[0].demands[0].facility"), "{err}");
    }

    #[test]
    fn wrong_schema_version() {
        let text = r#"{"schema": 2, "resources": [], "locations": [], "sps": []}"#;
        assert!(scenario_from_json(text)
            .unwrap_err()
            .to_string()
            .contains("schema"));
    }
}
