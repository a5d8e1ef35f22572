//! Preset scenarios and parameter sweeps.
//!
//! The presets follow four service classes (BW-, CPU-, RAM-intensive and
//! Balanced) over two locations and two clouds. Capacities, limits and
//! energy coefficients are calibration constants, see [`Calibration`].

use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::sig9;
use crate::market::{solve, EquilibriumSolution, MarketOptions, Scheme};
use crate::model::{
    Cloud, EnergyTerm, Location, Resource, ResourceKind, Scenario, ServiceProvider,
};
use crate::verifier::{verify, verify_c2, DEFAULT_TOLERANCE};

pub const CPU: usize = 0;
pub const RAM: usize = 1;
pub const RADIO: usize = 2;

/// Service classes with their `(cpu, ram, radio)` demand ranges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ServiceClass {
    BwIntensive,
    CpuIntensive,
    RamIntensive,
    Balanced,
}

impl ServiceClass {
    pub const ALL: [ServiceClass; 4] = [
        ServiceClass::BwIntensive,
        ServiceClass::CpuIntensive,
        ServiceClass::RamIntensive,
        ServiceClass::Balanced,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ServiceClass::BwIntensive => "bw-intensive",
            ServiceClass::CpuIntensive => "cpu-intensive",
            ServiceClass::RamIntensive => "ram-intensive",
            ServiceClass::Balanced => "balanced",
        }
    }

    /// `[(lo, hi); 3]` in `(cpu, ram, radio)` order; radio in Mbps.
    pub fn ranges(self) -> [(f64, f64); 3] {
        match self {
            ServiceClass::BwIntensive => [(2.0, 4.0), (8.0, 12.0), (300.0, 492.0)],
            ServiceClass::CpuIntensive => [(30.0, 36.0), (6.0, 8.0), (50.0, 70.0)],
            ServiceClass::RamIntensive => [(2.0, 4.0), (28.0, 32.0), (50.0, 70.0)],
            ServiceClass::Balanced => [(2.0, 4.0), (3.5, 4.0), (50.0, 70.0)],
        }
    }
}

/// How a concrete demand vector is picked from a class's ranges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemandRule {
    #[default]
    Midpoint,
    Low,
    High,
    /// Uniform within each range, reproducible from the seed.
    Sampled(u64),
}

impl FromStr for DemandRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "midpoint" => Ok(Self::Midpoint),
            "low" => Ok(Self::Low),
            "high" => Ok(Self::High),
            _ => match s.strip_prefix("sampled:") {
                Some(seed) => seed
                    .parse()
                    .map(Self::Sampled)
                    .map_err(|e| format!("bad seed '{seed}': {e}")),
                None => Err(format!(
                    "unknown demand rule '{s}' (expected midpoint, low, high or sampled:SEED)"
                )),
            },
        }
    }
}

impl DemandRule {
    /// Base edge demand per class, in class order.
    pub fn demands(self, classes: &[ServiceClass]) -> Vec<[f64; 3]> {
        let mut rng = match self {
            DemandRule::Sampled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        classes
            .iter()
            .map(|class| {
                class.ranges().map(|(lo, hi)| match self {
                    DemandRule::Midpoint => 0.5 * (lo + hi),
                    DemandRule::Low => lo,
                    DemandRule::High => hi,
                    DemandRule::Sampled(_) => rng.as_mut().map_or(lo, |r| r.gen_range(lo..=hi)),
                })
            })
            .collect()
    }
}

/// Constants not given by the service-class table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Per-location capacities in `(cpu, ram, radio)` order.
    pub capacities: [f64; 3],
    pub local_energy_limit: f64,
    pub global_energy_limit: f64,
    /// Energy per unit at exponent 1: `(cpu, ram, radio)`.
    pub coefficients: [f64; 3],
    /// Cloud CPU energy coefficient.
    pub cloud_cpu_coefficient: f64,
    /// Radio demand multiplier for cloud 1, cloud 2, ...
    pub cloud_radio_penalty: Vec<f64>,
    pub locations: usize,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            capacities: [64.0, 128.0, 1000.0],
            local_energy_limit: 50.0,
            global_energy_limit: 150.0,
            coefficients: [0.5, 0.0, 0.1],
            cloud_cpu_coefficient: 3e-4,
            cloud_radio_penalty: vec![1.25, 1.5],
            locations: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PresetOptions {
    pub demand_rule: DemandRule,
    pub calibration: Calibration,
    /// Budgets per SP; equal shares of 1 when absent.
    pub budgets: Option<Vec<f64>>,
}

impl PresetOptions {
    pub fn with_rule(demand_rule: DemandRule) -> Self {
        Self {
            demand_rule,
            ..Self::default()
        }
    }
}

fn resources() -> Vec<Resource> {
    let r = |name: &str, kind, unit: &str| Resource {
        name: name.into(),
        kind,
        unit: unit.into(),
    };
    vec![
        r("cpu", ResourceKind::Compute, "vCPU"),
        r("ram", ResourceKind::Compute, "GB"),
        r("radio", ResourceKind::Access, "Mbps"),
    ]
}

/// Scenario for the given classes under the preset options.
pub fn class_scenario(classes: &[ServiceClass], opts: &PresetOptions) -> Result<Scenario> {
    let cal = &opts.calibration;
    let [a_cpu, a_ram, a_radio] = cal.coefficients;
    let local_terms = vec![
        EnergyTerm::new(CPU, a_cpu, 1.0),
        EnergyTerm::new(RAM, a_ram, 1.0),
        EnergyTerm::new(RADIO, a_radio, 1.0),
    ];
    let locations = (0..cal.locations)
        .map(|l| Location {
            name: format!("l{l}"),
            capacities: cal.capacities.iter().map(|&x| Some(x)).collect(),
            energy_limit: Some(cal.local_energy_limit),
            energy_terms: local_terms.clone(),
        })
        .collect();
    let clouds: Vec<Cloud> = (0..cal.cloud_radio_penalty.len())
        .map(|k| Cloud {
            name: format!("c{}", k + 1),
            energy_terms: vec![
                EnergyTerm::new(CPU, cal.cloud_cpu_coefficient, 1.0),
                EnergyTerm::new(RAM, a_ram, 1.0),
            ],
        })
        .collect();
    let budgets = match &opts.budgets {
        Some(b) if b.len() == classes.len() => b.clone(),
        Some(b) => {
            return Err(Error::Dimension(format!(
                "{} budgets for {} SPs",
                b.len(),
                classes.len()
            )))
        }
        None => vec![1.0 / classes.len() as f64; classes.len()],
    };
    let base = opts.demand_rule.demands(classes);
    let facilities = clouds.len() + 1;
    let sps = classes
        .iter()
        .zip(base)
        .zip(budgets)
        .map(|((class, d), budget)| {
            let mut demand = Vec::with_capacity(cal.locations * facilities * 3);
            for _ in 0..cal.locations {
                demand.extend_from_slice(&d);
                for &penalty in &cal.cloud_radio_penalty {
                    demand.extend_from_slice(&[d[CPU], d[RAM], d[RADIO] * penalty]);
                }
            }
            ServiceProvider {
                name: class.name().into(),
                budget,
                demand,
                utility_caps: vec![None; cal.locations],
            }
        })
        .collect();
    let scenario = Scenario {
        resources: resources(),
        locations,
        clouds,
        sps,
        global_energy_limit: Some(cal.global_energy_limit),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Four SPs, one per service class, with equal budgets.
pub fn table1_scenario(opts: &PresetOptions) -> Result<Scenario> {
    class_scenario(&ServiceClass::ALL, opts)
}

/// Radio-intensive and CPU-intensive SPs only.
pub fn two_sp_scenario(opts: &PresetOptions) -> Result<Scenario> {
    class_scenario(
        &[ServiceClass::BwIntensive, ServiceClass::CpuIntensive],
        opts,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepTarget {
    BetaCpu,
    BetaRadio,
    /// `β_cpu × β_radio` over the same range.
    BetaGrid,
    /// Budget of one SP; the others are rescaled to keep the total.
    Budget(usize),
    LocalEnergyLimit(usize),
}

impl SweepTarget {
    pub fn param(self) -> String {
        match self {
            SweepTarget::BetaCpu => "beta_cpu".into(),
            SweepTarget::BetaRadio => "beta_radio".into(),
            SweepTarget::BetaGrid => "beta_grid".into(),
            SweepTarget::Budget(s) => format!("budget:{s}"),
            SweepTarget::LocalEnergyLimit(l) => format!("elimit:{l}"),
        }
    }

    /// Usage columns are appended for energy-limit sweeps.
    pub fn reports_usage(self) -> bool {
        matches!(self, SweepTarget::LocalEnergyLimit(_))
    }
}

impl FromStr for SweepTarget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let norm = s.replace('β', "beta").replace('-', "_");
        match norm.as_str() {
            "beta_cpu" => return Ok(Self::BetaCpu),
            "beta_radio" => return Ok(Self::BetaRadio),
            "beta_grid" => return Ok(Self::BetaGrid),
            _ => {}
        }
        let index = |v: &str| {
            v.parse::<usize>()
                .map_err(|e| format!("bad index in '{s}': {e}"))
        };
        if let Some(v) = norm.strip_prefix("budget:") {
            return index(v).map(Self::Budget);
        }
        if let Some(v) = norm.strip_prefix("elimit:") {
            return index(v).map(Self::LocalEnergyLimit);
        }
        Err(format!(
            "unknown sweep target '{s}' (expected beta_cpu, beta_radio, beta_grid, budget:S or elimit:L)"
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSelection {
    Fm,
    So,
    Both,
}

impl SchemeSelection {
    pub fn schemes(self) -> &'static [Scheme] {
        match self {
            SchemeSelection::Fm => &[Scheme::Fm],
            SchemeSelection::So => &[Scheme::So],
            SchemeSelection::Both => &[Scheme::Fm, Scheme::So],
        }
    }
}

impl FromStr for SchemeSelection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fm" => Ok(Self::Fm),
            "so" => Ok(Self::So),
            "both" => Ok(Self::Both),
            _ => Err(format!("unknown scheme '{s}' (expected fm, so or both)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub target: SweepTarget,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub schemes: SchemeSelection,
}

impl SweepSpec {
    pub fn new(
        target: SweepTarget,
        from: f64,
        to: f64,
        steps: usize,
        schemes: SchemeSelection,
    ) -> Self {
        Self {
            target,
            from,
            to,
            steps,
            schemes,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.from < self.to) {
            return Err(Error::invalid("sweep.from", "must be below sweep.to"));
        }
        if self.steps < 2 {
            return Err(Error::invalid("sweep.steps", "need at least 2 steps"));
        }
        Ok(())
    }

    /// Evenly spaced values from `from` to `to` inclusive.
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == n {
                    self.to
                } else {
                    self.from + (self.to - self.from) * i as f64 / n as f64
                }
            })
            .collect()
    }

    /// Swept points: one coordinate, or `(β_cpu, β_radio)` for grids.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let v = self.values();
        match self.target {
            SweepTarget::BetaGrid => v
                .iter()
                .flat_map(|&a| v.iter().map(move |&b| vec![a, b]))
                .collect(),
            _ => v.into_iter().map(|x| vec![x]).collect(),
        }
    }
}

fn set_exponent(scenario: &mut Scenario, resource: usize, beta: f64) {
    let terms = scenario
        .locations
        .iter_mut()
        .flat_map(|l| l.energy_terms.iter_mut())
        .chain(
            scenario
                .clouds
                .iter_mut()
                .flat_map(|c| c.energy_terms.iter_mut()),
        );
    for t in terms.filter(|t| t.resource == resource) {
        t.exponent = beta;
    }
}

/// Applies one sweep point to a copy of the base scenario.
pub fn apply_point(base: &Scenario, target: SweepTarget, point: &[f64]) -> Result<Scenario> {
    let mut sc = base.clone();
    let need = |name: &str| {
        base.resource_index(name)
            .ok_or_else(|| Error::invalid("resources", format!("sweep needs a '{name}' resource")))
    };
    match target {
        SweepTarget::BetaCpu => set_exponent(&mut sc, need("cpu")?, point[0]),
        SweepTarget::BetaRadio => set_exponent(&mut sc, need("radio")?, point[0]),
        SweepTarget::BetaGrid => {
            set_exponent(&mut sc, need("cpu")?, point[0]);
            set_exponent(&mut sc, need("radio")?, point[1]);
        }
        SweepTarget::Budget(s) => {
            if s >= sc.sps.len() {
                return Err(Error::invalid(format!("sps[{s}]"), "no such SP"));
            }
            let total: f64 = sc.sps.iter().map(|sp| sp.budget).sum();
            let others = total - sc.sps[s].budget;
            let rest = total - point[0];
            if !(rest > 0.0) || !(others > 0.0) {
                return Err(Error::invalid(
                    format!("sps[{s}].budget"),
                    format!("swept budget {} leaves nothing for the other SPs", point[0]),
                ));
            }
            for (t, sp) in sc.sps.iter_mut().enumerate() {
                sp.budget = if t == s {
                    point[0]
                } else {
                    sp.budget * rest / others
                };
            }
        }
        SweepTarget::LocalEnergyLimit(l) => {
            let loc = sc
                .locations
                .get_mut(l)
                .ok_or_else(|| Error::invalid(format!("locations[{l}]"), "no such location"))?;
            loc.energy_limit = Some(point[0]);
        }
    }
    Ok(sc)
}

/// Per-SP usage of edge CPU, cloud CPU and radio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpUsage {
    /// `[l]`: CPU at the edge facility of each location.
    pub edge_cpu: Vec<f64>,
    /// `[k]`: CPU at cloud `k + 1`, summed over locations.
    pub cloud_cpu: Vec<f64>,
    /// `[l]`: radio at each location, summed over destinations.
    pub radio: Vec<f64>,
}

pub fn sp_usage(solution: &EquilibriumSolution, scenario: &Scenario, s: usize) -> SpUsage {
    let dims = scenario.dims();
    let cpu = scenario.resource_index("cpu");
    let radio = scenario.resource_index("radio");
    let x = &solution.allocation.bundles[s];
    let at = |r: Option<usize>, l: usize, c: usize| r.map_or(0.0, |r| x[dims.coord(r, l, c)]);
    SpUsage {
        edge_cpu: (0..dims.locations).map(|l| at(cpu, l, 0)).collect(),
        cloud_cpu: (1..dims.facilities)
            .map(|c| (0..dims.locations).map(|l| at(cpu, l, c)).sum())
            .collect(),
        radio: (0..dims.locations)
            .map(|l| (0..dims.facilities).map(|c| at(radio, l, c)).sum())
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Swept values; two entries for grids.
    pub point: Vec<f64>,
    pub scheme: Scheme,
    pub utilities: Vec<f64>,
    pub total_utility: f64,
    pub lambda: f64,
    pub mu: Vec<f64>,
    pub gamma_max: f64,
    pub spend: Vec<f64>,
    pub usage: Vec<SpUsage>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn rows_for(&self, scheme: Scheme) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    pub fn header(&self) -> Vec<String> {
        let Some(first) = self.rows.first() else {
            return Vec::new();
        };
        let n = first.utilities.len();
        let mut h: Vec<String> = match self.spec.target {
            SweepTarget::BetaGrid => vec!["beta_cpu".into(), "beta_radio".into()],
            _ => vec!["param".into(), "value".into()],
        };
        h.push("scheme".into());
        h.extend((0..n).map(|s| format!("U_s{s}")));
        h.push("U_total".into());
        h.push("lambda".into());
        h.extend((0..first.mu.len()).map(|l| format!("mu_l{l}")));
        h.extend((0..n).map(|s| format!("spend_s{s}")));
        if self.spec.target.reports_usage() {
            let u = &first.usage[0];
            for s in 0..n {
                h.extend((0..u.edge_cpu.len()).map(|l| format!("edge_cpu_s{s}_l{l}")));
            }
            for s in 0..n {
                h.extend((0..u.cloud_cpu.len()).map(|k| format!("cloud_cpu_s{s}_c{}", k + 1)));
            }
            for s in 0..n {
                h.extend((0..u.radio.len()).map(|l| format!("radio_s{s}_l{l}")));
            }
        }
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let param = self.spec.target.param();
        for row in &self.rows {
            let mut rec: Vec<String> = match self.spec.target {
                SweepTarget::BetaGrid => row.point.iter().map(|&v| sig9(v)).collect(),
                _ => vec![param.clone(), sig9(row.point[0])],
            };
            rec.push(row.scheme.label().into());
            rec.extend(row.utilities.iter().map(|&v| sig9(v)));
            rec.push(sig9(row.total_utility));
            rec.push(sig9(row.lambda));
            rec.extend(row.mu.iter().map(|&v| sig9(v)));
            rec.extend(row.spend.iter().map(|&v| sig9(v)));
            if self.spec.target.reports_usage() {
                rec.extend(
                    row.usage
                        .iter()
                        .flat_map(|u| u.edge_cpu.iter().map(|&v| sig9(v))),
                );
                rec.extend(
                    row.usage
                        .iter()
                        .flat_map(|u| u.cloud_cpu.iter().map(|&v| sig9(v))),
                );
                rec.extend(
                    row.usage
                        .iter()
                        .flat_map(|u| u.radio.iter().map(|&v| sig9(v))),
                );
            }
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub market: MarketOptions,
    pub tolerance: f64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            market: MarketOptions::default(),
            tolerance: DEFAULT_TOLERANCE,
            jobs: None,
        }
    }
}

fn run_point(
    base: &Scenario,
    spec: &SweepSpec,
    point: &[f64],
    scheme: Scheme,
    opts: &SweepOptions,
) -> Result<SweepRow> {
    let param = spec.target.param();
    let value = point.iter().map(|&v| sig9(v)).collect::<Vec<_>>().join(",");
    let wrap = |e: Error| Error::SweepPoint {
        param: param.clone(),
        value: value.clone(),
        source: Box::new(e),
    };
    let sc = apply_point(base, spec.target, point).map_err(wrap)?;
    let sol = solve(&sc, scheme, &opts.market).map_err(wrap)?;
    // SO prices come from the same KKT system, so C2 applies; C1 does not
    let pass = match scheme {
        Scheme::Fm => verify(&sol, &sc, opts.tolerance).map_err(wrap)?.pass,
        Scheme::So => verify_c2(&sol, &sc, opts.tolerance).map_err(wrap)?.pass,
    };
    if !pass {
        return Err(Error::SweepVerification {
            param,
            value,
            detail: format!("{} solution failed verification", scheme.label()),
        });
    }
    let m = &sol.prices.multipliers;
    Ok(SweepRow {
        point: point.to_vec(),
        scheme,
        total_utility: sol.total_utility(),
        lambda: m.global_energy,
        mu: m.local_energy.clone(),
        gamma_max: m.capacity.iter().flatten().copied().fold(0.0, f64::max),
        spend: (0..sc.sps.len()).map(|s| sol.spend(s)).collect(),
        usage: (0..sc.sps.len()).map(|s| sp_usage(&sol, &sc, s)).collect(),
        utilities: sol.utilities,
    })
}

/// Runs every sweep point under the selected schemes and verifies each
/// solution. Rows are ordered by point, then scheme.
pub fn sweep(base: &Scenario, spec: &SweepSpec, opts: &SweepOptions) -> Result<SweepResult> {
    spec.check()?;
    base.validate()?;
    let jobs: Vec<(Vec<f64>, Scheme)> = spec
        .points()
        .into_iter()
        .flat_map(|p| spec.schemes.schemes().iter().map(move |&s| (p.clone(), s)))
        .collect();
    let run = || -> Result<Vec<SweepRow>> {
        jobs.par_iter()
            .map(|(p, s)| run_point(base, spec, p, *s, opts))
            .collect()
    };
    let rows = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid("jobs", e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_demands() {
        let d = DemandRule::Midpoint.demands(&ServiceClass::ALL);
        assert_eq!(d[1], [33.0, 7.0, 60.0]);
        assert_eq!(d[0], [3.0, 10.0, 396.0]);
    }

    #[test]
    fn low_rule_balanced() {
        let d = DemandRule::Low.demands(&[ServiceClass::Balanced]);
        assert_eq!(d[0], [2.0, 3.5, 50.0]);
    }

    #[test]
    fn sampled_rule_is_reproducible_and_in_range() {
        let a = DemandRule::Sampled(7).demands(&ServiceClass::ALL);
        assert_eq!(a, DemandRule::Sampled(7).demands(&ServiceClass::ALL));
        for (d, class) in a.iter().zip(ServiceClass::ALL) {
            for (x, (lo, hi)) in d.iter().zip(class.ranges()) {
                assert!(*x >= lo && *x <= hi);
            }
        }
    }

    #[test]
    fn four_class_preset_shape() {
        let sc = table1_scenario(&PresetOptions::default()).unwrap();
        let d = sc.dims();
        assert_eq!(
            (sc.sps.len(), d.locations, d.clouds(), d.resources),
            (4, 2, 2, 3)
        );
        assert!(sc.sps.iter().all(|sp| sp.budget == 0.25));
        // radio toward cloud 2 carries the proximity penalty
        let bw = &sc.sps[0];
        assert_eq!(bw.demand_at(d, 0, 2)[RADIO], 396.0 * 1.5);
        assert_eq!(bw.demand_at(d, 1, 1)[RADIO], 396.0 * 1.25);
    }

    #[test]
    fn two_sp_defaults() {
        let sc = two_sp_scenario(&PresetOptions::default()).unwrap();
        assert_eq!(sc.budgets(), vec![0.5, 0.5]);
        assert_eq!(sc.sps[0].demand_at(sc.dims(), 0, 0), &[3.0, 10.0, 396.0]);
    }

    #[test]
    fn budget_point_keeps_total() {
        let sc = two_sp_scenario(&PresetOptions::default()).unwrap();
        let p = apply_point(&sc, SweepTarget::Budget(0), &[0.1]).unwrap();
        assert!((p.sps[0].budget - 0.1).abs() < 1e-15);
        assert!((p.sps[1].budget - 0.9).abs() < 1e-15);
        assert!(apply_point(&sc, SweepTarget::Budget(0), &[1.0]).is_err());
    }

    #[test]
    fn targets_parse() {
        assert_eq!(
            "β_cpu".parse::<SweepTarget>().unwrap(),
            SweepTarget::BetaCpu
        );
        assert_eq!(
            "beta_radio".parse::<SweepTarget>().unwrap(),
            SweepTarget::BetaRadio
        );
        assert_eq!(
            "budget:1".parse::<SweepTarget>().unwrap(),
            SweepTarget::Budget(1)
        );
        assert_eq!(
            "elimit:0".parse::<SweepTarget>().unwrap(),
            SweepTarget::LocalEnergyLimit(0)
        );
        assert!("beta_ram".parse::<SweepTarget>().is_err());
    }

    #[test]
    fn grid_points() {
        let spec = SweepSpec::new(SweepTarget::BetaGrid, 1.0, 3.0, 5, SchemeSelection::Fm);
        let pts = spec.points();
        assert_eq!(pts.len(), 25);
        assert_eq!(pts[0], vec![1.0, 1.0]);
        assert_eq!(pts[24], vec![3.0, 3.0]);
    }
}
