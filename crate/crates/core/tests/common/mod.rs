#![allow(dead_code)]

use edgemarket::model::{
    aggregate_usage, Allocation, Cloud, EnergyTerm, Location, Resource, ResourceKind, Scenario,
    ServiceProvider,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn cpu() -> Resource {
    Resource {
        name: "cpu".into(),
        kind: ResourceKind::Compute,
        unit: "vCPU".into(),
    }
}

pub fn radio() -> Resource {
    Resource {
        name: "radio".into(),
        kind: ResourceKind::Access,
        unit: "Mbps".into(),
    }
}

/// One location, one edge CPU resource with energy `x^beta`.
pub fn single_site(
    demands: &[f64],
    budgets: &[f64],
    capacity: Option<f64>,
    energy: Option<(f64, f64)>,
) -> Scenario {
    let (terms, limit) = match energy {
        Some((beta, limit)) => (vec![EnergyTerm::new(0, 1.0, beta)], Some(limit)),
        None => (vec![], None),
    };
    Scenario {
        resources: vec![cpu()],
        locations: vec![Location {
            name: "l0".into(),
            capacities: vec![capacity],
            energy_limit: limit,
            energy_terms: terms,
        }],
        clouds: vec![],
        sps: demands
            .iter()
            .zip(budgets)
            .enumerate()
            .map(|(i, (&d, &b))| ServiceProvider {
                name: format!("s{i}"),
                budget: b,
                demand: vec![d],
                utility_caps: vec![None],
            })
            .collect(),
        global_energy_limit: None,
    }
}

/// u = 4, mu = 0.25, p = 0.25
pub fn energy_bound() -> Scenario {
    single_site(&[1.0], &[1.0], Some(10.0), Some((1.0, 4.0)))
}

/// u = (1, 1), gamma = 1, p = 1
pub fn shared_capacity() -> Scenario {
    single_site(&[1.0, 1.0], &[1.0, 1.0], Some(2.0), None)
}

/// u = 2, mu = 0.125, p = 0.5
pub fn quadratic_energy() -> Scenario {
    single_site(&[1.0], &[1.0], None, Some((2.0, 4.0)))
}

/// FM (1, 0.5) against SO (2, 0).
pub fn asymmetric() -> Scenario {
    single_site(&[1.0, 2.0], &[1.0, 1.0], Some(2.0), None)
}

/// Random market with at most three rate variables: one location with a
/// CPU and a radio resource, an optional cloud, and one to three SPs.
pub fn random_small(rng: &mut ChaCha8Rng) -> Scenario {
    let clouds = rng.gen_range(0..=1usize);
    let max_sps = if clouds == 1 { 1 } else { 3 };
    let n = rng.gen_range(1..=max_sps);
    let facilities = 1 + clouds;
    let beta = |rng: &mut ChaCha8Rng| 1.0 + 2.0 * rng.gen::<f64>();
    let location = Location {
        name: "l0".into(),
        capacities: vec![
            Some(rng.gen_range(1.0..4.0)),
            if rng.gen_bool(0.5) {
                Some(rng.gen_range(1.0..4.0))
            } else {
                None
            },
        ],
        energy_limit: Some(rng.gen_range(0.5..3.0)),
        energy_terms: vec![
            EnergyTerm::new(0, rng.gen_range(0.2..1.0), beta(rng)),
            EnergyTerm::new(1, rng.gen_range(0.0..0.3), beta(rng)),
        ],
    };
    let cloud_list = (0..clouds)
        .map(|k| Cloud {
            name: format!("c{}", k + 1),
            energy_terms: vec![EnergyTerm::new(0, rng.gen_range(0.5..1.5), beta(rng))],
        })
        .collect();
    let sps = (0..n)
        .map(|i| {
            let mut demand = Vec::new();
            for _ in 0..facilities {
                demand.push(rng.gen_range(0.5..2.0));
                demand.push(rng.gen_range(0.2..1.5));
            }
            ServiceProvider {
                name: format!("s{i}"),
                budget: rng.gen_range(0.2..2.0),
                demand,
                utility_caps: vec![None],
            }
        })
        .collect();
    Scenario {
        resources: vec![cpu(), radio()],
        locations: vec![location],
        clouds: cloud_list,
        sps,
        global_energy_limit: if clouds == 1 {
            Some(rng.gen_range(1.0..4.0))
        } else {
            None
        },
    }
}

/// Rate variables `(sp, option)` of a scenario in a fixed order.
pub fn rate_variables(sc: &Scenario) -> Vec<(usize, usize)> {
    let dims = sc.dims();
    (0..sc.sps.len())
        .flat_map(|s| (0..dims.options()).map(move |o| (s, o)))
        .collect()
}

pub fn feasible(sc: &Scenario, vars: &[(usize, usize)], u: &[f64]) -> bool {
    let dims = sc.dims();
    let mut rates = vec![vec![0.0; dims.options()]; sc.sps.len()];
    for (&(s, o), &v) in vars.iter().zip(u) {
        rates[s][o] = v;
    }
    let alloc = Allocation::from_rates(sc, rates).expect("rates match scenario");
    let usage = aggregate_usage(&alloc, sc).expect("allocation matches scenario");
    let eps = 1e-12;
    for (l, loc) in sc.locations.iter().enumerate() {
        for (r, cap) in loc.capacities.iter().enumerate() {
            if let Some(cap) = cap {
                if usage.local[l][r] > cap + eps {
                    return false;
                }
            }
        }
        if let Some(e) = loc.energy_limit {
            if usage.local_energy[l] > e + eps {
                return false;
            }
        }
    }
    match sc.global_energy_limit {
        Some(e) => usage.total_energy <= e + eps,
        None => true,
    }
}

fn eg_value(sc: &Scenario, vars: &[(usize, usize)], u: &[f64]) -> f64 {
    let mut util = vec![0.0; sc.sps.len()];
    for (&(s, _), &v) in vars.iter().zip(u) {
        util[s] += v;
    }
    sc.sps
        .iter()
        .zip(&util)
        .map(|(sp, &x)| sp.budget * x.ln())
        .sum()
}

/// Largest feasible value of the last variable given the others, by bisection.
fn fill_last(sc: &Scenario, vars: &[(usize, usize)], u: &mut [f64], hi: f64) {
    let k = u.len() - 1;
    u[k] = 0.0;
    if !feasible(sc, vars, u) {
        u[k] = f64::NAN;
        return;
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..48 {
        let mid = 0.5 * (lo + up);
        u[k] = mid;
        if feasible(sc, vars, u) {
            lo = mid;
        } else {
            up = mid;
        }
    }
    u[k] = lo;
}

/// Largest feasible value of a single variable with the others at zero.
fn standalone(sc: &Scenario, vars: &[(usize, usize)], i: usize) -> f64 {
    let mut u = vec![0.0; vars.len()];
    let mut hi = 1.0;
    loop {
        u[i] = hi;
        if !feasible(sc, vars, &u) {
            break;
        }
        hi *= 2.0;
        assert!(hi < 1e9, "variable {i} is unbounded");
    }
    hi
}

/// Grid search of the EG objective: the leading variables run over a grid
/// with step `step` and the last one is pushed to the boundary, which is
/// optimal because the objective increases in every rate. A coarse pass
/// locates the maximizer and finer passes zoom in down to `step`.
pub fn grid_search_eg(sc: &Scenario, step: f64) -> (f64, Vec<f64>) {
    let vars = rate_variables(sc);
    let n = vars.len();
    assert!((1..=3).contains(&n), "grid oracle handles 1 to 3 variables");
    let bounds: Vec<f64> = (0..n).map(|i| standalone(sc, &vars, i)).collect();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let scan = |lo: &[f64], hi: &[f64], h: f64, best: &mut (f64, Vec<f64>)| {
        let counts: Vec<usize> = (0..n - 1)
            .map(|i| ((hi[i] - lo[i]) / h).floor() as usize + 1)
            .collect();
        let total: usize = counts.iter().product();
        let mut u = vec![0.0; n];
        for mut idx in 0..total {
            for i in 0..n - 1 {
                u[i] = lo[i] + h * (idx % counts[i]) as f64;
                idx /= counts[i];
            }
            fill_last(sc, &vars, &mut u, bounds[n - 1]);
            if u[n - 1].is_nan() {
                continue;
            }
            let v = eg_value(sc, &vars, &u);
            if v > best.0 {
                *best = (v, u.clone());
            }
        }
    };
    let mut h = bounds
        .iter()
        .take(n - 1)
        .fold(step, |a, &b| a.max(b / 50.0));
    scan(&vec![0.0; n], &bounds, h, &mut best);
    while h > step {
        let next = (h / 10.0).max(step);
        let centre = best.1.clone();
        let lo: Vec<f64> = centre.iter().map(|c| (c - 3.0 * h).max(0.0)).collect();
        let hi: Vec<f64> = centre
            .iter()
            .zip(&bounds)
            .map(|(c, b)| (c + 3.0 * h).min(*b))
            .collect();
        h = next;
        scan(&lo, &hi, h, &mut best);
    }
    best
}

/// Scales every demand by a factor in `[1 - spread, 1 + spread]`, and every
/// finite capacity and energy limit likewise.
pub fn perturb(base: &Scenario, rng: &mut ChaCha8Rng, spread: f64) -> Scenario {
    let mut sc = base.clone();
    let f = |rng: &mut ChaCha8Rng| 1.0 + spread * (2.0 * rng.gen::<f64>() - 1.0);
    for sp in &mut sc.sps {
        for d in &mut sp.demand {
            *d *= f(rng);
        }
    }
    for loc in &mut sc.locations {
        for cap in loc.capacities.iter_mut().flatten() {
            *cap *= f(rng);
        }
        if let Some(e) = &mut loc.energy_limit {
            *e *= f(rng);
        }
    }
    if let Some(e) = &mut sc.global_energy_limit {
        *e *= f(rng);
    }
    sc
}
