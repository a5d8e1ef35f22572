//! Build a scenario from a JSON document: one location, one cloud, a capped
//! SP, and a quadratic CPU energy curve. Solve it both ways and print the
//! solution document.

use edgemarket::io::{scenario_from_json, solution_to_json};
use edgemarket::market::{solve, MarketOptions, Scheme};
use edgemarket::verifier::{verify, DEFAULT_TOLERANCE};

const SCENARIO: &str = r#"{
  "schema": 1,
  "resources": [
    { "name": "cpu", "kind": "compute", "unit": "vCPU" },
    { "name": "radio", "kind": "access", "unit": "Mbps" }
  ],
  "locations": [{
    "name": "campus",
    "capacities": { "cpu": 16, "radio": 200 },
    "energy_limit": 20,
    "energy_terms": [
      { "resource": "cpu", "coefficient": 0.1, "exponent": 2 },
      { "resource": "radio", "coefficient": 0.02, "exponent": 1 }
    ]
  }],
  "clouds": [{
    "name": "region",
    "energy_terms": [{ "resource": "cpu", "coefficient": 0.05, "exponent": 1 }]
  }],
  "global_energy_limit": 30,
  "sps": [
    {
      "name": "video",
      "budget": 2,
      "demands": [
        { "location": "campus", "facility": "edge", "demand": { "cpu": 1, "radio": 20 } },
        { "location": "campus", "facility": "region", "demand": { "cpu": 1, "radio": 25 } }
      ]
    },
    {
      "name": "analytics",
      "budget": 1,
      "utility_caps": { "campus": 3 },
      "demands": [
        { "location": "campus", "facility": "edge", "demand": { "cpu": 4, "radio": 2 } },
        { "location": "campus", "facility": "region", "demand": { "cpu": 4, "radio": 3 } }
      ]
    }
  ]
}"#;

fn main() -> edgemarket::Result<()> {
    let sc = scenario_from_json(SCENARIO)?;
    let opts = MarketOptions::default();
    for scheme in [Scheme::Fm, Scheme::So] {
        let sol = solve(&sc, scheme, &opts)?;
        println!("{}: utilities {:?}", scheme.label(), sol.utilities);
        if scheme == Scheme::Fm {
            println!("certified: {}", verify(&sol, &sc, DEFAULT_TOLERANCE)?.pass);
            println!("{}", solution_to_json(&sol, &sc)?);
        }
    }
    Ok(())
}
