//! Scenarios are plain JSON. This one hand-writes a qubit driven by
//! `H = σx / 2` for one time unit and then observed along z.

use physim::scenarios::{run_scenario, ScenarioConfig};

const CONFIG: &str = r#"{
  "name": "rabi",
  "factor_dims": [2],
  "initial_state": [[1, 0], [0, 0]],
  "hamiltonian": [[[0, 0], [0.5, 0]], [[0.5, 0], [0, 0]]],
  "events": [
    {"time": 1.0, "name": "z", "candidates": {"observable": {"factor": 0, "axis_deg": 0}}}
  ],
  "mode": "free",
  "trials": 10000,
  "seed": 5
}"#;

fn main() -> physim::Result<()> {
    let config = ScenarioConfig::from_json(CONFIG)?;
    let stats = run_scenario(&config)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    println!("expected P(up) = cos²(½) = {:.6}", 0.5f64.cos().powi(2));
    Ok(())
}
