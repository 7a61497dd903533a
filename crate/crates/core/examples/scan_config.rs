//! A full scan driven by an in-memory config: energies, derivatives and a
//! log-divergence fit, reported as JSON.

use qbattery::scan::{run, RunConfig};

const CONFIG: &str = r#"{
  "model": "dirac2d",
  "scan": { "start": -2.5, "stop": -1.5, "steps": 4000 },
  "delta": 2.0,
  "constants": { "cutoff": 10.0 },
  "analysis": [ { "kind": "log_divergence", "location": -2.0 } ]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RunConfig::from_json(CONFIG)?;
    let outcome = run(&config)?;
    let csv = outcome.series[0].to_csv();
    println!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("...");
    println!("{}", outcome.summary_json());
    Ok(())
}
