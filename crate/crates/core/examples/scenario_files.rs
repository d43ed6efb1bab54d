//! Writes the built-in scenarios as JSON files that `vhmpc run --scenario`
//! accepts, then loads them back.
//!
//!     cargo run --example scenario_files -- <dir>

use std::path::PathBuf;

use vhmpc::scenario::{load_scenario, ScenarioFile};
use vhmpc::{make_default_rendezvous, make_double_integrator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map_or_else(|| PathBuf::from("scenarios"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;
    for scenario in [make_double_integrator(), make_default_rendezvous()] {
        let file = ScenarioFile::from_scenario(&scenario)?;
        let path = dir.join(format!("{}.json", scenario.name));
        std::fs::write(&path, serde_json::to_string_pretty(&file)? + "\n")?;
        let loaded = load_scenario(&path)?;
        assert_eq!(loaded, scenario);
        println!(
            "{}: {} states, {} inputs -> {}",
            scenario.name,
            scenario.state_dim(),
            scenario.input_dim(),
            path.display()
        );
    }
    Ok(())
}
