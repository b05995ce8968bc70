// Runs the bundled two-person demo scenario and summarizes the report.
//
// `cargo run --example simulate_scenario [path/to/scenario.toml]`

use engage::config::EngineConfig;
use engage::simulator::{run_scenario, Scenario};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let default = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/demo.toml").to_string();
    let path = std::env::args().nth(1).filter(|a| a.ends_with(".toml")).unwrap_or(default);
    let sc = Scenario::from_file(&path)?;
    let report = run_scenario(&sc, &EngineConfig::default())?;

    let m = &report.metrics;
    println!("{} frames, {} commands", report.frames, report.commands.len());
    println!(
        "switches {}, reaction delay mean {:.1} / max {} frames, agreement {:.3}, flickers {}",
        m.switch_count,
        m.mean_reaction_delay_frames,
        m.max_reaction_delay_frames,
        m.agreement_fraction,
        m.flicker_count
    );
    for track in &report.tracks {
        let path: Vec<String> = track
            .timeline
            .iter()
            .map(|e| format!("{:.2}s {}", e.t, e.strategy.map(|s| s.name()).unwrap_or("-")))
            .collect();
        println!("track {}: {} (greeted {}x)", track.track_id, path.join(" -> "), track.speak_count);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
