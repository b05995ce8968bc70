// Loads the bundled config, then shows every violation in a broken one.
//
// `cargo run --example config_check`

use engage::config::EngineConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = EngineConfig::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/config/default.conf"))?;
    println!("default.conf ok: window {}, dwell {}, majority {}", cfg.window, cfg.dwell, cfg.majority);

    let broken = "window = 4\ndwell = 6\nmajority = 0.5\nattention_cone = abc\nneutral.attentive = engage\n";
    match EngineConfig::parse(broken) {
        Ok(_) => println!("unexpectedly valid"),
        Err(report) => {
            println!("{} problems:", report.violations.len());
            for v in &report.violations {
                println!("  {v}");
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
