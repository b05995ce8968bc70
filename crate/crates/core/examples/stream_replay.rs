// Replays synthesized perception through stream mode, in memory.
//
// `cargo run --example stream_replay`

use engage::config::EngineConfig;
use engage::protocol::emit_event;
use engage::simulator::{synthesize_events, Scenario};
use engage::stream::run_stream;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::from_file(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/demo.toml"))?;
    let cfg = EngineConfig::default();
    let mut input = String::new();
    for obs in synthesize_events(&sc, &cfg) {
        input.push_str(&emit_event(&obs));
        input.push('\n');
    }
    input.push_str("{\"t\": oops}\n");

    let (mut out, mut diag) = (Vec::new(), Vec::new());
    let summary = run_stream(input.as_bytes(), &mut out, &mut diag, &cfg)?;
    let out = String::from_utf8(out)?;
    for line in out.lines().filter(|l| l.contains("\"speak\"")) {
        println!("{line}");
    }
    print!("diagnostics: {}", String::from_utf8(diag)?);
    println!("{}", summary.to_line());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
