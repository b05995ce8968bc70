// Parsing event lines, rejecting bad ones, and emitting command lines.
//
// `cargo run --example protocol_roundtrip`

use engage::protocol::{emit_command, emit_event, parse_command, parse_event};
use engage::Engine;

const GOOD: &str = r#"{"t":0.5,"track_id":3,"bbox":[0.5,0.5,0.12,0.12],"yaw":0,"pitch":0,"roll":0,"emotions":{"neutral":0.1,"happy":0.8,"disgust":0,"fear":0,"surprise":0.1,"anger":0,"sadness":0},"valence":0.6,"arousal":0.3}"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let obs = parse_event(GOOD)?;
    println!("parsed track {} at t={} (top class {:?})", obs.track_id, obs.timestamp, obs.emotions.argmax());
    println!("re-emitted: {}", emit_event(&obs));

    for bad in [r#"{"t":1.0}"#, "not json", &GOOD.replace("\"yaw\":0", "\"yaw\":120")] {
        match parse_event(bad) {
            Ok(_) => println!("unexpectedly accepted {bad}"),
            Err(e) => println!("rejected: {e}"),
        }
    }

    let mut engine = Engine::new(Default::default());
    engine.observe(&obs)?;
    for cmd in engine.decide(obs.timestamp) {
        let line = emit_command(&cmd);
        assert_eq!(parse_command(&line)?, cmd);
        println!("{line}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
