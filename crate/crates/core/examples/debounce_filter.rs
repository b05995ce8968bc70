// The sentiment filter riding out single-frame flicker and switching on a
// sustained change.
//
// `cargo run --example debounce_filter`

use engage::config::EngineConfig;
use engage::sentiment::{Polarity, SentimentState, TrackState};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = EngineConfig::default();
    let happy = SentimentState::new(Polarity::Positive, true);
    let angry = SentimentState::new(Polarity::NegativeStrong, true);
    let bored = SentimentState::new(Polarity::Neutral, false);

    let mut raw = vec![happy; 30];
    raw[12] = angry;
    raw[20] = bored;
    raw.extend(std::iter::repeat_n(angry, 20));

    let mut track = TrackState::new(1);
    let mut last = None;
    for (frame, sample) in raw.into_iter().enumerate() {
        let filtered = track.push(sample, frame as f64 / cfg.frame_rate, &cfg)?;
        if filtered != last {
            println!(
                "frame {frame:2}: raw {:<15} -> filtered {:?}",
                format!("{}/{}", sample.polarity.name(), sample.attentive),
                filtered.map(|s| s.polarity.name())
            );
            last = filtered;
        }
    }
    println!("sustained change needs {} frames", cfg.switch_frames());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
