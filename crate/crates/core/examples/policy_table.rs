// Prints the strategy for every sentiment state, then overrides one cell.
//
// `cargo run --example policy_table`

use engage::config::EngineConfig;
use engage::policy::{select_strategy, EngagementStrategy};
use engage::sentiment::{Polarity, SentimentState};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = EngineConfig::default();
    println!("{:<16} {:<12} strategy", "polarity", "attention");
    for state in SentimentState::all() {
        let attention = if state.attentive { "attentive" } else { "inattentive" };
        println!("{:<16} {:<12} {}", state.polarity.name(), attention, select_strategy(state, &cfg));
    }

    let cell = SentimentState::new(Polarity::Neutral, true);
    cfg.strategy_table.set(cell, EngagementStrategy::Engage);
    println!("\nwith neutral.attentive = engage: {}", select_strategy(cell, &cfg));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
