// Commands planned for each strategy toward a person 25 degrees right.
//
// `cargo run --example arbiter_commands`

use engage::arbiter::{plan_commands, RobotState};
use engage::attention::Bearing;
use engage::config::EngineConfig;
use engage::policy::EngagementStrategy;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = EngineConfig::default();
    let robot = RobotState { head_pan: 45.0, ..RobotState::default() };
    let bearing = Bearing::new(25.0, 3.0);
    println!("head pan {} deg, person at {} deg in camera", robot.head_pan, bearing.alpha);
    for strategy in EngagementStrategy::ALL {
        let (next, actions) = plan_commands(7, strategy, bearing, &robot, &cfg);
        println!("{strategy}:");
        for action in &actions {
            println!("  {action:?}");
        }
        println!("  -> pan {:.1}, base {:.1}, torso {:.1}", next.head_pan, next.base_heading, next.torso_height);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
