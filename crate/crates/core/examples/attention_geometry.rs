// From a face bounding box and head pose to an attention estimate.
//
// `cargo run --example attention_geometry`

use engage::attention::{attention_score, bearing_from_bbox};
use engage::config::EngineConfig;
use engage::domain::BBox;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = EngineConfig::default();
    // a face right of centre, slightly high
    let bbox = BBox { cx: 0.75, cy: 0.4, w: 0.1, h: 0.1 };
    let bearing = bearing_from_bbox(&bbox, cfg.hfov, cfg.vfov)?;
    println!("bearing: azimuth {:.2} deg, elevation {:.2} deg", bearing.alpha, bearing.beta);

    // looking straight at the lens means turning back by the bearing
    let poses = [(-bearing.alpha, -bearing.beta), (0.0, 0.0), (-bearing.alpha + 20.0, -bearing.beta), (45.0, 10.0)];
    for (yaw, pitch) in poses {
        let est = attention_score(yaw, pitch, bearing, &cfg);
        println!(
            "yaw {yaw:7.2} pitch {pitch:6.2} -> deviation {:6.2}, score {:.3}, attentive {}",
            est.deviation, est.score, est.attentive
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
