//! Seeded synthesis of perception events from a scenario.
//!
//! Random draws happen in a fixed order per present person per frame,
//! whether or not the face is visible, so the stream depends only on the
//! seed and on where the robot is looking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::arbiter::{wrap_degrees, RobotState};
use crate::attention::{bbox_center_from_bearing, Bearing};
use crate::config::EngineConfig;
use crate::domain::{BBox, Emotion, EmotionDistribution, FaceObservation};
use crate::simulator::scenario::{default_affect, Scenario, ScriptedState};

/// One synthesized observation with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthEvent {
    pub obs: FaceObservation,
    /// The label used to draw the distribution differs from the script.
    pub flickered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    pub index: usize,
    /// Frame capture time, seconds.
    pub t: f64,
    pub events: Vec<SynthEvent>,
}

/// Number of frames in `[0, duration)` at `rate` Hz.
pub fn frame_count(duration: f64, rate: f64) -> usize {
    (duration * rate - 1e-9).ceil().max(0.0) as usize
}

/// Head yaw and pitch looking `deviation` degrees to the right of the
/// camera, for a face seen at `bearing`.
pub fn head_pose_for(bearing: Bearing, deviation: f64) -> (f64, f64) {
    let d = bearing.direction();
    let to_camera = [-d[0], -d[1], -d[2]];
    // horizontal unit vector orthogonal to the face-to-camera ray
    let norm = to_camera[0].hypot(to_camera[2]);
    let side = [-to_camera[2] / norm, 0.0, to_camera[0] / norm];
    let (s, c) = deviation.to_radians().sin_cos();
    let f = [c * to_camera[0] + s * side[0], c * to_camera[1] + s * side[1], c * to_camera[2] + s * side[2]];
    let yaw = f[0].atan2(-f[2]).to_degrees();
    let pitch = f[1].clamp(-1.0, 1.0).asin().to_degrees();
    (yaw, pitch)
}

pub struct Synthesizer<'a> {
    scenario: &'a Scenario,
    hfov: f64,
    vfov: f64,
    rate: f64,
    frames: usize,
    next: usize,
    rng: ChaCha8Rng,
    angle_noise: Option<Normal<f64>>,
    gammas: Option<(Gamma<f64>, Gamma<f64>)>,
}

impl<'a> Synthesizer<'a> {
    pub fn new(scenario: &'a Scenario, cfg: &EngineConfig) -> Self {
        let rate = scenario.frame_rate.unwrap_or(cfg.frame_rate);
        let sigma = scenario.noise.angle_sigma;
        Self {
            scenario,
            hfov: cfg.hfov,
            vfov: cfg.vfov,
            rate,
            frames: frame_count(scenario.duration, rate),
            next: 0,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            angle_noise: (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("validated sigma")),
            gammas: scenario.noise.concentration.map(|k| {
                (Gamma::new(k, 1.0).expect("validated concentration"), Gamma::new(1.0, 1.0).expect("unit shape"))
            }),
        }
    }

    pub fn frame_rate(&self) -> f64 {
        self.rate
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    fn draw_distribution(&mut self, label: Emotion) -> EmotionDistribution {
        let Some((peak, flat)) = self.gammas else {
            return EmotionDistribution::one_hot(label);
        };
        let mut w = [0.0; 7];
        for class in Emotion::ALL {
            let g = if class == label { &peak } else { &flat };
            w[class.index()] = g.sample(&mut self.rng);
        }
        EmotionDistribution::from_weights(w).unwrap_or_else(|_| EmotionDistribution::one_hot(label))
    }

    fn angle_jitter(&mut self) -> f64 {
        match self.angle_noise {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        }
    }

    /// Produces the next frame as seen by a camera in `pose`.
    pub fn next_frame(&mut self, pose: &RobotState) -> Option<SynthFrame> {
        if self.next >= self.frames {
            return None;
        }
        let index = self.next;
        self.next += 1;
        let t = index as f64 / self.rate;
        let sc = self.scenario;
        let mut events = Vec::new();
        for person in sc.persons.iter().filter(|p| p.present(t, sc.duration)) {
            let script = person.scripted(t);

            let flicker_roll: f64 = self.rng.gen();
            let other: usize = self.rng.gen_range(0..6);
            let flickered = flicker_roll < sc.noise.flicker;
            let label = if flickered {
                Emotion::ALL.iter().copied().filter(|e| *e != script.emotion).nth(other).expect("six other labels")
            } else {
                script.emotion
            };
            let emotions = self.draw_distribution(label);
            let (dyaw, dpitch, roll) = (self.angle_jitter(), self.angle_jitter(), self.angle_jitter());

            let seen = Bearing::new(
                wrap_degrees(script.alpha - pose.base_heading - pose.head_pan),
                script.beta - pose.head_tilt,
            );
            if !seen.within_fov(self.hfov, self.vfov) {
                continue;
            }
            let (yaw, pitch) = head_pose_for(seen, script.deviation);
            let (cx, cy) = bbox_center_from_bearing(seen, self.hfov, self.vfov);
            let (valence, arousal) = if flickered { default_affect(label) } else { (script.valence, script.arousal) };
            events.push(SynthEvent {
                obs: FaceObservation {
                    timestamp: t,
                    track_id: person.track_id,
                    bbox: BBox { cx: cx.clamp(0.0, 1.0), cy: cy.clamp(0.0, 1.0), w: person.size, h: person.size },
                    yaw: (yaw + dyaw).clamp(-90.0, 90.0),
                    pitch: (pitch + dpitch).clamp(-90.0, 90.0),
                    roll: roll.clamp(-180.0, 180.0),
                    emotions,
                    valence,
                    arousal,
                },
                flickered,
            });
        }
        Some(SynthFrame { index, t, events })
    }
}

/// All frames as seen by a stationary robot.
pub fn synthesize_frames(sc: &Scenario, cfg: &EngineConfig) -> Vec<SynthFrame> {
    let mut synth = Synthesizer::new(sc, cfg);
    let pose = RobotState::default();
    std::iter::from_fn(|| synth.next_frame(&pose)).collect()
}

/// Perception events of a scenario seen by a stationary robot, in order.
pub fn synthesize_events(sc: &Scenario, cfg: &EngineConfig) -> Vec<FaceObservation> {
    synthesize_frames(sc, cfg).into_iter().flat_map(|f| f.events.into_iter().map(|e| e.obs)).collect()
}

/// Scripted state and its camera-relative head pose without noise, for a
/// stationary robot.
pub fn noiseless_pose(script: &ScriptedState) -> (Bearing, f64, f64) {
    let bearing = Bearing::new(script.alpha, script.beta);
    let (yaw, pitch) = head_pose_for(bearing, script.deviation);
    (bearing, yaw, pitch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::deviation;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn head_pose_realizes_deviation(alpha in -30.0f64..30.0, beta in -22.0f64..22.0, dev in 0.0f64..85.0) {
            let b = Bearing::new(alpha, beta);
            let (yaw, pitch) = head_pose_for(b, dev);
            prop_assert!((deviation(yaw, pitch, b) - dev).abs() < 1e-6);
        }
    }

    #[test]
    fn facing_camera_is_mirror_of_bearing() {
        let (yaw, pitch) = head_pose_for(Bearing::new(20.0, -5.0), 0.0);
        assert!((yaw + 20.0).abs() < 1e-9);
        assert!((pitch - 5.0).abs() < 1e-9);
    }

    #[test]
    fn frame_counts() {
        assert_eq!(frame_count(3.0, 30.0), 90);
        assert_eq!(frame_count(0.1, 30.0), 3);
        assert_eq!(frame_count(100.0, 30.0), 3000);
    }
}
