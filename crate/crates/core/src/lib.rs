//! Sentiment-driven engagement strategies for social robots.
//!
//! Per-face perception samples (head pose, emotion distribution, valence
//! and arousal) are fused into a debounced sentiment state per person,
//! mapped to one of four engagement strategies (Engage, Attract, Avoid,
//! Ignore) and turned into head, base, torso and speech commands.
//!
//! Run `cargo run --example <name>` for a tour; see `examples/`.

pub mod arbiter;
pub mod attention;
pub mod config;
pub mod domain;
pub mod engine;
pub mod policy;
pub mod protocol;
pub mod sentiment;
pub mod simulator;
pub mod stream;

pub use arbiter::{Action, RobotCommand, RobotState};
pub use attention::{AttentionEstimate, Bearing};
pub use config::EngineConfig;
pub use domain::{BBox, Emotion, EmotionDistribution, FaceObservation, TrackId};
pub use engine::Engine;
pub use policy::{EngagementStrategy, StrategyTable};
pub use sentiment::{Polarity, SentimentState, TrackState};
