//! Scenario documents (TOML, `version = 1`).
//!
//! ```toml
//! version = 1
//! duration = 6.0
//! frame_rate = 30.0
//! seed = 42
//!
//! [noise]
//! flicker = 0.05
//! concentration = 12.0
//! angle_sigma = 2.0
//!
//! [[persons]]
//! track_id = 1
//! bearing = [{ t = 0.0, alpha = -10.0, beta = 0.0 }]
//! head = [{ t = 0.0, deviation = 0.0 }, { t = 3.0, deviation = 40.0 }]
//! emotion = [{ t = 0.0, label = "happy" }]
//! ```
//!
//! Bearings are relative to the robot's starting heading, head deviations
//! are degrees away from looking straight at the camera, and emotion labels
//! hold until the next keyframe.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Emotion, TrackId};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    UnsupportedVersion(i64),
    #[error("scenario schema: {0}")]
    Schema(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ScenarioError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    /// Seconds.
    pub duration: f64,
    /// Hz; falls back to the engine config's frame rate.
    #[serde(default)]
    pub frame_rate: Option<f64>,
    pub seed: u64,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub persons: Vec<Person>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    /// Per-frame probability of replacing the scripted label.
    #[serde(default)]
    pub flicker: f64,
    /// Dirichlet weight on the scripted label (others weigh 1). Absent
    /// means a one-hot distribution.
    #[serde(default)]
    pub concentration: Option<f64>,
    /// Standard deviation of head-pose angle noise, degrees.
    #[serde(default)]
    pub angle_sigma: f64,
}

impl Noise {
    pub fn is_zero(&self) -> bool {
        self.flicker == 0.0 && self.concentration.is_none() && self.angle_sigma == 0.0
    }
}

fn default_size() -> f64 {
    0.12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Person {
    pub track_id: TrackId,
    /// Seconds; the person is in the scene on `[enter, exit)`.
    #[serde(default)]
    pub enter: f64,
    #[serde(default)]
    pub exit: Option<f64>,
    /// Normalized face width and height.
    #[serde(default = "default_size")]
    pub size: f64,
    pub bearing: Vec<BearingKey>,
    pub head: Vec<HeadKey>,
    pub emotion: Vec<EmotionKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BearingKey {
    pub t: f64,
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadKey {
    pub t: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmotionKey {
    pub t: f64,
    pub label: String,
    #[serde(default)]
    pub valence: Option<f64>,
    #[serde(default)]
    pub arousal: Option<f64>,
}

/// Typical (valence, arousal) of a scripted label.
pub fn default_affect(emotion: Emotion) -> (f64, f64) {
    match emotion {
        Emotion::Neutral => (0.0, 0.0),
        Emotion::Happy => (0.7, 0.4),
        Emotion::Disgust => (-0.6, 0.3),
        Emotion::Fear => (-0.6, 0.6),
        Emotion::Surprise => (0.2, 0.7),
        Emotion::Anger => (-0.7, 0.7),
        Emotion::Sadness => (-0.6, -0.3),
    }
}

/// Noise-free scripted state of one person at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedState {
    pub alpha: f64,
    pub beta: f64,
    pub deviation: f64,
    pub emotion: Emotion,
    pub valence: f64,
    pub arousal: f64,
}

fn lerp_keys<K: Copy>(keys: &[K], t: f64, time: impl Fn(&K) -> f64, value: impl Fn(&K) -> f64) -> f64 {
    let first = &keys[0];
    if t <= time(first) {
        return value(first);
    }
    for pair in keys.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if t < time(b) {
            let span = time(b) - time(a);
            if span <= 0.0 {
                return value(b);
            }
            let u = (t - time(a)) / span;
            return value(a) + u * (value(b) - value(a));
        }
    }
    value(keys.last().expect("validated non-empty"))
}

impl Person {
    pub fn exit_time(&self, duration: f64) -> f64 {
        self.exit.unwrap_or(duration)
    }

    pub fn present(&self, t: f64, duration: f64) -> bool {
        t >= self.enter && t < self.exit_time(duration)
    }

    /// Scripted state at `t`: bearing and head deviation interpolate
    /// linearly, the emotion label is piecewise constant.
    pub fn scripted(&self, t: f64) -> ScriptedState {
        let alpha = lerp_keys(&self.bearing, t, |k| k.t, |k| k.alpha);
        let beta = lerp_keys(&self.bearing, t, |k| k.t, |k| k.beta);
        let deviation = lerp_keys(&self.head, t, |k| k.t, |k| k.deviation);
        let key = self.emotion.iter().rev().find(|k| k.t <= t).unwrap_or(&self.emotion[0]);
        let emotion: Emotion = key.label.parse().expect("validated label");
        let (v, a) = default_affect(emotion);
        ScriptedState {
            alpha,
            beta,
            deviation,
            emotion,
            valence: key.valence.unwrap_or(v),
            arousal: key.arousal.unwrap_or(a),
        }
    }
}

impl Scenario {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Parses and validates a scenario document.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ScenarioError::Schema(e.to_string()))?;
        match doc.get("version") {
            None => return Err(ScenarioError::invalid("version", "missing schema version")),
            Some(toml::Value::Integer(v)) if *v == SCHEMA_VERSION as i64 => {}
            Some(toml::Value::Integer(v)) => return Err(ScenarioError::UnsupportedVersion(*v)),
            Some(_) => return Err(ScenarioError::invalid("version", "schema version must be an integer")),
        }
        let sc: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_document(&self) -> String {
        toml::to_string(self).expect("scenario serialization is infallible")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.version != SCHEMA_VERSION {
            return Err(ScenarioError::UnsupportedVersion(self.version as i64));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(ScenarioError::invalid("duration", "must be positive"));
        }
        if let Some(rate) = self.frame_rate {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(ScenarioError::invalid("frame_rate", "must be positive"));
            }
        }
        let n = &self.noise;
        if !(0.0..=1.0).contains(&n.flicker) {
            return Err(ScenarioError::invalid("noise.flicker", "probability must lie in [0, 1]"));
        }
        if let Some(k) = n.concentration {
            if !(k.is_finite() && k > 0.0) {
                return Err(ScenarioError::invalid("noise.concentration", "must be positive"));
            }
        }
        if !(n.angle_sigma.is_finite() && n.angle_sigma >= 0.0) {
            return Err(ScenarioError::invalid("noise.angle_sigma", "must be non-negative"));
        }

        let mut ids = BTreeSet::new();
        for (i, p) in self.persons.iter().enumerate() {
            let at = |field: &str| format!("persons[{i}].{field}");
            if !ids.insert(p.track_id) {
                return Err(ScenarioError::invalid(at("track_id"), format!("duplicate track id {}", p.track_id)));
            }
            if !(p.size > 0.0 && p.size <= 1.0) {
                return Err(ScenarioError::invalid(at("size"), "must lie in (0, 1]"));
            }
            if !(p.enter.is_finite() && p.enter >= 0.0 && p.enter < p.exit_time(self.duration)) {
                return Err(ScenarioError::invalid(at("enter"), "must be non-negative and before exit"));
            }
            check_times(&at("bearing"), p.bearing.iter().map(|k| k.t))?;
            check_times(&at("head"), p.head.iter().map(|k| k.t))?;
            check_times(&at("emotion"), p.emotion.iter().map(|k| k.t))?;
            for (j, k) in p.bearing.iter().enumerate() {
                if !(k.alpha.abs() <= 180.0 && k.beta.abs() < 90.0) {
                    return Err(ScenarioError::invalid(
                        format!("{}[{j}]", at("bearing")),
                        "alpha must lie in [-180, 180], beta in (-90, 90)",
                    ));
                }
            }
            for (j, k) in p.head.iter().enumerate() {
                if !(0.0..=180.0).contains(&k.deviation) {
                    return Err(ScenarioError::invalid(
                        format!("{}[{j}].deviation", at("head")),
                        "must lie in [0, 180]",
                    ));
                }
            }
            for (j, k) in p.emotion.iter().enumerate() {
                let path = format!("{}[{j}]", at("emotion"));
                k.label
                    .parse::<Emotion>()
                    .map_err(|e| ScenarioError::invalid(format!("{path}.label"), e.to_string()))?;
                for (name, v) in [("valence", k.valence), ("arousal", k.arousal)] {
                    if let Some(v) = v {
                        if !(-1.0..=1.0).contains(&v) {
                            return Err(ScenarioError::invalid(format!("{path}.{name}"), "must lie in [-1, 1]"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_times(path: &str, times: impl Iterator<Item = f64>) -> Result<(), ScenarioError> {
    let mut prev = f64::NEG_INFINITY;
    let mut count = 0;
    for (j, t) in times.enumerate() {
        if !t.is_finite() {
            return Err(ScenarioError::invalid(format!("{path}[{j}].t"), "must be finite"));
        }
        if t < prev {
            return Err(ScenarioError::invalid(format!("{path}[{j}].t"), "keyframe times must be nondecreasing"));
        }
        prev = t;
        count += 1;
    }
    if count == 0 {
        return Err(ScenarioError::invalid(path, "needs at least one keyframe"));
    }
    Ok(())
}
