//! Perception-side domain types: the closed emotion taxonomy, normalized
//! emotion distributions and per-face observations.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Identifier assigned to a face by the upstream tracker.
pub type TrackId = u32;

/// Tolerance on the probability sum of a normalized distribution.
pub const SUM_TOLERANCE: f64 = 1e-6;

const DEGENERATE_SUM: f64 = 1e-6;

/// The seven facial expression classes produced by the emotion estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Emotion {
    Neutral,
    Happy,
    Disgust,
    Fear,
    Surprise,
    Anger,
    Sadness,
}

impl Emotion {
    pub const ALL: [Emotion; 7] = [
        Emotion::Neutral,
        Emotion::Happy,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Surprise,
        Emotion::Anger,
        Emotion::Sadness,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Neutral => "neutral",
            Emotion::Happy => "happy",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Surprise => "surprise",
            Emotion::Anger => "anger",
            Emotion::Sadness => "sadness",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = EmotionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL.iter().copied().find(|e| e.name() == s).ok_or_else(|| EmotionError::UnknownClass(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmotionError {
    #[error("unknown emotion class {0:?}")]
    UnknownClass(String),
    #[error("missing emotion class {0}")]
    MissingClass(Emotion),
    #[error("duplicate emotion class {0}")]
    DuplicateClass(Emotion),
    #[error("emotion {class} has invalid probability {value}")]
    InvalidValue { class: Emotion, value: f64 },
    #[error("emotion probabilities sum to {0}, cannot normalize")]
    Degenerate(f64),
}

/// Probabilities over the seven emotion classes, summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmotionDistribution([f64; 7]);

impl EmotionDistribution {
    /// Rescales non-negative class weights to sum to one.
    pub fn from_weights(weights: [f64; 7]) -> Result<Self, EmotionError> {
        for (class, &value) in Emotion::ALL.iter().zip(weights.iter()) {
            if !value.is_finite() || value < 0.0 {
                return Err(EmotionError::InvalidValue { class: *class, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum < DEGENERATE_SUM {
            return Err(EmotionError::Degenerate(sum));
        }
        Ok(Self(weights.map(|w| w / sum)))
    }

    /// All mass on one class.
    pub fn one_hot(class: Emotion) -> Self {
        let mut p = [0.0; 7];
        p[class.index()] = 1.0;
        Self(p)
    }

    pub fn uniform() -> Self {
        Self([1.0 / 7.0; 7])
    }

    pub fn get(&self, class: Emotion) -> f64 {
        self.0[class.index()]
    }

    pub fn as_array(&self) -> &[f64; 7] {
        &self.0
    }

    /// The most probable class and its probability. Ties resolve to the
    /// class listed first in [`Emotion::ALL`].
    pub fn argmax(&self) -> (Emotion, f64) {
        let mut best = (Emotion::Neutral, self.0[0]);
        for class in Emotion::ALL.iter().skip(1) {
            let p = self.0[class.index()];
            if p > best.1 {
                best = (*class, p);
            }
        }
        best
    }

    pub fn iter(&self) -> impl Iterator<Item = (Emotion, f64)> + '_ {
        Emotion::ALL.iter().map(move |e| (*e, self.0[e.index()]))
    }
}

/// Builds a distribution from named class weights.
///
/// Every one of the seven classes must be present exactly once; unknown
/// names are rejected rather than dropped.
pub fn normalize_emotions<'a, I>(raw: I) -> Result<EmotionDistribution, EmotionError>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut weights = [f64::NAN; 7];
    let mut seen = [false; 7];
    for (name, value) in raw {
        let class: Emotion = name.parse()?;
        if seen[class.index()] {
            return Err(EmotionError::DuplicateClass(class));
        }
        seen[class.index()] = true;
        weights[class.index()] = value;
    }
    if let Some(missing) = Emotion::ALL.iter().find(|e| !seen[e.index()]) {
        return Err(EmotionError::MissingClass(*missing));
    }
    EmotionDistribution::from_weights(weights)
}

/// Face bounding box in normalized image coordinates (center, size).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// One perception sample for one tracked face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceObservation {
    /// Seconds on a monotonic clock.
    pub timestamp: f64,
    pub track_id: TrackId,
    pub bbox: BBox,
    /// Degrees, positive when the face turns toward image-right.
    pub yaw: f64,
    /// Degrees, positive up.
    pub pitch: f64,
    pub roll: f64,
    pub emotions: EmotionDistribution,
    pub valence: f64,
    pub arousal: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("field {field} = {value} outside {bound}")]
pub struct FieldError {
    pub field: &'static str,
    pub value: f64,
    pub bound: &'static str,
}

impl FaceObservation {
    /// Checks every field bound, reporting the first violation.
    pub fn validate(&self) -> Result<(), FieldError> {
        fn check(field: &'static str, value: f64, ok: bool, bound: &'static str) -> Result<(), FieldError> {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(FieldError { field, value, bound })
            }
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let signed = |v: f64| (-1.0..=1.0).contains(&v);
        check("t", self.timestamp, self.timestamp >= 0.0, "[0, inf)")?;
        check("bbox.cx", self.bbox.cx, unit(self.bbox.cx), "[0, 1]")?;
        check("bbox.cy", self.bbox.cy, unit(self.bbox.cy), "[0, 1]")?;
        check("bbox.w", self.bbox.w, self.bbox.w > 0.0, "(0, inf)")?;
        check("bbox.h", self.bbox.h, self.bbox.h > 0.0, "(0, inf)")?;
        check("yaw", self.yaw, (-90.0..=90.0).contains(&self.yaw), "[-90, 90]")?;
        check("pitch", self.pitch, (-90.0..=90.0).contains(&self.pitch), "[-90, 90]")?;
        check("roll", self.roll, (-180.0..=180.0).contains(&self.roll), "[-180, 180]")?;
        check("valence", self.valence, signed(self.valence), "[-1, 1]")?;
        check("arousal", self.arousal, signed(self.arousal), "[-1, 1]")?;
        Ok(())
    }
}
