//! Per-frame emotion polarity and the per-track temporal filter that turns
//! flickering (polarity, attentive) samples into a stable sentiment state.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::attention::AttentionEstimate;
use crate::config::EngineConfig;
use crate::domain::{Emotion, EmotionDistribution, FaceObservation, TrackId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    /// Fear, disgust or anger.
    NegativeStrong,
    /// Sadness, or negative valence without a confident class.
    NegativeSoft,
    Neutral,
}

impl Polarity {
    pub const ALL: [Polarity; 4] =
        [Polarity::Positive, Polarity::NegativeStrong, Polarity::NegativeSoft, Polarity::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::NegativeStrong => "negative_strong",
            Polarity::NegativeSoft => "negative_soft",
            Polarity::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.iter().copied().find(|p| p.name() == s).ok_or_else(|| format!("unknown polarity {s:?}"))
    }
}

/// Fused emotional and attentive state of one person.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SentimentState {
    pub polarity: Polarity,
    pub attentive: bool,
}

impl SentimentState {
    pub fn new(polarity: Polarity, attentive: bool) -> Self {
        Self { polarity, attentive }
    }

    /// All eight states.
    pub fn all() -> impl Iterator<Item = SentimentState> {
        Polarity::ALL.into_iter().flat_map(|p| [true, false].into_iter().map(move |a| SentimentState::new(p, a)))
    }

    fn slot(self) -> usize {
        self.polarity.index() * 2 + self.attentive as usize
    }
}

impl fmt::Display for SentimentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.polarity, if self.attentive { "attentive" } else { "inattentive" })
    }
}

pub fn classify_polarity(emotions: &EmotionDistribution, valence: f64, cfg: &EngineConfig) -> Polarity {
    let (top, p) = emotions.argmax();
    if p >= cfg.polarity_floor {
        return match top {
            Emotion::Happy => Polarity::Positive,
            Emotion::Fear | Emotion::Disgust | Emotion::Anger => Polarity::NegativeStrong,
            Emotion::Sadness => Polarity::NegativeSoft,
            Emotion::Neutral => Polarity::Neutral,
            Emotion::Surprise if valence >= 0.0 => Polarity::Positive,
            Emotion::Surprise => Polarity::NegativeSoft,
        };
    }
    if valence >= cfg.valence_pos {
        Polarity::Positive
    } else if valence <= cfg.valence_neg {
        Polarity::NegativeSoft
    } else {
        Polarity::Neutral
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SentimentError {
    #[error("track {track_id}: timestamp {timestamp} precedes last seen {last}")]
    OutOfOrder { track_id: TrackId, timestamp: f64, last: f64 },
}

/// Sliding-window majority filter with a dwell requirement.
///
/// The filtered state switches to the window's modal pair only when that
/// pair fills at least `ceil(m * W)` window slots and the most recent
/// `D` samples all equal it. Anything shorter than `D` frames is absorbed.
#[derive(Debug, Clone)]
pub struct TrackState {
    track_id: TrackId,
    window: VecDeque<SentimentState>,
    counts: [u32; 8],
    filtered: Option<SentimentState>,
    candidate: Option<SentimentState>,
    dwell: usize,
    run_len: usize,
    last_timestamp: f64,
}

impl TrackState {
    pub fn new(track_id: TrackId) -> Self {
        Self {
            track_id,
            window: VecDeque::new(),
            counts: [0; 8],
            filtered: None,
            candidate: None,
            dwell: 0,
            run_len: 0,
            last_timestamp: f64::NEG_INFINITY,
        }
    }

    pub fn track_id(&self) -> TrackId {
        self.track_id
    }

    /// Filtered state, `None` until the first switch.
    pub fn filtered(&self) -> Option<SentimentState> {
        self.filtered
    }

    pub fn candidate(&self) -> Option<SentimentState> {
        self.candidate
    }

    pub fn dwell(&self) -> usize {
        self.dwell
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn last_timestamp(&self) -> f64 {
        self.last_timestamp
    }

    /// Feeds one raw sample and returns the filtered state.
    pub fn push(
        &mut self,
        sample: SentimentState,
        timestamp: f64,
        cfg: &EngineConfig,
    ) -> Result<Option<SentimentState>, SentimentError> {
        if timestamp < self.last_timestamp {
            return Err(SentimentError::OutOfOrder { track_id: self.track_id, timestamp, last: self.last_timestamp });
        }
        self.last_timestamp = timestamp;

        if self.window.back() == Some(&sample) {
            self.run_len += 1;
        } else {
            self.run_len = 1;
        }
        self.window.push_back(sample);
        self.counts[sample.slot()] += 1;
        while self.window.len() > cfg.window {
            if let Some(old) = self.window.pop_front() {
                self.counts[old.slot()] -= 1;
            }
        }

        let candidate = self.modal();
        self.candidate = Some(candidate);
        self.dwell = if candidate == sample { self.run_len.min(cfg.dwell) } else { 0 };

        if self.filtered != Some(candidate)
            && self.counts[candidate.slot()] as usize >= cfg.majority_count()
            && self.dwell >= cfg.dwell
        {
            self.filtered = Some(candidate);
        }
        Ok(self.filtered)
    }

    /// Most frequent pair in the window. Ties go to the filtered state, then
    /// to the most recently seen of the tied pairs.
    fn modal(&self) -> SentimentState {
        let best = self.counts.iter().copied().max().unwrap_or(0);
        if let Some(current) = self.filtered {
            if self.counts[current.slot()] == best {
                return current;
            }
        }
        *self.window.iter().rev().find(|s| self.counts[s.slot()] == best).expect("window is non-empty after a push")
    }
}

impl AsRef<TrackState> for TrackState {
    fn as_ref(&self) -> &TrackState {
        self
    }
}

/// Classifies one observation and feeds it through the track's filter.
pub fn update_track(
    state: &mut TrackState,
    obs: &FaceObservation,
    att: &AttentionEstimate,
    cfg: &EngineConfig,
) -> Result<Option<SentimentState>, SentimentError> {
    let polarity = classify_polarity(&obs.emotions, obs.valence, cfg);
    state.push(SentimentState::new(polarity, att.attentive), obs.timestamp, cfg)
}

/// Drops tracks unseen for longer than `timeout` seconds and returns the
/// removed ids in ascending order.
pub fn expire_tracks<T: AsRef<TrackState>>(states: &mut BTreeMap<TrackId, T>, now: f64, timeout: f64) -> Vec<TrackId> {
    let expired: Vec<TrackId> =
        states.iter().filter(|(_, t)| now - t.as_ref().last_timestamp() > timeout).map(|(id, _)| *id).collect();
    for id in &expired {
        states.remove(id);
    }
    expired
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NEUTRAL_AWAY: SentimentState = SentimentState { polarity: Polarity::Neutral, attentive: false };
    const HAPPY_AT: SentimentState = SentimentState { polarity: Polarity::Positive, attentive: true };
    const FEAR_AT: SentimentState = SentimentState { polarity: Polarity::NegativeStrong, attentive: true };

    fn dist_with(class: Emotion, p: f64) -> EmotionDistribution {
        let mut w = [(1.0 - p) / 6.0; 7];
        w[class.index()] = p;
        EmotionDistribution::from_weights(w).unwrap()
    }

    /// Replays the window/dwell rule from scratch on the full history at
    /// every frame: no incremental counts, no stored run length.
    fn brute_force(stream: &[SentimentState], cfg: &EngineConfig) -> Vec<Option<SentimentState>> {
        let mut current: Option<SentimentState> = None;
        let mut out = Vec::new();
        for i in 0..stream.len() {
            let lo = (i + 1).saturating_sub(cfg.window);
            let window = &stream[lo..=i];
            let count = |s: SentimentState| window.iter().filter(|x| **x == s).count();
            let best = SentimentState::all().map(count).max().unwrap();
            let candidate = match current {
                Some(c) if count(c) == best => c,
                _ => *window.iter().rev().find(|s| count(**s) == best).unwrap(),
            };
            let run = stream[..=i].iter().rev().take_while(|s| **s == candidate).count();
            let majority = (cfg.majority * cfg.window as f64 - 1e-9).ceil() as usize;
            if current != Some(candidate) && count(candidate) >= majority && run >= cfg.dwell {
                current = Some(candidate);
            }
            out.push(current);
        }
        out
    }

    fn run(stream: &[SentimentState], cfg: &EngineConfig) -> Vec<Option<SentimentState>> {
        let mut track = TrackState::new(1);
        stream.iter().enumerate().map(|(i, s)| track.push(*s, i as f64 / 30.0, cfg).unwrap()).collect()
    }

    #[test]
    fn polarity_examples() {
        let cfg = EngineConfig::default();
        assert_eq!(classify_polarity(&dist_with(Emotion::Happy, 0.9), 0.7, &cfg), Polarity::Positive);
        assert_eq!(classify_polarity(&dist_with(Emotion::Fear, 0.8), -0.6, &cfg), Polarity::NegativeStrong);
        // max p = 1/7 < 0.4 and |v| < 0.2
        assert_eq!(classify_polarity(&EmotionDistribution::uniform(), 0.0, &cfg), Polarity::Neutral);
    }

    #[test]
    fn polarity_class_mapping() {
        let cfg = EngineConfig::default();
        let cases = [
            (Emotion::Disgust, 0.0, Polarity::NegativeStrong),
            (Emotion::Anger, 0.5, Polarity::NegativeStrong),
            (Emotion::Sadness, 0.0, Polarity::NegativeSoft),
            (Emotion::Neutral, 0.9, Polarity::Neutral),
            (Emotion::Surprise, 0.0, Polarity::Positive),
            (Emotion::Surprise, -0.01, Polarity::NegativeSoft),
        ];
        for (class, v, expected) in cases {
            assert_eq!(classify_polarity(&EmotionDistribution::one_hot(class), v, &cfg), expected, "{class}");
        }
    }

    #[test]
    fn valence_fallback() {
        let cfg = EngineConfig::default();
        let flat = EmotionDistribution::uniform();
        assert_eq!(classify_polarity(&flat, 0.2, &cfg), Polarity::Positive);
        assert_eq!(classify_polarity(&flat, -0.2, &cfg), Polarity::NegativeSoft);
        assert_eq!(classify_polarity(&flat, 0.19, &cfg), Polarity::Neutral);
    }

    #[test]
    fn polarity_grid_is_total() {
        // 0.05-step grid over (top class, top mass, remainder split) x valence
        let cfg = EngineConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for top in Emotion::ALL {
            for second in Emotion::ALL {
                for pi in 0..=20 {
                    for qi in 0..=(20 - pi) {
                        let mut w = [0.0; 7];
                        w[top.index()] += pi as f64 * 0.05;
                        w[second.index()] += qi as f64 * 0.05;
                        let rest = 1.0 - (pi + qi) as f64 * 0.05;
                        for x in w.iter_mut() {
                            *x += rest.max(0.0) / 7.0;
                        }
                        let Ok(d) = EmotionDistribution::from_weights(w) else { continue };
                        for vi in -20..=20 {
                            seen.insert(classify_polarity(&d, vi as f64 * 0.05, &cfg));
                        }
                    }
                }
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn constant_stream_from_fresh_track() {
        let cfg = EngineConfig::default();
        let out = run(&[HAPPY_AT; 15], &cfg);
        assert_eq!(out.last().copied().flatten(), Some(HAPPY_AT));
        // fresh track switches once both count >= 9 and run >= 5
        assert_eq!(out.iter().position(|s| s.is_some()), Some(8));
    }

    #[test]
    fn single_frame_flicker_is_absorbed() {
        let cfg = EngineConfig::default();
        let mut stream = vec![NEUTRAL_AWAY; 30];
        stream.push(FEAR_AT);
        stream.extend([NEUTRAL_AWAY; 30]);
        let out = run(&stream, &cfg);
        assert!(out[14..].iter().all(|s| *s == Some(NEUTRAL_AWAY)));
        assert_eq!(out, brute_force(&stream, &cfg));
    }

    #[test]
    fn regime_change_switches_on_ninth_frame() {
        let cfg = EngineConfig::default();
        let mut stream = vec![NEUTRAL_AWAY; 30];
        stream.extend([HAPPY_AT; 30]);
        let out = run(&stream, &cfg);
        let expected = brute_force(&stream, &cfg);
        assert_eq!(out, expected);
        let first_new = out.iter().position(|s| *s == Some(HAPPY_AT)).unwrap();
        // frame 9 of the new regime, i.e. index 30 + 8
        assert_eq!(first_new, 38);
    }

    #[test]
    fn out_of_order_timestamp_is_rejected() {
        let cfg = EngineConfig::default();
        let mut track = TrackState::new(4);
        track.push(HAPPY_AT, 2.0, &cfg).unwrap();
        track.push(HAPPY_AT, 2.0, &cfg).unwrap();
        assert!(matches!(track.push(HAPPY_AT, 1.9, &cfg), Err(SentimentError::OutOfOrder { track_id: 4, .. })));
    }

    #[test]
    fn expiry() {
        let cfg = EngineConfig::default();
        let mut tracks: BTreeMap<TrackId, TrackState> = BTreeMap::new();
        assert!(expire_tracks(&mut tracks, 10.0, 1.0).is_empty());

        let mut recent = TrackState::new(1);
        recent.push(HAPPY_AT, 9.8, &cfg).unwrap();
        let mut stale = TrackState::new(2);
        stale.push(HAPPY_AT, 8.5, &cfg).unwrap();
        tracks.insert(1, recent);
        tracks.insert(2, stale);
        assert_eq!(expire_tracks(&mut tracks, 10.0, 1.0), vec![2]);
        assert!(tracks.contains_key(&1));
    }

    fn any_state() -> impl Strategy<Value = SentimentState> {
        (0usize..4, any::<bool>()).prop_map(|(p, a)| SentimentState::new(Polarity::ALL[p], a))
    }

    proptest! {
        #[test]
        fn matches_brute_force(stream in prop::collection::vec(any_state(), 1..200), w in 1usize..20, d in 1usize..20, m in 0.51f64..1.0) {
            prop_assume!(d <= w);
            let cfg = EngineConfig { window: w, dwell: d, majority: m, ..Default::default() };
            prop_assert_eq!(run(&stream, &cfg), brute_force(&stream, &cfg));
        }

        #[test]
        fn invariants_hold(stream in prop::collection::vec(any_state(), 1..100)) {
            let cfg = EngineConfig::default();
            let mut track = TrackState::new(1);
            for (i, s) in stream.iter().enumerate() {
                track.push(*s, i as f64, &cfg).unwrap();
                prop_assert!(track.window_len() <= cfg.window);
                prop_assert!(track.dwell() <= cfg.dwell);
            }
        }

        #[test]
        fn constant_stream_is_adopted(prefix in prop::collection::vec(any_state(), 0..40), s in any_state()) {
            let cfg = EngineConfig::default();
            let mut stream = prefix;
            stream.extend(std::iter::repeat_n(s, cfg.window));
            prop_assert_eq!(*run(&stream, &cfg).last().unwrap(), Some(s));
        }
    }
}
