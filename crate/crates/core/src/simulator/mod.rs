//! Deterministic scenario simulation.
//!
//! A scenario scripts where people stand, where they look and what they
//! feel. The simulator synthesizes noisy perception from the script, runs it
//! through the decision engine with the perception pipeline's fixed latency,
//! integrates robot motion under rate limits and scores the strategy stream
//! against the noise-free instantaneous ideal.

pub mod scenario;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::arbiter::{wrap_degrees, Action, RobotCommand};
use crate::attention::{self, Bearing};
use crate::config::{ConfigReport, EngineConfig};
use crate::domain::{EmotionDistribution, TrackId};
use crate::engine::{Engine, EngineError};
use crate::policy::{self, EngagementStrategy};
use crate::protocol::CommandRecord;
use crate::sentiment::{self, SentimentState};

pub use scenario::{Scenario, ScenarioError};
pub use synth::{synthesize_events, synthesize_frames, SynthEvent, SynthFrame, Synthesizer};

/// Per-frame perception delay of the face detection, head pose and emotion
/// networks, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyModel {
    pub face_detection_ms: f64,
    pub head_pose_ms: f64,
    pub emotion_ms: f64,
}

impl LatencyModel {
    pub const MEASURED: LatencyModel = LatencyModel { face_detection_ms: 6.7, head_pose_ms: 1.4, emotion_ms: 6.3 };

    pub fn total_ms(&self) -> f64 {
        self.face_detection_ms + self.head_pose_ms + self.emotion_ms
    }

    pub fn total_seconds(&self) -> f64 {
        self.total_ms() / 1000.0
    }
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self::MEASURED
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config:\n{0}")]
    Config(ConfigReport),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("time {t} outside scenario [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },
}

/// The instantaneous ideal strategy of every person present at `t`: the
/// noise-free script through polarity, attention and the strategy table,
/// with no temporal filtering.
pub fn oracle_strategy(
    sc: &Scenario,
    t: f64,
    cfg: &EngineConfig,
) -> Result<BTreeMap<TrackId, EngagementStrategy>, SimError> {
    if !(0.0..=sc.duration).contains(&t) {
        return Err(SimError::TimeOutOfRange { t, duration: sc.duration });
    }
    Ok(sc
        .persons
        .iter()
        .filter(|p| p.present(t, sc.duration))
        .map(|p| {
            let script = p.scripted(t);
            let (bearing, yaw, pitch) = synth::noiseless_pose(&script);
            let att = attention::attention_score(yaw, pitch, bearing, cfg);
            let emotions = EmotionDistribution::one_hot(script.emotion);
            let polarity = sentiment::classify_polarity(&emotions, script.valence, cfg);
            let state = SentimentState::new(polarity, att.attentive);
            (p.track_id, policy::select_strategy(state, cfg))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyStats {
    #[serde(flatten)]
    pub model: LatencyModel,
    pub per_frame_ms: f64,
    pub decisions: usize,
    pub mean_decision_delay_ms: f64,
    pub max_decision_delay_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub switch_count: usize,
    pub regime_changes: usize,
    /// Frames from a scripted regime change until the emitted strategy
    /// matches it, counting the change frame as 1.
    pub mean_reaction_delay_frames: f64,
    pub max_reaction_delay_frames: usize,
    /// Regimes that ended before the emitted strategy caught up.
    pub missed_regimes: usize,
    /// Share of evaluated frames where the emitted strategy equals the
    /// oracle, outside transition windows.
    pub agreement_fraction: f64,
    pub evaluated_frames: usize,
    pub transition_window_frames: usize,
    pub speak_count: usize,
    pub flicker_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineEntry {
    pub t: f64,
    pub strategy: Option<EngagementStrategy>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackReport {
    pub track_id: TrackId,
    pub switch_count: usize,
    pub speak_count: usize,
    pub reaction_delays: Vec<usize>,
    pub timeline: Vec<TimelineEntry>,
}

/// One person in one frame, for the CSV timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub frame: usize,
    /// Frame capture time.
    pub t: f64,
    /// Decision time.
    pub decided_at: f64,
    pub track_id: TrackId,
    pub visible: bool,
    pub flickered: bool,
    pub oracle: EngagementStrategy,
    pub emitted: Option<EngagementStrategy>,
    pub target: Option<TrackId>,
    /// Degrees between the optical axis and the person after this tick's
    /// commands.
    pub off_axis: f64,
    pub head_pan: f64,
    pub head_tilt: f64,
    pub base_heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub version: u32,
    pub seed: u64,
    pub duration: f64,
    pub frame_rate: f64,
    pub frames: usize,
    pub latency: LatencyStats,
    pub metrics: Metrics,
    pub tracks: Vec<TrackReport>,
    #[serde(serialize_with = "serialize_commands")]
    pub commands: Vec<RobotCommand>,
    #[serde(skip)]
    pub rows: Vec<FrameRow>,
}

fn serialize_commands<S: Serializer>(cmds: &[RobotCommand], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(cmds.iter().map(CommandRecord::from))
}

fn label(s: Option<EngagementStrategy>) -> &'static str {
    s.map(|s| s.name()).unwrap_or("none")
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialization is infallible");
        out.push('\n');
        out
    }

    /// Per-frame, per-person table for external plotting.
    pub fn timeline_csv(&self) -> String {
        let mut out = String::from(
            "frame,t,decided_at,track_id,visible,flickered,oracle,strategy,target,off_axis,head_pan,head_tilt,base_heading\n",
        );
        for r in &self.rows {
            let target = r.target.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.frame,
                r.t,
                r.decided_at,
                r.track_id,
                r.visible,
                r.flickered,
                r.oracle,
                label(r.emitted),
                target,
                r.off_axis,
                r.head_pan,
                r.head_tilt,
                r.base_heading
            );
        }
        out
    }

    pub fn final_strategy(&self, track: TrackId) -> Option<EngagementStrategy> {
        self.rows.iter().rev().find(|r| r.track_id == track).and_then(|r| r.emitted)
    }

    pub fn speak_count(&self, track: TrackId) -> usize {
        self.commands.iter().filter(|c| c.target == Some(track) && matches!(c.action, Action::Speak { .. })).count()
    }
}

/// Runs a scenario through the full pipeline. Deterministic given the
/// scenario (including its seed) and the config.
pub fn run_scenario(sc: &Scenario, cfg: &EngineConfig) -> Result<ScenarioReport, SimError> {
    sc.validate()?;
    let cfg = cfg.clone().validate().map_err(SimError::Config)?;
    let latency = LatencyModel::MEASURED;
    let delay = latency.total_seconds();

    let mut synth = Synthesizer::new(sc, &cfg);
    let rate = synth.frame_rate();
    let mut engine = Engine::new(cfg.clone()).with_rate_limits(1.0 / rate);
    let mut commands = Vec::new();
    let mut rows = Vec::new();
    let (mut delay_sum, mut delay_max, mut decisions) = (0.0, 0.0f64, 0usize);

    while let Some(frame) = synth.next_frame(engine.robot()) {
        let now = frame.t + delay;
        let mut seen = BTreeMap::new();
        for ev in &frame.events {
            let mut obs = ev.obs.clone();
            obs.timestamp += delay;
            engine.observe(&obs)?;
            seen.insert(obs.track_id, ev.flickered);
        }
        let cmds = engine.decide(now);
        decisions += 1;
        delay_sum += now - frame.t;
        delay_max = delay_max.max(now - frame.t);

        let oracle = oracle_strategy(sc, frame.t, &cfg)?;
        let robot = engine.robot();
        for person in sc.persons.iter().filter(|p| p.present(frame.t, sc.duration)) {
            let script = person.scripted(frame.t);
            let in_camera = Bearing::new(
                wrap_degrees(script.alpha - robot.base_heading - robot.head_pan),
                script.beta - robot.head_tilt,
            );
            rows.push(FrameRow {
                frame: frame.index,
                t: frame.t,
                decided_at: now,
                track_id: person.track_id,
                visible: seen.contains_key(&person.track_id),
                flickered: seen.get(&person.track_id).copied().unwrap_or(false),
                oracle: oracle[&person.track_id],
                emitted: engine.strategy(person.track_id),
                target: engine.target(),
                off_axis: in_camera.off_axis(),
                head_pan: robot.head_pan,
                head_tilt: robot.head_tilt,
                base_heading: robot.base_heading,
            });
        }
        commands.extend(cmds);
    }

    let window = cfg.switch_frames() + cfg.window;
    let (metrics, tracks) = score(sc, &rows, &commands, window);
    Ok(ScenarioReport {
        version: scenario::SCHEMA_VERSION,
        seed: sc.seed,
        duration: sc.duration,
        frame_rate: rate,
        frames: synth.frames(),
        latency: LatencyStats {
            model: latency,
            per_frame_ms: latency.total_ms(),
            decisions,
            mean_decision_delay_ms: if decisions > 0 { delay_sum / decisions as f64 * 1000.0 } else { 0.0 },
            max_decision_delay_ms: delay_max * 1000.0,
        },
        metrics,
        tracks,
        commands,
        rows,
    })
}

fn score(sc: &Scenario, rows: &[FrameRow], commands: &[RobotCommand], window: usize) -> (Metrics, Vec<TrackReport>) {
    let mut tracks = Vec::new();
    let (mut switches, mut regimes, mut missed) = (0, 0, 0);
    let (mut evaluated, mut agreed, mut flickers) = (0, 0, 0);
    let mut delays = Vec::new();

    for person in &sc.persons {
        let id = person.track_id;
        let mine: Vec<&FrameRow> = rows.iter().filter(|r| r.track_id == id).collect();
        flickers += mine.iter().filter(|r| r.flickered).count();

        let mut timeline = Vec::new();
        let mut track_switches = 0;
        let mut last: Option<Option<EngagementStrategy>> = None;
        for r in &mine {
            if last != Some(r.emitted) {
                if r.emitted.is_some() {
                    track_switches += 1;
                }
                timeline.push(TimelineEntry { t: r.decided_at, strategy: r.emitted });
                last = Some(r.emitted);
            }
        }
        switches += track_switches;

        // regime boundaries: first frame and every oracle change
        let starts: Vec<usize> = (0..mine.len())
            .filter(|&i| i == 0 || mine[i].oracle != mine[i - 1].oracle || mine[i].frame != mine[i - 1].frame + 1)
            .collect();
        regimes += starts.len();
        let mut track_delays = Vec::new();
        for (k, &start) in starts.iter().enumerate() {
            let end = starts.get(k + 1).copied().unwrap_or(mine.len());
            let target = mine[start].oracle;
            match (start..end).find(|&i| mine[i].emitted == Some(target)) {
                Some(i) => track_delays.push(i - start + 1),
                None => missed += 1,
            }
            for row in &mine[(start + window).min(end)..end] {
                evaluated += 1;
                if row.emitted == Some(row.oracle) {
                    agreed += 1;
                }
            }
        }
        delays.extend(track_delays.iter().copied());

        tracks.push(TrackReport {
            track_id: id,
            switch_count: track_switches,
            speak_count: commands
                .iter()
                .filter(|c| c.target == Some(id) && matches!(c.action, Action::Speak { .. }))
                .count(),
            reaction_delays: track_delays,
            timeline,
        });
    }

    let metrics = Metrics {
        switch_count: switches,
        regime_changes: regimes,
        mean_reaction_delay_frames: if delays.is_empty() {
            0.0
        } else {
            delays.iter().sum::<usize>() as f64 / delays.len() as f64
        },
        max_reaction_delay_frames: delays.iter().copied().max().unwrap_or(0),
        missed_regimes: missed,
        agreement_fraction: if evaluated == 0 { 1.0 } else { agreed as f64 / evaluated as f64 },
        evaluated_frames: evaluated,
        transition_window_frames: window,
        speak_count: commands.iter().filter(|c| matches!(c.action, Action::Speak { .. })).count(),
        flicker_count: flickers,
    };
    (metrics, tracks)
}
