//! Newline-delimited JSON wire format: perception events in, robot
//! commands out.
//!
//! Event line:
//! `{"t":0.033,"track_id":1,"bbox":[0.5,0.5,0.1,0.1],"yaw":0.0,"pitch":0.0,"roll":0.0,
//!   "emotions":{"neutral":0.0,"happy":1.0,...},"valence":0.7,"arousal":0.2}`
//!
//! Command line: `{"t":1.5,"cmd":"speak","target":3,"params":{"text":"hello"}}`

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::arbiter::{Action, RobotCommand};
use crate::domain::{normalize_emotions, BBox, Emotion, FaceObservation, TrackId};

/// A record that could not be decoded.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordError {
    pub field: Option<String>,
    pub message: String,
}

impl RecordError {
    fn malformed(message: impl Into<String>) -> Self {
        Self { field: None, message: message.into() }
    }

    fn missing(field: &str) -> Self {
        Self { field: Some(field.to_string()), message: format!("missing field {field}") }
    }

    fn domain(field: &str, message: impl Into<String>) -> Self {
        Self { field: Some(field.to_string()), message: message.into() }
    }
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RecordError {}

/// A [`RecordError`] tagged with its 1-based line number in the stream.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {error}")]
pub struct LineError {
    pub line: usize,
    pub error: RecordError,
}

#[derive(Deserialize)]
struct RawEvent {
    t: Option<f64>,
    track_id: Option<TrackId>,
    bbox: Option<[f64; 4]>,
    yaw: Option<f64>,
    pitch: Option<f64>,
    roll: Option<f64>,
    emotions: Option<BTreeMap<String, f64>>,
    valence: Option<f64>,
    arousal: Option<f64>,
}

/// Decodes one event line into a validated observation. Emotions are
/// renormalized to sum to one; unknown top-level keys are ignored.
pub fn parse_event(line: &str) -> Result<FaceObservation, RecordError> {
    let raw: RawEvent = serde_json::from_str(line).map_err(|e| RecordError::malformed(e.to_string()))?;
    fn req<T>(v: Option<T>, field: &str) -> Result<T, RecordError> {
        v.ok_or_else(|| RecordError::missing(field))
    }
    let t = req(raw.t, "t")?;
    let track_id = req(raw.track_id, "track_id")?;
    let [cx, cy, w, h] = req(raw.bbox, "bbox")?;
    let yaw = req(raw.yaw, "yaw")?;
    let pitch = req(raw.pitch, "pitch")?;
    let roll = req(raw.roll, "roll")?;
    let emotions = req(raw.emotions, "emotions")?;
    let valence = req(raw.valence, "valence")?;
    let arousal = req(raw.arousal, "arousal")?;

    let emotions = normalize_emotions(emotions.iter().map(|(k, v)| (k.as_str(), *v)))
        .map_err(|e| RecordError::domain("emotions", e.to_string()))?;
    let obs = FaceObservation {
        timestamp: t,
        track_id,
        bbox: BBox { cx, cy, w, h },
        yaw,
        pitch,
        roll,
        emotions,
        valence,
        arousal,
    };
    obs.validate().map_err(|e| RecordError::domain(e.field, e.to_string()))?;
    Ok(obs)
}

#[derive(Serialize)]
struct EmotionsOut {
    neutral: f64,
    happy: f64,
    disgust: f64,
    fear: f64,
    surprise: f64,
    anger: f64,
    sadness: f64,
}

#[derive(Serialize)]
struct EventOut {
    t: f64,
    track_id: TrackId,
    bbox: [f64; 4],
    yaw: f64,
    pitch: f64,
    roll: f64,
    emotions: EmotionsOut,
    valence: f64,
    arousal: f64,
}

/// Encodes an observation as one event line (no trailing newline).
pub fn emit_event(obs: &FaceObservation) -> String {
    let e = &obs.emotions;
    let out = EventOut {
        t: obs.timestamp,
        track_id: obs.track_id,
        bbox: [obs.bbox.cx, obs.bbox.cy, obs.bbox.w, obs.bbox.h],
        yaw: obs.yaw,
        pitch: obs.pitch,
        roll: obs.roll,
        emotions: EmotionsOut {
            neutral: e.get(Emotion::Neutral),
            happy: e.get(Emotion::Happy),
            disgust: e.get(Emotion::Disgust),
            fear: e.get(Emotion::Fear),
            surprise: e.get(Emotion::Surprise),
            anger: e.get(Emotion::Anger),
            sadness: e.get(Emotion::Sadness),
        },
        valence: obs.valence,
        arousal: obs.arousal,
    };
    serde_json::to_string(&out).expect("event serialization is infallible")
}

#[derive(Serialize)]
#[serde(untagged)]
enum Params<'a> {
    Head { pan: f64, tilt: f64 },
    Rotate { delta: f64 },
    Torso { height: f64 },
    Speech { text: &'a str },
    Empty {},
}

/// Serializable view of a command with keys in wire order.
#[derive(Serialize)]
pub struct CommandRecord<'a> {
    t: f64,
    cmd: &'static str,
    target: Option<TrackId>,
    params: Params<'a>,
}

impl<'a> From<&'a RobotCommand> for CommandRecord<'a> {
    fn from(cmd: &'a RobotCommand) -> Self {
        let params = match &cmd.action {
            Action::HeadFollow { pan, tilt } | Action::AvertGaze { pan, tilt } => {
                Params::Head { pan: *pan, tilt: *tilt }
            }
            Action::BodyRotate { delta } => Params::Rotate { delta: *delta },
            Action::TorsoLift { height } => Params::Torso { height: *height },
            Action::Speak { text } => Params::Speech { text },
            Action::Idle => Params::Empty {},
        };
        CommandRecord { t: cmd.t, cmd: cmd.action.name(), target: cmd.target, params }
    }
}

/// Encodes a command as one line with keys in the order t, cmd, target,
/// params (no trailing newline).
pub fn emit_command(cmd: &RobotCommand) -> String {
    serde_json::to_string(&CommandRecord::from(cmd)).expect("command serialization is infallible")
}

#[derive(Deserialize)]
struct RawCommand {
    t: f64,
    cmd: String,
    target: Option<TrackId>,
    params: serde_json::Map<String, Value>,
}

/// Decodes a command line. Parameter keys must match the command exactly.
pub fn parse_command(line: &str) -> Result<RobotCommand, RecordError> {
    let raw: RawCommand = serde_json::from_str(line).map_err(|e| RecordError::malformed(e.to_string()))?;
    let params = &raw.params;
    let expect_keys = |keys: &[&str]| -> Result<(), RecordError> {
        if params.len() == keys.len() && keys.iter().all(|k| params.contains_key(*k)) {
            Ok(())
        } else {
            Err(RecordError::domain("params", format!("{} expects params {:?}", raw.cmd, keys)))
        }
    };
    let num = |key: &str| -> Result<f64, RecordError> {
        params
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| RecordError::domain(key, format!("{key} must be a number")))
    };
    let action = match raw.cmd.as_str() {
        "head_follow" | "avert_gaze" => {
            expect_keys(&["pan", "tilt"])?;
            let (pan, tilt) = (num("pan")?, num("tilt")?);
            if raw.cmd == "head_follow" {
                Action::HeadFollow { pan, tilt }
            } else {
                Action::AvertGaze { pan, tilt }
            }
        }
        "body_rotate" => {
            expect_keys(&["delta"])?;
            Action::BodyRotate { delta: num("delta")? }
        }
        "torso_lift" => {
            expect_keys(&["height"])?;
            Action::TorsoLift { height: num("height")? }
        }
        "speak" => {
            expect_keys(&["text"])?;
            let text = params["text"]
                .as_str()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| RecordError::domain("text", "text must be a non-empty string"))?;
            Action::Speak { text: text.to_string() }
        }
        "idle" => {
            expect_keys(&[])?;
            Action::Idle
        }
        other => return Err(RecordError::domain("cmd", format!("unknown command {other:?}"))),
    };
    Ok(RobotCommand { t: raw.t, target: raw.target, action })
}

/// Iterates over the events of a line stream. Blank lines are skipped; a
/// bad line yields an error and the stream continues.
pub struct EventReader<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> EventReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, line: 0, buf: String::new() }
    }

    /// Line number of the last line read.
    pub fn line(&self) -> usize {
        self.line
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = std::io::Result<Result<FaceObservation, LineError>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {
                    self.line += 1;
                    let text = self.buf.trim();
                    if text.is_empty() {
                        continue;
                    }
                    let line = self.line;
                    return Some(Ok(parse_event(text).map_err(|error| LineError { line, error })));
                }
                Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                    // non-UTF-8 line: report and move on
                    self.line += 1;
                    let line = self.line;
                    let mut skip = Vec::new();
                    if let Err(e) = self.inner.read_until(b'\n', &mut skip) {
                        return Some(Err(e));
                    }
                    return Some(Ok(Err(LineError { line, error: RecordError::malformed("line is not valid UTF-8") })));
                }
                Err(e) => return Some(Err(e)),
            }
        }
    }
}
