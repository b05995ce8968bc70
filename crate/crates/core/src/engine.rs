//! Decision pipeline shared by stream mode and the simulator:
//! observation -> attention -> filtered sentiment -> strategy -> commands.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::arbiter::{self, Action, EpisodeEnd, RobotCommand, RobotState, TargetCandidate};
use crate::attention::{self, AttentionError, AttentionEstimate, Bearing};
use crate::config::EngineConfig;
use crate::domain::{BBox, FaceObservation, TrackId};
use crate::policy::{self, EngagementStrategy};
use crate::sentiment::{self, SentimentError, SentimentState, TrackState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error(transparent)]
    Attention(#[from] AttentionError),
}

/// Everything the engine remembers about one tracked face.
#[derive(Debug, Clone)]
pub struct Track {
    pub filter: TrackState,
    pub bbox: BBox,
    pub bearing: Bearing,
    pub attention: AttentionEstimate,
    pub strategy: Option<EngagementStrategy>,
}

impl Track {
    pub fn state(&self) -> Option<SentimentState> {
        self.filter.filtered()
    }
}

impl AsRef<TrackState> for Track {
    fn as_ref(&self) -> &TrackState {
        &self.filter
    }
}

#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    tracks: BTreeMap<TrackId, Track>,
    robot: RobotState,
    target: Option<TrackId>,
    /// Seconds per decision tick when head and base rates are enforced.
    tick: Option<f64>,
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Self {
        Self { cfg, tracks: BTreeMap::new(), robot: RobotState::default(), target: None, tick: None }
    }

    /// Enforces head and base rate limits assuming `dt` seconds per tick.
    pub fn with_rate_limits(mut self, dt: f64) -> Self {
        self.tick = Some(dt);
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn robot(&self) -> &RobotState {
        &self.robot
    }

    pub fn target(&self) -> Option<TrackId> {
        self.target
    }

    pub fn track(&self, id: TrackId) -> Option<&Track> {
        self.tracks.get(&id)
    }

    pub fn tracks(&self) -> impl Iterator<Item = (&TrackId, &Track)> {
        self.tracks.iter()
    }

    pub fn strategy(&self, id: TrackId) -> Option<EngagementStrategy> {
        self.tracks.get(&id).and_then(|t| t.strategy)
    }

    /// Updates the observation's track and returns its current strategy.
    pub fn observe(&mut self, obs: &FaceObservation) -> Result<Option<EngagementStrategy>, EngineError> {
        let (bearing, att) = attention::observe_attention(obs, &self.cfg)?;
        let cfg = &self.cfg;
        let track = self.tracks.entry(obs.track_id).or_insert_with(|| Track {
            filter: TrackState::new(obs.track_id),
            bbox: obs.bbox,
            bearing,
            attention: att,
            strategy: None,
        });
        let filtered = sentiment::update_track(&mut track.filter, obs, &att, cfg)?;
        track.bbox = obs.bbox;
        track.bearing = bearing;
        track.attention = att;

        let previous = track.strategy;
        track.strategy = filtered.map(|s| policy::select_strategy(s, cfg));
        if previous == Some(EngagementStrategy::Engage) && track.strategy != previous {
            self.robot = arbiter::reset_episode(&self.robot, obs.track_id, EpisodeEnd::LeftEngage);
        }
        Ok(track.strategy)
    }

    /// Drops stale tracks, picks a target and plans this tick's commands.
    pub fn decide(&mut self, now: f64) -> Vec<RobotCommand> {
        for id in sentiment::expire_tracks(&mut self.tracks, now, self.cfg.track_timeout) {
            self.robot = arbiter::reset_episode(&self.robot, id, EpisodeEnd::Expired);
        }

        let candidates: Vec<TargetCandidate> = self
            .tracks
            .iter()
            .filter_map(|(id, t)| {
                Some(TargetCandidate { track_id: *id, state: t.state()?, strategy: t.strategy?, bbox: t.bbox })
            })
            .collect();
        self.target = arbiter::select_target(&candidates);

        let (next, actions) = match self.target {
            Some(id) => {
                let track = &self.tracks[&id];
                let strategy = track.strategy.expect("candidates carry a strategy");
                arbiter::plan_commands(id, strategy, track.bearing, &self.robot, &self.cfg)
            }
            None if self.robot.torso_height > 0.0 => {
                let mut next = self.robot.clone();
                let lower = Action::TorsoLift { height: 0.0 };
                next.apply(None, &lower);
                (next, vec![lower])
            }
            None => (self.robot.clone(), vec![Action::Idle]),
        };

        let (next, actions) = match self.tick {
            Some(dt) => arbiter::rate_limit(&self.robot, self.target, actions, dt, &self.cfg),
            None => (next, actions),
        };
        self.robot = next;
        let target = self.target;
        actions.into_iter().map(|action| RobotCommand { t: now, target, action }).collect()
    }
}
