//! Behavior arbitration: picks one target among the tracked people and
//! turns its engagement strategy into head, base, torso and speech commands.

use std::collections::BTreeMap;

use crate::attention::Bearing;
use crate::config::EngineConfig;
use crate::domain::{BBox, TrackId};
use crate::policy::EngagementStrategy;
use crate::sentiment::SentimentState;

/// Slack for floating-point comparisons on angles, degrees.
pub const ANGLE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    /// Degrees relative to the base, positive toward image-right.
    pub head_pan: f64,
    /// Degrees, positive up.
    pub head_tilt: f64,
    /// Degrees relative to the starting heading, wrapped to (-180, 180].
    pub base_heading: f64,
    /// 0.0 down, 1.0 fully lifted.
    pub torso_height: f64,
    /// Whether the current engagement episode of a track has been greeted.
    pub greeted: BTreeMap<TrackId, bool>,
}

impl Default for RobotState {
    fn default() -> Self {
        Self { head_pan: 0.0, head_tilt: 0.0, base_heading: 0.0, torso_height: 0.0, greeted: BTreeMap::new() }
    }
}

impl RobotState {
    pub fn is_greeted(&self, track: TrackId) -> bool {
        self.greeted.get(&track).copied().unwrap_or(false)
    }

    /// Integrates one command as if executed instantly.
    pub fn apply(&mut self, target: Option<TrackId>, action: &Action) {
        match action {
            Action::HeadFollow { pan, tilt } | Action::AvertGaze { pan, tilt } => {
                self.head_pan = *pan;
                self.head_tilt = *tilt;
            }
            Action::BodyRotate { delta } => self.base_heading = wrap_degrees(self.base_heading + delta),
            Action::TorsoLift { height } => self.torso_height = *height,
            Action::Speak { .. } => {
                if let Some(id) = target {
                    self.greeted.insert(id, true);
                }
            }
            Action::Idle => {}
        }
    }
}

/// Wraps an angle to (-180, 180].
pub fn wrap_degrees(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Absolute head set-point, degrees.
    HeadFollow {
        pan: f64,
        tilt: f64,
    },
    /// Relative base rotation, degrees.
    BodyRotate {
        delta: f64,
    },
    TorsoLift {
        height: f64,
    },
    Speak {
        text: String,
    },
    /// Absolute head set-point that keeps the target off-center.
    AvertGaze {
        pan: f64,
        tilt: f64,
    },
    Idle,
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::HeadFollow { .. } => "head_follow",
            Action::BodyRotate { .. } => "body_rotate",
            Action::TorsoLift { .. } => "torso_lift",
            Action::Speak { .. } => "speak",
            Action::AvertGaze { .. } => "avert_gaze",
            Action::Idle => "idle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotCommand {
    /// Seconds.
    pub t: f64,
    pub target: Option<TrackId>,
    pub action: Action,
}

/// One tracked person competing for the robot's attention.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetCandidate {
    pub track_id: TrackId,
    pub state: SentimentState,
    pub strategy: EngagementStrategy,
    pub bbox: BBox,
}

fn priority(strategy: EngagementStrategy) -> u8 {
    match strategy {
        EngagementStrategy::Avoid => 0,
        EngagementStrategy::Engage => 1,
        EngagementStrategy::Attract => 2,
        EngagementStrategy::Ignore => 3,
    }
}

/// Avoid beats Engage beats Attract beats Ignore; then the larger (nearer)
/// face, then the lower track id.
pub fn select_target(candidates: &[TargetCandidate]) -> Option<TrackId> {
    candidates
        .iter()
        .min_by(|a, b| {
            priority(a.strategy)
                .cmp(&priority(b.strategy))
                .then_with(|| b.bbox.area().total_cmp(&a.bbox.area()))
                .then_with(|| a.track_id.cmp(&b.track_id))
        })
        .map(|c| c.track_id)
}

/// Head set-point that centers the target, handing off to the base when the
/// head would exceed its yaw limit.
fn face_target(bearing: Bearing, robot: &RobotState, cfg: &EngineConfig, allow_base: bool) -> Vec<Action> {
    let pan = robot.head_pan + bearing.alpha;
    let tilt = robot.head_tilt + bearing.beta;
    if pan.abs() <= cfg.head_yaw_limit {
        vec![Action::HeadFollow { pan, tilt }]
    } else if allow_base {
        vec![Action::BodyRotate { delta: pan }, Action::HeadFollow { pan: 0.0, tilt }]
    } else {
        vec![Action::HeadFollow { pan: pan.clamp(-cfg.head_yaw_limit, cfg.head_yaw_limit), tilt }]
    }
}

/// Minimum azimuth offset that puts a target at elevation `beta` at least
/// `cone` degrees off the optical axis.
fn required_offset(beta: f64, cone: f64) -> f64 {
    let cos_beta = beta.to_radians().cos();
    let ratio = cone.to_radians().cos() / cos_beta;
    if ratio >= 1.0 {
        0.0
    } else {
        ratio.acos().to_degrees()
    }
}

/// Head set-point keeping the target outside the central cone but inside
/// the horizontal field of view. Holds still when already there.
fn avert_gaze(bearing: Bearing, robot: &RobotState, cfg: &EngineConfig) -> Action {
    let offset = required_offset(bearing.beta, cfg.avert_cone);
    let tilt = robot.head_tilt;
    if bearing.alpha.abs() >= offset - ANGLE_EPS && bearing.alpha.abs() <= cfg.hfov / 2.0 {
        return Action::AvertGaze { pan: robot.head_pan, tilt };
    }
    // Panning by `delta` moves the target to azimuth `alpha - delta`.
    let mut options = [bearing.alpha - offset, bearing.alpha + offset];
    options.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then_with(|| b.total_cmp(a)));
    let pan = options
        .iter()
        .map(|delta| robot.head_pan + delta)
        .find(|pan| pan.abs() <= cfg.head_yaw_limit)
        .unwrap_or_else(|| (robot.head_pan + options[0]).clamp(-cfg.head_yaw_limit, cfg.head_yaw_limit));
    Action::AvertGaze { pan, tilt }
}

/// Commands realizing `strategy` toward the target, and the robot state
/// after executing them.
pub fn plan_commands(
    target: TrackId,
    strategy: EngagementStrategy,
    bearing: Bearing,
    robot: &RobotState,
    cfg: &EngineConfig,
) -> (RobotState, Vec<Action>) {
    let mut actions = Vec::new();
    let lift = robot.torso_height < 1.0;
    match strategy {
        EngagementStrategy::Engage => {
            if lift {
                actions.push(Action::TorsoLift { height: 1.0 });
            }
            actions.extend(face_target(bearing, robot, cfg, true));
            if !robot.is_greeted(target) {
                actions.push(Action::Speak { text: cfg.greeting.clone() });
            }
        }
        EngagementStrategy::Attract => {
            if lift {
                actions.push(Action::TorsoLift { height: 1.0 });
            }
            actions.extend(face_target(bearing, robot, cfg, true));
        }
        EngagementStrategy::Avoid => actions.push(avert_gaze(bearing, robot, cfg)),
        EngagementStrategy::Ignore => actions.extend(face_target(bearing, robot, cfg, false)),
    }
    let mut next = robot.clone();
    for action in &actions {
        next.apply(Some(target), action);
    }
    (next, actions)
}

/// Why an engagement episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeEnd {
    /// The track's strategy moved from Engage to something else.
    LeftEngage,
    /// The track disappeared.
    Expired,
}

/// Ends a track's engagement episode so a later Engage greets again.
pub fn reset_episode(robot: &RobotState, track: TrackId, end: EpisodeEnd) -> RobotState {
    let mut next = robot.clone();
    match end {
        EpisodeEnd::LeftEngage => {
            if let Some(flag) = next.greeted.get_mut(&track) {
                *flag = false;
            }
        }
        EpisodeEnd::Expired => {
            next.greeted.remove(&track);
        }
    }
    next
}

/// Clips head and base motion to the configured rates over `dt` seconds and
/// returns the resulting state with the clipped commands.
pub fn rate_limit(
    prev: &RobotState,
    target: Option<TrackId>,
    actions: Vec<Action>,
    dt: f64,
    cfg: &EngineConfig,
) -> (RobotState, Vec<Action>) {
    let head_step = cfg.head_pan_rate * dt;
    let base_step = cfg.base_rotate_rate * dt;
    let mut state = prev.clone();
    let mut out = Vec::with_capacity(actions.len());
    for action in actions {
        let limited = match action {
            Action::HeadFollow { pan, tilt } => Action::HeadFollow {
                pan: prev.head_pan + (pan - prev.head_pan).clamp(-head_step, head_step),
                tilt: prev.head_tilt + (tilt - prev.head_tilt).clamp(-head_step, head_step),
            },
            Action::AvertGaze { pan, tilt } => Action::AvertGaze {
                pan: prev.head_pan + (pan - prev.head_pan).clamp(-head_step, head_step),
                tilt: prev.head_tilt + (tilt - prev.head_tilt).clamp(-head_step, head_step),
            },
            Action::BodyRotate { delta } => Action::BodyRotate { delta: delta.clamp(-base_step, base_step) },
            other => other,
        };
        state.apply(target, &limited);
        out.push(limited);
    }
    (state, out)
}
