//! Visual attention from head pose.
//!
//! A face counts as attending to the robot when its head facing direction
//! points within a cone around the face-to-camera direction. Camera frame:
//! `+x` image-right, `+y` up, `+z` along the optical axis into the scene.

use thiserror::Error;

use crate::config::EngineConfig;
use crate::domain::{BBox, FaceObservation};

/// Angular position of a face relative to the optical axis, as azimuth
/// (`alpha`, positive toward image-right) and elevation (`beta`, positive
/// up), in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bearing {
    pub alpha: f64,
    pub beta: f64,
}

impl Bearing {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    /// Unit vector from the camera toward the face.
    pub fn direction(&self) -> [f64; 3] {
        let (sa, ca) = self.alpha.to_radians().sin_cos();
        let (sb, cb) = self.beta.to_radians().sin_cos();
        [sa * cb, sb, ca * cb]
    }

    /// Angle between the optical axis and the face direction, degrees.
    pub fn off_axis(&self) -> f64 {
        let [x, y, z] = self.direction();
        x.hypot(y).atan2(z).to_degrees()
    }

    pub fn within_fov(&self, hfov: f64, vfov: f64) -> bool {
        self.alpha.abs() <= hfov / 2.0 + 1e-9 && self.beta.abs() <= vfov / 2.0 + 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttentionError {
    #[error("field of view {0} outside (0, 180) degrees")]
    FovOutOfRange(f64),
}

/// Pinhole back-projection of the bbox center to a bearing.
pub fn bearing_from_bbox(bbox: &BBox, hfov: f64, vfov: f64) -> Result<Bearing, AttentionError> {
    for fov in [hfov, vfov] {
        if !(fov > 0.0 && fov < 180.0) {
            return Err(AttentionError::FovOutOfRange(fov));
        }
    }
    let half_h = (hfov / 2.0).to_radians().tan();
    let half_v = (vfov / 2.0).to_radians().tan();
    Ok(Bearing {
        alpha: ((bbox.cx - 0.5) * 2.0 * half_h).atan().to_degrees(),
        beta: ((0.5 - bbox.cy) * 2.0 * half_v).atan().to_degrees(),
    })
}

/// Inverse of [`bearing_from_bbox`] for the center coordinates.
pub fn bbox_center_from_bearing(bearing: Bearing, hfov: f64, vfov: f64) -> (f64, f64) {
    let half_h = (hfov / 2.0).to_radians().tan();
    let half_v = (vfov / 2.0).to_radians().tan();
    let cx = 0.5 + bearing.alpha.to_radians().tan() / (2.0 * half_h);
    let cy = 0.5 - bearing.beta.to_radians().tan() / (2.0 * half_v);
    (cx, cy)
}

/// Unit vector the head is facing. Yaw and pitch of zero face the camera.
pub fn head_direction(yaw: f64, pitch: f64) -> [f64; 3] {
    let (sy, cy) = yaw.to_radians().sin_cos();
    let (sp, cp) = pitch.to_radians().sin_cos();
    [sy * cp, sp, -cy * cp]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionEstimate {
    /// Degrees between head facing and the face-to-camera direction.
    pub deviation: f64,
    pub score: f64,
    pub attentive: bool,
}

/// Angle between head facing and the direction back toward the camera.
pub fn deviation(yaw: f64, pitch: f64, bearing: Bearing) -> f64 {
    let f = head_direction(yaw, pitch);
    let d = bearing.direction();
    let to_camera = [-d[0], -d[1], -d[2]];
    let cross = [
        f[1] * to_camera[2] - f[2] * to_camera[1],
        f[2] * to_camera[0] - f[0] * to_camera[2],
        f[0] * to_camera[1] - f[1] * to_camera[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = f[0] * to_camera[0] + f[1] * to_camera[1] + f[2] * to_camera[2];
    sin.atan2(cos).to_degrees()
}

pub fn attention_score(yaw: f64, pitch: f64, bearing: Bearing, cfg: &EngineConfig) -> AttentionEstimate {
    estimate_from_deviation(deviation(yaw, pitch, bearing), cfg.attention_cone)
}

pub fn estimate_from_deviation(deviation: f64, cone: f64) -> AttentionEstimate {
    AttentionEstimate {
        deviation,
        score: (1.0 - deviation / (2.0 * cone)).clamp(0.0, 1.0),
        attentive: deviation <= cone,
    }
}

/// Bearing and attention for one observation. Roll plays no part.
pub fn observe_attention(
    obs: &FaceObservation,
    cfg: &EngineConfig,
) -> Result<(Bearing, AttentionEstimate), AttentionError> {
    let bearing = bearing_from_bbox(&obs.bbox, cfg.hfov, cfg.vfov)?;
    Ok((bearing, attention_score(obs.yaw, obs.pitch, bearing, cfg)))
}
