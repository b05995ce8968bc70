//! Engine configuration: defaults, `key = value` file parsing and
//! validation.
//!
//! The file format is one `key = value` pair per line with `#` comments.
//! Strategy table overrides use `polarity.attention = strategy` keys, e.g.
//! `neutral.attentive = engage`. An override must list all eight cells.

use std::fmt;
use std::path::Path;

use crate::policy::{EngagementStrategy, StrategyTable};
use crate::sentiment::{Polarity, SentimentState};

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Camera horizontal field of view, degrees.
    pub hfov: f64,
    /// Camera vertical field of view, degrees.
    pub vfov: f64,
    /// Attention cone half-angle, degrees.
    pub attention_cone: f64,
    /// Minimum top-class probability before falling back to valence.
    pub polarity_floor: f64,
    pub valence_pos: f64,
    pub valence_neg: f64,
    /// Filter window, frames.
    pub window: usize,
    /// Dwell, frames.
    pub dwell: usize,
    /// Majority fraction of the window required to switch.
    pub majority: f64,
    /// Degrees.
    pub head_yaw_limit: f64,
    /// Avert cone half-angle, degrees.
    pub avert_cone: f64,
    /// Degrees per second.
    pub head_pan_rate: f64,
    /// Degrees per second.
    pub base_rotate_rate: f64,
    /// Hz.
    pub frame_rate: f64,
    /// Seconds without observations before a track is dropped.
    pub track_timeout: f64,
    pub greeting: String,
    /// TCP listen port for stream mode.
    pub port: u16,
    pub strategy_table: StrategyTable,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            hfov: 60.0,
            vfov: 45.0,
            attention_cone: 15.0,
            polarity_floor: 0.4,
            valence_pos: 0.2,
            valence_neg: -0.2,
            window: 15,
            dwell: 5,
            majority: 0.6,
            head_yaw_limit: 60.0,
            avert_cone: 10.0,
            head_pan_rate: 90.0,
            base_rotate_rate: 30.0,
            frame_rate: 30.0,
            track_timeout: 1.0,
            greeting: "Hello! Can I help you?".to_string(),
            port: 7878,
            strategy_table: StrategyTable::default(),
        }
    }
}

/// One violated constraint or unparseable entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every problem found while loading or validating a config.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigReport {
    pub violations: Vec<Violation>,
}

impl ConfigReport {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { field: field.into(), message: message.into() });
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn mentions(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }
}

impl fmt::Display for ConfigReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigReport {}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config:\n{0}")]
    Invalid(ConfigReport),
}

impl EngineConfig {
    /// Returns the config unchanged iff every constraint holds.
    pub fn validate(self) -> Result<Self, ConfigReport> {
        let report = self.violations();
        if report.is_empty() {
            Ok(self)
        } else {
            Err(report)
        }
    }

    pub fn violations(&self) -> ConfigReport {
        let mut r = ConfigReport::default();
        let positive = |v: f64| v.is_finite() && v > 0.0;
        for (name, fov) in [("hfov", self.hfov), ("vfov", self.vfov)] {
            if !(fov.is_finite() && fov > 0.0 && fov < 180.0) {
                r.push(name, format!("field of view must lie in (0, 180), got {fov}"));
            }
        }
        if !(positive(self.attention_cone) && self.attention_cone < self.hfov / 2.0) {
            r.push(
                "attention_cone",
                format!("attention cone must lie in (0, hfov/2 = {}), got {}", self.hfov / 2.0, self.attention_cone),
            );
        }
        if !(0.0..=1.0).contains(&self.polarity_floor) {
            r.push("polarity_floor", format!("polarity floor must lie in [0, 1], got {}", self.polarity_floor));
        }
        if !(-1.0..=1.0).contains(&self.valence_pos) {
            r.push("valence_pos", format!("valence threshold must lie in [-1, 1], got {}", self.valence_pos));
        }
        if !(-1.0..=1.0).contains(&self.valence_neg) {
            r.push("valence_neg", format!("valence threshold must lie in [-1, 1], got {}", self.valence_neg));
        }
        if self.valence_neg >= self.valence_pos {
            r.push("valence_neg", "negative valence threshold must be below the positive threshold");
        }
        if self.window == 0 {
            r.push("window", "window must be at least 1 frame");
        }
        if self.dwell == 0 {
            r.push("dwell", "dwell must be at least 1 frame");
        }
        if self.dwell > self.window {
            r.push("dwell", format!("dwell exceeds window ({} > {})", self.dwell, self.window));
        }
        if self.majority.is_nan() || self.majority <= 0.5 {
            r.push("majority", format!("majority fraction must exceed 0.5, got {}", self.majority));
        } else if self.majority > 1.0 {
            r.push("majority", format!("majority fraction must not exceed 1, got {}", self.majority));
        }
        if !(positive(self.head_yaw_limit) && self.head_yaw_limit <= 180.0) {
            r.push("head_yaw_limit", format!("head yaw limit must lie in (0, 180], got {}", self.head_yaw_limit));
        }
        if !(positive(self.avert_cone) && self.avert_cone < self.hfov / 2.0) {
            r.push(
                "avert_cone",
                format!("avert cone must lie in (0, hfov/2 = {}), got {}", self.hfov / 2.0, self.avert_cone),
            );
        } else if self.avert_cone >= self.head_yaw_limit {
            r.push("avert_cone", "avert cone must be below the head yaw limit");
        }
        for (name, rate) in [
            ("head_pan_rate", self.head_pan_rate),
            ("base_rotate_rate", self.base_rotate_rate),
            ("frame_rate", self.frame_rate),
        ] {
            if !positive(rate) {
                r.push(name, format!("rate must be positive, got {rate}"));
            }
        }
        if !positive(self.track_timeout) {
            r.push("track_timeout", format!("track timeout must be positive, got {}", self.track_timeout));
        }
        if self.greeting.trim().is_empty() {
            r.push("greeting", "greeting must not be empty");
        }
        r
    }

    /// Number of window frames the candidate must hold, `ceil(m * W)`.
    pub fn majority_count(&self) -> usize {
        // guard against 0.6 * 15 landing a hair above 9
        ((self.majority * self.window as f64) - 1e-9).ceil().max(0.0) as usize
    }

    /// Worst-case frames from a regime change to the filtered switch.
    pub fn switch_frames(&self) -> usize {
        self.majority_count().max(self.dwell)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text).map_err(ConfigError::Invalid)
    }

    /// Parses and validates a config document, collecting every problem.
    pub fn parse(text: &str) -> Result<Self, ConfigReport> {
        let mut cfg = EngineConfig::default();
        let mut report = ConfigReport::default();
        let mut cells = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                report.push(format!("line {lineno}"), "expected `key = value`");
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if let Some((pol, att)) = key.split_once('.') {
                match parse_cell(pol, att, value) {
                    Ok(cell) => cells.push(cell),
                    Err(msg) => report.push(key, format!("line {lineno}: {msg}")),
                }
                continue;
            }
            if let Err(msg) = cfg.set(key, value) {
                report.push(key, format!("line {lineno}: {msg}"));
            }
        }

        if !cells.is_empty() {
            match StrategyTable::from_cells(cells) {
                Ok(table) => cfg.strategy_table = table,
                Err(missing) => {
                    for cell in missing {
                        report.push(cell_key(cell), "strategy table override is missing this cell");
                    }
                }
            }
        }

        report.violations.extend(cfg.violations().violations);
        if report.is_empty() {
            Ok(cfg)
        } else {
            Err(report)
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(value: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            value.parse::<T>().map_err(|e| format!("invalid value {value:?}: {e}"))
        }
        match key {
            "hfov" => self.hfov = num(value)?,
            "vfov" => self.vfov = num(value)?,
            "attention_cone" => self.attention_cone = num(value)?,
            "polarity_floor" => self.polarity_floor = num(value)?,
            "valence_pos" => self.valence_pos = num(value)?,
            "valence_neg" => self.valence_neg = num(value)?,
            "window" => self.window = num(value)?,
            "dwell" => self.dwell = num(value)?,
            "majority" => self.majority = num(value)?,
            "head_yaw_limit" => self.head_yaw_limit = num(value)?,
            "avert_cone" => self.avert_cone = num(value)?,
            "head_pan_rate" => self.head_pan_rate = num(value)?,
            "base_rotate_rate" => self.base_rotate_rate = num(value)?,
            "frame_rate" => self.frame_rate = num(value)?,
            "track_timeout" => self.track_timeout = num(value)?,
            "port" => self.port = num(value)?,
            "greeting" => self.greeting = value.trim_matches('"').to_string(),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Renders the config in the file format accepted by [`EngineConfig::parse`].
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("hfov", self.hfov.to_string());
        kv("vfov", self.vfov.to_string());
        kv("attention_cone", self.attention_cone.to_string());
        kv("polarity_floor", self.polarity_floor.to_string());
        kv("valence_pos", self.valence_pos.to_string());
        kv("valence_neg", self.valence_neg.to_string());
        kv("window", self.window.to_string());
        kv("dwell", self.dwell.to_string());
        kv("majority", self.majority.to_string());
        kv("head_yaw_limit", self.head_yaw_limit.to_string());
        kv("avert_cone", self.avert_cone.to_string());
        kv("head_pan_rate", self.head_pan_rate.to_string());
        kv("base_rotate_rate", self.base_rotate_rate.to_string());
        kv("frame_rate", self.frame_rate.to_string());
        kv("track_timeout", self.track_timeout.to_string());
        kv("greeting", format!("\"{}\"", self.greeting));
        kv("port", self.port.to_string());
        for (cell, strategy) in self.strategy_table.iter() {
            kv(&cell_key(cell), strategy.name().to_string());
        }
        out
    }
}

fn parse_cell(polarity: &str, attention: &str, value: &str) -> Result<(SentimentState, EngagementStrategy), String> {
    let polarity: Polarity = polarity.parse()?;
    let attentive = match attention {
        "attentive" => true,
        "inattentive" => false,
        other => return Err(format!("unknown attention state {other:?}")),
    };
    let strategy: EngagementStrategy = value.parse()?;
    Ok((SentimentState { polarity, attentive }, strategy))
}

pub fn cell_key(cell: SentimentState) -> String {
    format!("{}.{}", cell.polarity.name(), if cell.attentive { "attentive" } else { "inattentive" })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(EngineConfig::default().validate().is_ok());
        assert_eq!(EngineConfig::default().majority_count(), 9);
        assert_eq!(EngineConfig::default().switch_frames(), 9);
    }

    #[test]
    fn weak_majority_is_rejected() {
        let cfg = EngineConfig { majority: 0.4, ..Default::default() };
        let report = cfg.validate().unwrap_err();
        assert!(report.to_string().contains("majority fraction must exceed 0.5"));
    }

    #[test]
    fn dwell_longer_than_window_is_rejected() {
        let cfg = EngineConfig { dwell: 20, window: 15, ..Default::default() };
        let report = cfg.validate().unwrap_err();
        assert!(report.mentions("dwell"));
        assert!(report.to_string().contains("dwell exceeds window"));
    }

    #[test]
    fn every_violation_is_listed() {
        let cfg = EngineConfig { majority: 0.3, dwell: 40, head_pan_rate: 0.0, ..Default::default() };
        let report = cfg.validate().unwrap_err();
        assert!(report.mentions("majority"));
        assert!(report.mentions("dwell"));
        assert!(report.mentions("head_pan_rate"));
    }

    #[test]
    fn document_round_trip() {
        let cfg = EngineConfig { window: 21, dwell: 7, greeting: "Hi there".into(), ..Default::default() };
        assert_eq!(EngineConfig::parse(&cfg.to_document()).unwrap(), cfg);
    }

    #[test]
    fn parses_comments_and_overrides() {
        let text = "\
# camera
hfov = 70   # wider lens
window = 9
dwell = 3
";
        let cfg = EngineConfig::parse(text).unwrap();
        assert_eq!(cfg.hfov, 70.0);
        assert_eq!(cfg.window, 9);
        assert_eq!(cfg.dwell, 3);
    }

    #[test]
    fn incomplete_table_names_missing_cell() {
        let mut text = String::new();
        for (cell, strategy) in StrategyTable::default().iter() {
            if cell_key(cell) != "negative_soft.attentive" {
                text.push_str(&format!("{} = {}\n", cell_key(cell), strategy));
            }
        }
        let report = EngineConfig::parse(&text).unwrap_err();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].field, "negative_soft.attentive");
    }

    #[test]
    fn unknown_key_and_bad_value_are_reported() {
        let report = EngineConfig::parse("speed = 3\nwindow = many\n").unwrap_err();
        assert!(report.mentions("speed"));
        assert!(report.mentions("window"));
    }
}
