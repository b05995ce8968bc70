//! Strategy table: maps a filtered sentiment state to one of the four
//! engagement strategies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::sentiment::{Polarity, SentimentState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngagementStrategy {
    Engage,
    Attract,
    Avoid,
    Ignore,
}

impl EngagementStrategy {
    pub const ALL: [EngagementStrategy; 4] = [
        EngagementStrategy::Engage,
        EngagementStrategy::Attract,
        EngagementStrategy::Avoid,
        EngagementStrategy::Ignore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EngagementStrategy::Engage => "engage",
            EngagementStrategy::Attract => "attract",
            EngagementStrategy::Avoid => "avoid",
            EngagementStrategy::Ignore => "ignore",
        }
    }
}

impl fmt::Display for EngagementStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngagementStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.iter().copied().find(|v| v.name() == s).ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

/// Total lookup table over all eight (polarity, attentive) cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategyTable {
    cells: [[EngagementStrategy; 2]; 4],
}

impl StrategyTable {
    pub fn get(&self, state: SentimentState) -> EngagementStrategy {
        self.cells[state.polarity.index()][state.attentive as usize]
    }

    pub fn set(&mut self, state: SentimentState, strategy: EngagementStrategy) {
        self.cells[state.polarity.index()][state.attentive as usize] = strategy;
    }

    /// Builds a table from explicit cells. Every cell must be listed.
    pub fn from_cells<I>(cells: I) -> Result<Self, Vec<SentimentState>>
    where
        I: IntoIterator<Item = (SentimentState, EngagementStrategy)>,
    {
        let mut table = Self::default();
        let mut seen = [[false; 2]; 4];
        for (state, strategy) in cells {
            table.set(state, strategy);
            seen[state.polarity.index()][state.attentive as usize] = true;
        }
        let missing: Vec<_> =
            SentimentState::all().filter(|s| !seen[s.polarity.index()][s.attentive as usize]).collect();
        if missing.is_empty() {
            Ok(table)
        } else {
            Err(missing)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (SentimentState, EngagementStrategy)> + '_ {
        SentimentState::all().map(move |s| (s, self.get(s)))
    }
}

impl Default for StrategyTable {
    fn default() -> Self {
        use EngagementStrategy::*;
        let mut cells = [[Ignore; 2]; 4];
        // [inattentive, attentive]
        cells[Polarity::Positive.index()] = [Attract, Engage];
        cells[Polarity::NegativeStrong.index()] = [Ignore, Avoid];
        cells[Polarity::NegativeSoft.index()] = [Ignore, Attract];
        cells[Polarity::Neutral.index()] = [Ignore, Attract];
        Self { cells }
    }
}

pub fn select_strategy(state: SentimentState, cfg: &EngineConfig) -> EngagementStrategy {
    cfg.strategy_table.get(state)
}
