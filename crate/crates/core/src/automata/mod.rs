//! Cellular automata on grids and on the network's adjacency graph, with an
//! empirical Class I-IV classifier.

mod classify;
mod graph;
mod grid;
mod pattern;

pub use classify::{classify_rule, CaClass, ClassReport, DetectorConfig, SoupEvidence};
pub use graph::{step_graph, step_indexed};
pub use grid::{step_grid, Boundary, GridState};
pub use pattern::{parse_pattern, to_pattern};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomataError {
    #[error("rule set is invalid: {0}")]
    InvalidRule(String),
    #[error("cell state {0} is outside the rule's alphabet of {1}")]
    StateOutOfRange(u8, u8),
    #[error("this operation needs a {0} rule")]
    WrongMode(&'static str),
    #[error("node {0} has a state but is missing from the adjacency graph")]
    MissingNode(String),
    #[error("node {0} is in the adjacency graph but has no state")]
    MissingState(String),
    #[error("horizon {horizon} is smaller than the cycle-detection window {window}")]
    HorizonTooShort { horizon: usize, window: usize },
    #[error("at least one soup is required")]
    NoSoups,
    #[error("pattern line {line}: {message}")]
    Pattern { line: usize, message: String },
    #[error("grid dimensions must be positive")]
    EmptyGrid,
}

/// One transition: a node in state `from` with between `min` and `max`
/// neighbors in state `counted` moves to `to`. The first matching rule wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub from: u8,
    pub counted: u8,
    pub min: usize,
    pub max: usize,
    pub to: u8,
}

/// A total transition table: every state falls back to its default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub states: u8,
    pub rules: Vec<ThresholdRule>,
    pub defaults: Vec<u8>,
}

impl ThresholdTable {
    pub fn next(&self, current: u8, counts: &[usize]) -> u8 {
        self.rules
            .iter()
            .find(|r| r.from == current && (r.min..=r.max).contains(&counts[r.counted as usize]))
            .map_or(self.defaults[current as usize], |r| r.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RuleSet {
    /// Two states; a dead cell becomes alive on a `born` live-neighbor count
    /// and a live cell stays alive on a `survive` count.
    GridTotalistic { born: BTreeSet<u8>, survive: BTreeSet<u8> },
    GraphThreshold(ThresholdTable),
}

/// Business states on the network.
pub mod business_state {
    pub const DEAD: u8 = 0;
    pub const AT_RISK: u8 = 1;
    pub const STABLE: u8 = 2;
    pub const GROWING: u8 = 3;
}

impl RuleSet {
    pub fn totalistic(born: impl IntoIterator<Item = u8>, survive: impl IntoIterator<Item = u8>) -> Self {
        RuleSet::GridTotalistic {
            born: born.into_iter().collect(),
            survive: survive.into_iter().collect(),
        }
    }

    /// B3/S23.
    pub fn life() -> Self {
        Self::totalistic([3], [2, 3])
    }

    /// B3/S23 written as a threshold table over state-1 neighbor counts.
    pub fn life_threshold() -> Self {
        RuleSet::GraphThreshold(ThresholdTable {
            states: 2,
            rules: vec![
                ThresholdRule { from: 0, counted: 1, min: 3, max: 3, to: 1 },
                ThresholdRule { from: 1, counted: 1, min: 2, max: 3, to: 1 },
            ],
            defaults: vec![0, 0],
        })
    }

    /// Four-state business table: growing partners lift their at-risk and
    /// stable neighbors, isolation erodes everyone one level, dead stays dead.
    pub fn business() -> Self {
        use business_state::*;
        RuleSet::GraphThreshold(ThresholdTable {
            states: 4,
            rules: vec![
                ThresholdRule { from: AT_RISK, counted: GROWING, min: 1, max: usize::MAX, to: STABLE },
                ThresholdRule { from: AT_RISK, counted: STABLE, min: 2, max: usize::MAX, to: AT_RISK },
                ThresholdRule { from: STABLE, counted: GROWING, min: 2, max: usize::MAX, to: GROWING },
                ThresholdRule { from: STABLE, counted: STABLE, min: 1, max: usize::MAX, to: STABLE },
                ThresholdRule { from: STABLE, counted: GROWING, min: 1, max: 1, to: STABLE },
                ThresholdRule { from: GROWING, counted: DEAD, min: 3, max: usize::MAX, to: STABLE },
                ThresholdRule { from: GROWING, counted: AT_RISK, min: 3, max: usize::MAX, to: STABLE },
            ],
            defaults: vec![DEAD, DEAD, AT_RISK, GROWING],
        })
    }

    /// Parses `B3/S23` notation; either half may be empty (`B/S`).
    pub fn from_notation(text: &str) -> Result<Self, AutomataError> {
        let bad = || AutomataError::InvalidRule(format!("expected B<digits>/S<digits>, got {text:?}"));
        let (b, s) = text.trim().split_once('/').ok_or_else(bad)?;
        let digits = |part: &str, prefix: char| -> Result<Vec<u8>, AutomataError> {
            let rest = part.strip_prefix(prefix).or_else(|| part.strip_prefix(prefix.to_ascii_lowercase())).ok_or_else(bad)?;
            rest.chars().map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad)).collect()
        };
        let rule = Self::totalistic(digits(b, 'B')?, digits(s, 'S')?);
        rule.validate()?;
        Ok(rule)
    }

    pub fn states(&self) -> u8 {
        match self {
            RuleSet::GridTotalistic { .. } => 2,
            RuleSet::GraphThreshold(t) => t.states,
        }
    }

    pub fn validate(&self) -> Result<(), AutomataError> {
        match self {
            RuleSet::GridTotalistic { born, survive } => {
                if let Some(c) = born.iter().chain(survive).find(|&&c| c > 8) {
                    return Err(AutomataError::InvalidRule(format!("neighbor count {c} exceeds 8")));
                }
            }
            RuleSet::GraphThreshold(t) => {
                if t.states < 2 {
                    return Err(AutomataError::InvalidRule("at least two states are required".into()));
                }
                if t.defaults.len() != t.states as usize {
                    return Err(AutomataError::InvalidRule(format!(
                        "{} defaults for {} states",
                        t.defaults.len(),
                        t.states
                    )));
                }
                if t.defaults.iter().any(|&d| d >= t.states) {
                    return Err(AutomataError::InvalidRule("default state outside the alphabet".into()));
                }
                for r in &t.rules {
                    if r.from >= t.states || r.counted >= t.states || r.to >= t.states {
                        return Err(AutomataError::InvalidRule(format!("rule {r:?} names a state outside the alphabet")));
                    }
                    if r.min > r.max {
                        return Err(AutomataError::InvalidRule(format!("rule {r:?} has min > max")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Next state of a cell given its state and per-state neighbor counts.
    pub(crate) fn next(&self, current: u8, counts: &[usize]) -> u8 {
        match self {
            RuleSet::GridTotalistic { born, survive } => {
                let live: usize = counts[1..].iter().sum();
                let set = if current == 0 { born } else { survive };
                u8::from(live <= 8 && set.contains(&(live as u8)))
            }
            RuleSet::GraphThreshold(t) => t.next(current, counts),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for r in [RuleSet::life(), RuleSet::life_threshold(), RuleSet::business()] {
            r.validate().unwrap();
        }
    }

    #[test]
    fn notation_round_trips_life() {
        assert_eq!(RuleSet::from_notation("B3/S23").unwrap(), RuleSet::life());
        assert_eq!(RuleSet::from_notation("b/s").unwrap(), RuleSet::totalistic([], []));
        for bad in ["B3S23", "B9/S", "X3/S23", "B3/S2x"] {
            assert!(RuleSet::from_notation(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn invalid_rules_are_rejected() {
        assert!(RuleSet::totalistic([9], []).validate().is_err());
        let bad = RuleSet::GraphThreshold(ThresholdTable {
            states: 2,
            rules: vec![],
            defaults: vec![0],
        });
        assert!(bad.validate().is_err());
        let bad = RuleSet::GraphThreshold(ThresholdTable {
            states: 2,
            rules: vec![ThresholdRule { from: 0, counted: 2, min: 0, max: 1, to: 1 }],
            defaults: vec![0, 0],
        });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn threshold_and_totalistic_life_agree_on_every_count() {
        let a = RuleSet::life();
        let b = RuleSet::life_threshold();
        for state in 0..2u8 {
            for live in 0..=8usize {
                let counts = [8 - live, live];
                assert_eq!(a.next(state, &counts), b.next(state, &counts));
            }
        }
    }
}
