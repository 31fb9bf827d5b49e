use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{step_grid, step_indexed, AutomataError, Boundary, GridState, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaClass {
    /// Evolves to a fixed configuration.
    I,
    /// Evolves to periodic configurations.
    II,
    /// Chaotic succession without settling.
    III,
    /// Long transients of local structures before settling.
    IV,
}

/// Thresholds of the empirical classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub width: usize,
    pub height: usize,
    /// Initial fraction of non-zero cells.
    pub density: f64,
    /// A transient longer than this fraction of the horizon is long.
    pub long_transient_fraction: f64,
    /// Mean fraction of cells changing per step during a long transient must
    /// stay at or below this for the activity to count as bounded.
    pub activity_cap: f64,
    /// Live-fraction band over the trailing window for stationarity.
    pub stationarity_band: f64,
    pub tail_fraction: f64,
    /// Steps of history kept for cycle detection; the horizon when unset.
    pub cycle_window: Option<usize>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            width: 64,
            height: 64,
            density: 0.5,
            long_transient_fraction: 0.25,
            activity_cap: 0.25,
            stationarity_band: 0.05,
            tail_fraction: 0.1,
            cycle_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoupEvidence {
    pub soup: usize,
    /// Steps before the first configuration that later repeats.
    pub transient: Option<usize>,
    pub period: Option<usize>,
    /// Mean fraction of cells changing per step over the transient.
    pub activity: f64,
    /// Live fraction trailing window stayed within the band.
    pub stationary: bool,
    pub live_fraction: Vec<f64>,
}

impl SoupEvidence {
    pub fn settled(&self) -> bool {
        self.period.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: CaClass,
    pub soups: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Longest transient among soups that reached a fixed point.
    pub fixed_point_step: Option<usize>,
    /// Longest period detected.
    pub detected_period: Option<usize>,
    /// Longest transient among settled soups.
    pub transient_length: Option<usize>,
    pub evidence: Vec<SoupEvidence>,
}

fn soup_rng(seed: u64, soup: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(soup as u64);
    rng
}

fn run_soup(rule: &RuleSet, soup: usize, horizon: usize, seed: u64, cfg: &DetectorConfig) -> Result<SoupEvidence, AutomataError> {
    let mut rng = soup_rng(seed, soup);
    let states = rule.states();
    let mut grid = GridState::new(cfg.width, cfg.height, Boundary::Toroidal);
    for c in grid.cells.iter_mut() {
        if rng.gen_bool(cfg.density) {
            *c = rng.gen_range(1..states);
        }
    }
    let neighbors = match rule {
        RuleSet::GridTotalistic { .. } => None,
        RuleSet::GraphThreshold(_) => Some(grid.moore_neighbors()),
    };
    let window = cfg.cycle_window.unwrap_or(horizon);
    let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut live_fraction = vec![grid.live_fraction()];
    let mut flips = Vec::new();
    seen.insert(grid.cells.clone(), 0);
    let mut found = None;
    for step in 1..=horizon {
        let next = match &neighbors {
            None => step_grid(&grid, rule)?,
            Some(n) => GridState {
                cells: step_indexed(&grid.cells, n, rule)?,
                ..grid.clone()
            },
        };
        let changed = grid.cells.iter().zip(&next.cells).filter(|(a, b)| a != b).count();
        flips.push(changed as f64 / grid.cells.len() as f64);
        grid = next;
        live_fraction.push(grid.live_fraction());
        if let Some(&first) = seen.get(&grid.cells) {
            found = Some((first, step - first));
            break;
        }
        seen.insert(grid.cells.clone(), step);
        if step > window {
            seen.retain(|_, s| *s + window >= step);
        }
    }
    let tail = ((live_fraction.len() as f64 * cfg.tail_fraction).ceil() as usize).max(1);
    let trailing = &live_fraction[live_fraction.len() - tail..];
    let (lo, hi) = trailing
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let transient = found.map(|(t, _)| t);
    let active_steps = transient.unwrap_or(flips.len()).min(flips.len());
    let activity = if active_steps == 0 {
        0.0
    } else {
        flips[..active_steps].iter().sum::<f64>() / active_steps as f64
    };
    Ok(SoupEvidence {
        soup,
        transient,
        period: found.map(|(_, p)| p),
        activity,
        stationary: hi - lo <= cfg.stationarity_band,
        live_fraction,
    })
}

/// Runs `soups` random toroidal configurations for up to `horizon` steps and
/// assigns a class. A settled soup with a long transient and bounded activity
/// makes the rule Class IV; otherwise all soups at fixed points give Class I,
/// all soups settled with some period of two or more give Class II, and
/// anything else is Class III.
pub fn classify_rule(
    rule: &RuleSet,
    soups: usize,
    horizon: usize,
    seed: u64,
    cfg: &DetectorConfig,
) -> Result<ClassReport, AutomataError> {
    rule.validate()?;
    if soups == 0 {
        return Err(AutomataError::NoSoups);
    }
    if let Some(window) = cfg.cycle_window {
        if horizon < window {
            return Err(AutomataError::HorizonTooShort { horizon, window });
        }
    }
    if horizon == 0 {
        return Err(AutomataError::HorizonTooShort { horizon, window: 1 });
    }
    if cfg.width == 0 || cfg.height == 0 {
        return Err(AutomataError::EmptyGrid);
    }
    let evidence: Vec<SoupEvidence> = (0..soups)
        .into_par_iter()
        .map(|s| run_soup(rule, s, horizon, seed, cfg))
        .collect::<Result<_, _>>()?;

    let long = cfg.long_transient_fraction * horizon as f64;
    let emergent = evidence
        .iter()
        .any(|e| e.settled() && e.transient.unwrap_or(0) as f64 > long && e.activity <= cfg.activity_cap);
    let all_settled = evidence.iter().all(SoupEvidence::settled);
    let all_fixed = evidence.iter().all(|e| e.period == Some(1));
    let class = if emergent {
        CaClass::IV
    } else if all_fixed {
        CaClass::I
    } else if all_settled {
        CaClass::II
    } else {
        CaClass::III
    };
    Ok(ClassReport {
        class,
        soups,
        horizon,
        seed,
        fixed_point_step: evidence.iter().filter(|e| e.period == Some(1)).filter_map(|e| e.transient).max(),
        detected_period: evidence.iter().filter_map(|e| e.period).max(),
        transient_length: evidence.iter().filter_map(|e| e.transient).max(),
        evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DetectorConfig {
        DetectorConfig {
            width: 16,
            height: 16,
            ..DetectorConfig::default()
        }
    }

    #[test]
    fn empty_rule_is_class_one() {
        let r = classify_rule(&RuleSet::totalistic([], []), 5, 50, 1, &small()).unwrap();
        assert_eq!(r.class, CaClass::I);
        assert!(r.evidence.iter().all(|e| e.transient == Some(1) && e.period == Some(1)));
    }

    #[test]
    fn all_alive_rule_is_class_one() {
        let r = classify_rule(&RuleSet::totalistic(0..=8, 0..=8), 5, 50, 1, &small()).unwrap();
        assert_eq!(r.class, CaClass::I);
        assert!(r.evidence.iter().all(|e| *e.live_fraction.last().unwrap() == 1.0));
    }

    #[test]
    fn parity_flip_is_class_two() {
        // B012345678/S: every cell toggles each step.
        let r = classify_rule(&RuleSet::totalistic(0..=8, []), 4, 50, 2, &small()).unwrap();
        assert_eq!(r.class, CaClass::II);
        assert_eq!(r.detected_period, Some(2));
    }

    #[test]
    fn seeds_rule_is_class_three() {
        // B2/S: explosive growth that does not settle on a 64x64 torus.
        let r = classify_rule(&RuleSet::totalistic([2], []), 3, 300, 4, &DetectorConfig::default()).unwrap();
        assert_eq!(r.class, CaClass::III);
    }

    #[test]
    fn reproducible_and_validated() {
        let cfg = small();
        let a = classify_rule(&RuleSet::life(), 3, 200, 9, &cfg).unwrap();
        let b = classify_rule(&RuleSet::life(), 3, 200, 9, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(classify_rule(&RuleSet::life(), 0, 10, 0, &cfg), Err(AutomataError::NoSoups));
        let windowed = DetectorConfig { cycle_window: Some(100), ..cfg };
        assert_eq!(
            classify_rule(&RuleSet::life(), 1, 10, 0, &windowed),
            Err(AutomataError::HorizonTooShort { horizon: 10, window: 100 })
        );
    }

    #[test]
    fn threshold_rules_classify_on_the_torus() {
        let a = classify_rule(&RuleSet::life_threshold(), 2, 150, 3, &small()).unwrap();
        let b = classify_rule(&RuleSet::life(), 2, 150, 3, &small()).unwrap();
        assert_eq!(a.evidence, b.evidence);
    }
}
