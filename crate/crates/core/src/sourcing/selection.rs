use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SourcingError;
use crate::business_map::{pair_force, PreferenceTable};
use crate::network::{Partner, PartnerId};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortfolioConstraints {
    pub min_per_region: usize,
    pub max_per_region: usize,
    pub pool_size: usize,
}

impl Default for PortfolioConstraints {
    fn default() -> Self {
        PortfolioConstraints {
            min_per_region: 3,
            max_per_region: 15,
            pool_size: 500,
        }
    }
}

impl PortfolioConstraints {
    pub fn validate(&self) -> Result<(), SourcingError> {
        if 1 <= self.min_per_region && self.min_per_region <= self.max_per_region {
            Ok(())
        } else {
            Err(SourcingError::InvalidConstraints(format!(
                "need 1 <= min ({}) <= max ({})",
                self.min_per_region, self.max_per_region
            )))
        }
    }
}

/// Picks a subset of a region's scored candidates.
pub trait PortfolioSelector: Send + Sync {
    /// `scored` holds `(candidate, force toward the anchor)`, and the region
    /// is known to hold at least the minimum number of candidates.
    fn select(&self, scored: &[(PartnerId, f64)], constraints: &PortfolioConstraints) -> Result<Vec<PartnerId>, SourcingError>;
}

fn by_force(a: &(PartnerId, f64), b: &(PartnerId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Strongest candidates first: the minimum is always filled, after which
/// candidates are added while they still attract and room remains.
#[derive(Debug, Clone, Copy, Default)]
pub struct Greedy;

impl PortfolioSelector for Greedy {
    fn select(&self, scored: &[(PartnerId, f64)], c: &PortfolioConstraints) -> Result<Vec<PartnerId>, SourcingError> {
        let mut ranked = scored.to_vec();
        ranked.sort_by(by_force);
        Ok(ranked
            .iter()
            .enumerate()
            .take_while(|(i, (_, f))| *i < c.min_per_region || (*i < c.max_per_region && *f > 0.0))
            .map(|(_, (id, _))| *id)
            .collect())
    }
}

/// Best total force over every admissible subset size.
#[derive(Debug, Clone, Copy)]
pub struct Exhaustive {
    pub max_candidates: usize,
}

impl Default for Exhaustive {
    fn default() -> Self {
        Exhaustive { max_candidates: 20 }
    }
}

impl PortfolioSelector for Exhaustive {
    fn select(&self, scored: &[(PartnerId, f64)], c: &PortfolioConstraints) -> Result<Vec<PartnerId>, SourcingError> {
        let n = scored.len();
        if n > self.max_candidates {
            return Err(SourcingError::TooLarge(n));
        }
        let mut best: Option<(f64, u64)> = None;
        for mask in 0u64..(1u64 << n) {
            let k = mask.count_ones() as usize;
            if k < c.min_per_region || k > c.max_per_region {
                continue;
            }
            let total: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| scored[i].1).sum();
            if best.is_none_or(|(t, _)| total > t) {
                best = Some((total, mask));
            }
        }
        let mask = best.map_or(0, |(_, m)| m);
        let mut picked: Vec<(PartnerId, f64)> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| scored[i]).collect();
        picked.sort_by(by_force);
        Ok(picked.into_iter().map(|(id, _)| id).collect())
    }
}

pub fn selectors() -> Registry<dyn PortfolioSelector> {
    let mut r: Registry<dyn PortfolioSelector> = Registry::new("portfolio selector");
    r.register("greedy", Box::new(Greedy));
    r.register("exhaustive", Box::new(Exhaustive::default()));
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSelection {
    /// Chosen partners, strongest first; empty when infeasible.
    pub selected: Vec<PartnerId>,
    pub available: usize,
    /// Fewer candidates than the regional minimum.
    pub infeasible: bool,
    pub total_force: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub anchor: PartnerId,
    pub constraints: PortfolioConstraints,
    pub regions: BTreeMap<String, RegionSelection>,
    /// Selected partners as they stood at selection time.
    pub members: BTreeMap<PartnerId, Partner>,
}

impl Portfolio {
    pub fn selected_ids(&self) -> impl Iterator<Item = PartnerId> + '_ {
        self.members.keys().copied()
    }

    pub fn infeasible_regions(&self) -> Vec<&str> {
        self.regions
            .iter()
            .filter(|(_, r)| r.infeasible)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Scores every candidate against the anchor and selects per region.
pub fn select_portfolio(
    candidates: &[Partner],
    anchor: &Partner,
    constraints: &PortfolioConstraints,
    table: &PreferenceTable,
    selector: &dyn PortfolioSelector,
) -> Result<Portfolio, SourcingError> {
    constraints.validate()?;
    if candidates.is_empty() {
        return Err(SourcingError::NoCandidates);
    }
    let mut by_region: BTreeMap<&str, Vec<(PartnerId, f64)>> = BTreeMap::new();
    let index: BTreeMap<PartnerId, &Partner> = candidates.iter().map(|p| (p.id, p)).collect();
    for p in candidates.iter().filter(|p| p.id != anchor.id) {
        by_region
            .entry(p.region.as_str())
            .or_default()
            .push((p.id, pair_force(anchor, p, table)));
    }
    let mut regions = BTreeMap::new();
    let mut members = BTreeMap::new();
    for (region, scored) in by_region {
        let infeasible = scored.len() < constraints.min_per_region;
        let selected = if infeasible {
            Vec::new()
        } else {
            selector.select(&scored, constraints)?
        };
        let force: BTreeMap<PartnerId, f64> = scored.iter().copied().collect();
        let total_force = selected.iter().map(|id| force[id]).sum();
        for id in &selected {
            members.insert(*id, index[id].clone());
        }
        regions.insert(
            region.to_string(),
            RegionSelection {
                selected,
                available: scored.len(),
                infeasible,
                total_force,
            },
        );
    }
    Ok(Portfolio {
        anchor: anchor.id,
        constraints: *constraints,
        regions,
        members,
    })
}
