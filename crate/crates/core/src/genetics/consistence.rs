use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::GeneticsError;
use crate::network::{Partner, PartnerId};

/// One point of the consistence graph: party count and shared-goal ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencePoint {
    pub tick: u64,
    pub p: usize,
    /// Network ratio: the smallest per-party ratio.
    pub q: f64,
    /// Shared goals over each party's goal count.
    pub per_party: BTreeMap<PartnerId, f64>,
    pub shared: usize,
}

/// Goals held by every party, relative to each party's own goal count. A
/// lone party starts at `1 / N`.
pub fn consistence<'a, I>(parties: I, tick: u64) -> Result<ConsistencePoint, GeneticsError>
where
    I: IntoIterator<Item = &'a Partner>,
{
    let parties: Vec<&Partner> = parties.into_iter().collect();
    if parties.is_empty() {
        return Err(GeneticsError::NoParties);
    }
    if let Some(p) = parties.iter().find(|p| p.goals.is_empty()) {
        return Err(GeneticsError::EmptyGoals(p.id));
    }
    let per_party: BTreeMap<PartnerId, f64>;
    let shared;
    if parties.len() == 1 {
        shared = 1;
        per_party = BTreeMap::from([(parties[0].id, 1.0 / parties[0].goals.len() as f64)]);
    } else {
        let mut common: BTreeSet<&String> = parties[0].goals.iter().collect();
        for p in &parties[1..] {
            common.retain(|g| p.goals.contains(*g));
        }
        shared = common.len();
        per_party = parties
            .iter()
            .map(|p| (p.id, shared as f64 / p.goals.len() as f64))
            .collect();
    }
    let q = per_party.values().copied().fold(f64::INFINITY, f64::min);
    Ok(ConsistencePoint {
        tick,
        p: parties.len(),
        q,
        per_party,
        shared,
    })
}
