use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Portfolio, SourcingError};
use crate::genetics::{fitness, LifecycleEvent};
use crate::network::{Partner, PartnerId};

/// An outsourcing contract the portfolio must staff in one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub region: String,
    /// Minimum attribute levels a partner needs to cover the contract.
    pub required: BTreeMap<String, f64>,
    /// The contract runs over ticks `start + 1 ..= start + duration`.
    pub start: u64,
    pub duration: u64,
}

impl Contract {
    pub fn covered_by(&self, p: &Partner) -> bool {
        p.region == self.region && self.required.iter().all(|(k, &min)| p.attribute(k) >= min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    /// Fulfilled contract-ticks over all contract-ticks within the horizon.
    pub fulfillment_rate: f64,
    pub contract_ticks: u64,
    pub fulfilled_ticks: u64,
    /// Fulfillment of each contract, in input order.
    pub per_contract: Vec<f64>,
    /// Sever events touching a selected partner.
    pub severance_count: usize,
    pub mean_fitness: f64,
    /// Region meets its size bounds; false for infeasible regions.
    pub compliance: BTreeMap<String, bool>,
    pub diversity: f64,
}

/// Mean per-attribute standard deviation of the footprints.
pub fn diversity<'a, I: IntoIterator<Item = &'a Partner>>(partners: I) -> f64 {
    let partners: Vec<&Partner> = partners.into_iter().collect();
    if partners.len() < 2 {
        return 0.0;
    }
    let mut columns: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for p in &partners {
        for (k, &v) in &p.footprint {
            columns.entry(k.as_str()).or_default().push(v);
        }
    }
    if columns.is_empty() {
        return 0.0;
    }
    let spread = |xs: &Vec<f64>| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
    };
    columns.values().map(spread).sum::<f64>() / columns.len() as f64
}

/// The first tick at which each selected partner stops serving: a sever
/// from the anchor or a merge into another partner.
fn departures(portfolio: &Portfolio, events: &[(u64, LifecycleEvent)]) -> BTreeMap<PartnerId, u64> {
    let mut out = BTreeMap::new();
    for (tick, e) in events {
        let gone = match e {
            LifecycleEvent::Sever { a, b, .. } if *a == portfolio.anchor => Some(*b),
            LifecycleEvent::Sever { a, b, .. } if *b == portfolio.anchor => Some(*a),
            LifecycleEvent::Merge { partner, .. } => Some(*partner),
            _ => None,
        };
        if let Some(id) = gone.filter(|id| portfolio.members.contains_key(id)) {
            out.entry(id).or_insert(*tick);
        }
    }
    out
}

/// Scores the portfolio against its contracts over ticks `1..=horizon`.
pub fn evaluate_kpis(
    portfolio: &Portfolio,
    contracts: &[Contract],
    events: &[(u64, LifecycleEvent)],
    horizon: u64,
    environment: &BTreeMap<String, f64>,
) -> Result<KpiReport, SourcingError> {
    if portfolio.members.is_empty() {
        return Err(SourcingError::EmptyPortfolio);
    }
    if horizon == 0 {
        return Err(SourcingError::ZeroHorizon);
    }
    if let Some(i) = contracts.iter().position(|c| c.duration == 0) {
        return Err(SourcingError::ZeroDuration(i));
    }
    let gone = departures(portfolio, events);
    let serving = |p: &Partner, tick: u64| gone.get(&p.id).is_none_or(|&t| tick < t);
    let (mut total, mut fulfilled) = (0u64, 0u64);
    let mut per_contract = Vec::with_capacity(contracts.len());
    for c in contracts {
        let coverers: Vec<&Partner> = portfolio.members.values().filter(|p| c.covered_by(p)).collect();
        let last = (c.start + c.duration).min(horizon);
        let (mut t_all, mut t_ok) = (0u64, 0u64);
        for tick in c.start + 1..=last {
            t_all += 1;
            if coverers.iter().any(|p| serving(p, tick)) {
                t_ok += 1;
            }
        }
        per_contract.push(if t_all == 0 { 1.0 } else { t_ok as f64 / t_all as f64 });
        total += t_all;
        fulfilled += t_ok;
    }
    let severance_count = events
        .iter()
        .filter(|(_, e)| match e {
            LifecycleEvent::Sever { a, b, .. } => portfolio.members.contains_key(a) || portfolio.members.contains_key(b),
            _ => false,
        })
        .count();
    let fits: Vec<f64> = portfolio
        .members
        .values()
        .filter_map(|p| fitness(p, environment).ok())
        .collect();
    let c = &portfolio.constraints;
    let compliance = portfolio
        .regions
        .iter()
        .map(|(r, s)| {
            let n = s.selected.len();
            (r.clone(), !s.infeasible && n >= c.min_per_region && n <= c.max_per_region)
        })
        .collect();
    Ok(KpiReport {
        fulfillment_rate: if total == 0 { 1.0 } else { fulfilled as f64 / total as f64 },
        contract_ticks: total,
        fulfilled_ticks: fulfilled,
        per_contract,
        severance_count,
        mean_fitness: if fits.is_empty() { 0.0 } else { fits.iter().sum::<f64>() / fits.len() as f64 },
        compliance,
        diversity: diversity(portfolio.members.values()),
    })
}
