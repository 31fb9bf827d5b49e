use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{LogEntry, LogEvent, Scenario, ScenarioError};
use crate::business_map::{embed_map, MapEmbedding};
use crate::genetics::{fitness, ConsistencePoint, LifecycleEvent};
use crate::geometry::{BoundingBox, Point2};
use crate::network::{NetworkError, PartnerId};
use crate::sourcing::KpiReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellView {
    pub partner: PartnerId,
    pub name: String,
    pub region: String,
    pub position: Point2,
    pub cell: Vec<Point2>,
    pub fitness: f64,
    pub state: u8,
    pub goals: BTreeSet<String>,
    pub footprint: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceView {
    pub a: PartnerId,
    pub b: PartnerId,
    pub force: f64,
}

/// Everything a client needs to draw the map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapView {
    pub name: String,
    pub tick: u64,
    pub universe: BoundingBox,
    pub anchor: Option<PartnerId>,
    pub cells: Vec<CellView>,
    pub forces: Vec<ForceView>,
    pub segments: Vec<[Point2; 2]>,
    pub consistence: Vec<ConsistencePoint>,
    /// Ledger embedding over the scenario's dimensions, when one exists.
    pub embedding: Option<MapEmbedding>,
}

impl MapView {
    pub fn of(s: &Scenario) -> Result<MapView, ScenarioError> {
        let net = &s.network;
        let mut cells = Vec::with_capacity(net.len());
        for (&id, p) in &net.partners {
            let v = p.vertex.ok_or(NetworkError::UnknownPartner(id))?;
            cells.push(CellView {
                partner: id,
                name: p.name.clone(),
                region: p.region.clone(),
                position: net.triangulation.position(v),
                cell: net.triangulation.voronoi_cell(v)?.boundary,
                fitness: fitness(p, &net.environment).unwrap_or(0.0),
                state: p.state,
                goals: p.goals.clone(),
                footprint: p.footprint.clone(),
            });
        }
        let embedding = match (net.anchor, s.dimensions.is_empty()) {
            (Some(anchor), false) => {
                let ids: Vec<PartnerId> = net.partners.keys().copied().collect();
                embed_map(&net.ledger, &s.dimensions, anchor, &ids, 0).ok()
            }
            _ => None,
        };
        Ok(MapView {
            name: s.name.clone(),
            tick: s.tick,
            universe: net.universe(),
            anchor: net.anchor,
            cells,
            forces: forces(s),
            segments: net
                .triangulation
                .segments()
                .map(|(_, seg)| [net.triangulation.position(seg.tail), net.triangulation.position(seg.head)])
                .collect(),
            consistence: s.consistence.clone(),
            embedding,
        })
    }
}

pub(crate) fn forces(s: &Scenario) -> Vec<ForceView> {
    s.network
        .forces()
        .into_iter()
        .map(|((a, b), force)| ForceView { a, b, force })
        .collect()
}

/// A negotiation move on one partner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum WhatIf {
    /// Widen the partner's role: raise the given attribute levels, or when
    /// none are given, everything its region's contracts require.
    Entrust {
        partner: PartnerId,
        #[serde(default)]
        attributes: BTreeMap<String, f64>,
    },
    /// Cut the partner loose from the integrator.
    Sever { partner: PartnerId },
}

impl WhatIf {
    pub fn partner(&self) -> PartnerId {
        match self {
            WhatIf::Entrust { partner, .. } | WhatIf::Sever { partner } => *partner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfProjection {
    pub action: WhatIf,
    pub before: KpiReport,
    pub after: KpiReport,
    pub fulfillment_delta: f64,
}

/// Applies a negotiation move to the scenario and logs it.
pub fn apply_whatif(s: &mut Scenario, action: &WhatIf) -> Result<(), ScenarioError> {
    let src = s.sourcing.as_mut().ok_or(ScenarioError::NoSourcing)?;
    let id = action.partner();
    if !src.portfolio.members.contains_key(&id) {
        return Err(NetworkError::UnknownPartner(id).into());
    }
    match action {
        WhatIf::Entrust { attributes, .. } => {
            let member = &src.portfolio.members[&id];
            let mut raise = attributes.clone();
            if raise.is_empty() {
                for c in src.contracts.iter().filter(|c| c.region == member.region) {
                    for (k, &min) in &c.required {
                        let e = raise.entry(k.clone()).or_insert(min);
                        *e = e.max(min);
                    }
                }
            }
            for (k, &v) in &raise {
                if !(0.0..=1.0).contains(&v) {
                    return Err(NetworkError::AttributeRange {
                        id,
                        attribute: k.clone(),
                        value: v,
                    }
                    .into());
                }
                if !s.network.attributes.is_empty() && !s.network.attributes.contains(k) {
                    return Err(NetworkError::UnknownAttribute { id, attribute: k.clone() }.into());
                }
            }
            let lift = |fp: &mut BTreeMap<String, f64>| {
                for (k, &v) in &raise {
                    let e = fp.entry(k.clone()).or_insert(0.0);
                    *e = e.max(v);
                }
            };
            lift(&mut src.portfolio.members.get_mut(&id).expect("member").footprint);
            if let Some(p) = s.network.partners.get_mut(&id) {
                lift(&mut p.footprint);
            }
            s.log(LogEvent::WhatIfCommitted { action: action.clone() });
        }
        WhatIf::Sever { .. } => {
            let anchor = src.portfolio.anchor;
            let force = match (s.network.partners.get(&anchor), s.network.partners.get(&id)) {
                (Some(a), Some(b)) => crate::business_map::pair_force(a, b, &s.network.table),
                _ => 0.0,
            };
            s.network.sever(anchor, id);
            s.log(LogEvent::WhatIfCommitted { action: action.clone() });
            // The cut takes effect from the next tick.
            let seq = s.events.last().map_or(1, |e| e.seq + 1);
            s.events.push(LogEntry {
                seq,
                tick: s.tick + 1,
                event: LogEvent::Lifecycle {
                    event: LifecycleEvent::Sever {
                        a: anchor.min(id),
                        b: anchor.max(id),
                        force,
                    },
                },
            });
        }
    }
    Ok(())
}

/// KPI consequences of a move, computed on a copy of the scenario.
pub fn project_whatif(s: &Scenario, action: &WhatIf) -> Result<WhatIfProjection, ScenarioError> {
    let before = s.kpis()?;
    let mut copy = s.clone();
    apply_whatif(&mut copy, action)?;
    let after = copy.kpis()?;
    Ok(WhatIfProjection {
        action: action.clone(),
        fulfillment_delta: after.fulfillment_rate - before.fulfillment_rate,
        before,
        after,
    })
}
