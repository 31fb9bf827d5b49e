use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FitnessMeasure, GeneticsError};
use crate::geometry::Point2;
use crate::kinetics::{KineticsError, MoveTrace};
use crate::network::{Network, NetworkError, Partner, PartnerId};

/// Distance between a parent and its offspring at the moment of the split.
pub const SPLIT_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleConfig {
    /// Fitness at or above which a partner splits.
    pub split_threshold: f64,
    /// Fitness below which a partner merges into a neighbor.
    pub merge_threshold: f64,
    /// Pair force below which a relation is severed.
    pub sever_threshold: f64,
    /// Map distance covered per tick by a full-strength resultant.
    pub growth_step: f64,
    /// Splits stop once the network holds this many partners.
    pub max_partners: usize,
    /// Standard deviation of the offspring's footprint mutation.
    pub mutation_sigma: f64,
}

impl Default for LifecycleConfig {
    fn default() -> Self {
        LifecycleConfig {
            split_threshold: 0.9,
            merge_threshold: 0.1,
            sever_threshold: -1.0,
            growth_step: 1.0,
            max_partners: 2000,
            mutation_sigma: 0.05,
        }
    }
}

impl LifecycleConfig {
    pub fn validate(&self) -> Result<(), GeneticsError> {
        let bad = |m: &str| Err(GeneticsError::InvalidConfig(m.to_string()));
        if !(self.merge_threshold < self.split_threshold) {
            return bad("merge_threshold must be below split_threshold");
        }
        if !self.sever_threshold.is_finite() {
            return bad("sever_threshold must be finite");
        }
        if !(self.growth_step >= 0.0 && self.growth_step.is_finite()) {
            return bad("growth_step must be a finite non-negative distance");
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return bad("mutation_sigma must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LifecycleEvent {
    Split {
        parent: PartnerId,
        child: PartnerId,
        position: Point2,
        trace: MoveTrace,
    },
    Merge {
        partner: PartnerId,
        into: Option<PartnerId>,
        position: Point2,
    },
    Sever {
        a: PartnerId,
        b: PartnerId,
        force: f64,
    },
    Move {
        partner: PartnerId,
        from: Point2,
        to: Point2,
        trace: MoveTrace,
    },
    Walk {
        partner: PartnerId,
        from: Point2,
        to: Point2,
    },
    StateChange {
        partner: PartnerId,
        from: u8,
        to: u8,
    },
}

fn unit(from: Point2, to: Point2) -> Option<(f64, f64)> {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    let len = dx.hypot(dy);
    (len > 0.0).then(|| (dx / len, dy / len))
}

fn clamp_margin(net: &Network) -> f64 {
    1e-6 * net.universe().width().min(net.universe().height())
}

fn offspring<R: Rng + ?Sized>(net: &Network, parent: &Partner, cfg: &LifecycleConfig, rng: &mut R) -> Partner {
    let child_id = net.next_id;
    let mut goals: Vec<&String> = parent.goals.iter().collect();
    goals.shuffle(rng);
    let keep = goals.len().div_ceil(2);
    let mut child = Partner::new(child_id, parent.region.clone())
        .with_goals(goals[..keep].iter().map(|g| g.to_string()).chain([format!("goal-{child_id}")]));
    child.competitor_history = parent.competitor_history;
    child.state = parent.state;
    let noise = Normal::new(0.0, cfg.mutation_sigma).expect("validated sigma");
    child.footprint = parent
        .footprint
        .iter()
        .map(|(k, &v)| (k.clone(), (v + noise.sample(rng)).clamp(0.0, 1.0)))
        .collect();
    child
}

fn split<R: Rng + ?Sized>(
    net: &mut Network,
    parent: PartnerId,
    cfg: &LifecycleConfig,
    rng: &mut R,
) -> Result<Option<LifecycleEvent>, GeneticsError> {
    let origin = net.position(parent)?;
    let angle = rng.gen_range(0.0..TAU);
    let (ux, uy) = (angle.cos(), angle.sin());
    let child = offspring(net, &net.partners[&parent], cfg, rng);
    let start = Point2::new(origin.x + SPLIT_OFFSET * ux, origin.y + SPLIT_OFFSET * uy);
    let child = match net.add_partner(child, start) {
        Ok(id) => id,
        // A parent pressed against the universe edge has no room to split.
        Err(NetworkError::Kinetics(KineticsError::Geometry(_))) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let target = net.universe().clamp_inside(
        Point2::new(origin.x + cfg.growth_step * ux, origin.y + cfg.growth_step * uy),
        clamp_margin(net),
    );
    let trace = net.move_partner(child, target)?;
    Ok(Some(LifecycleEvent::Split {
        parent,
        child,
        position: net.position(child)?,
        trace,
    }))
}

fn merge(net: &mut Network, id: PartnerId, neighbors: &[PartnerId]) -> Result<LifecycleEvent, GeneticsError> {
    let mut strongest: Option<(PartnerId, f64)> = None;
    for &b in neighbors {
        let f = net.force(id, b)?;
        if strongest.is_none_or(|(_, best)| f > best) {
            strongest = Some((b, f));
        }
    }
    if let Some((b, _)) = strongest {
        let target = net.position(b)?;
        net.move_partner(id, target)?;
    }
    let position = net.position(id)?;
    net.remove_partner(id)?;
    net.ledger.forget(id);
    Ok(LifecycleEvent::Merge {
        partner: id,
        into: strongest.map(|(b, _)| b),
        position,
    })
}

fn drift(net: &mut Network, id: PartnerId, neighbors: &[PartnerId], cfg: &LifecycleConfig) -> Result<LifecycleEvent, GeneticsError> {
    let from = net.position(id)?;
    let (mut rx, mut ry, mut total) = (0.0, 0.0, 0.0);
    for &b in neighbors {
        let f = net.force(id, b)?;
        if let Some((ux, uy)) = unit(from, net.position(b)?) {
            rx += f * ux;
            ry += f * uy;
            total += f.abs();
        }
    }
    if total == 0.0 || (rx == 0.0 && ry == 0.0) {
        return Ok(LifecycleEvent::Move {
            partner: id,
            from,
            to: from,
            trace: MoveTrace {
                vertex: net.partners[&id].vertex.expect("placed partner"),
                steps: Vec::new(),
            },
        });
    }
    let scale = cfg.growth_step / total;
    let target = net
        .universe()
        .clamp_inside(Point2::new(from.x + scale * rx, from.y + scale * ry), clamp_margin(net));
    let trace = net.move_partner(id, target)?;
    Ok(LifecycleEvent::Move {
        partner: id,
        from,
        to: net.position(id)?,
        trace,
    })
}

/// Applies the threshold rules to every partner in ascending id order.
///
/// Fitness at or above the split threshold spawns an offspring, fitness
/// below the merge threshold folds the partner into its most attractive
/// neighbor, and otherwise relations to higher-id neighbors whose force falls
/// below the sever threshold are cut before the partner drifts along its
/// normalized force resultant. The anchor and segment endpoints neither
/// split, merge nor drift.
pub fn lifecycle_step<R: Rng + ?Sized>(
    net: &mut Network,
    cfg: &LifecycleConfig,
    measure: &dyn FitnessMeasure,
    rng: &mut R,
) -> Result<Vec<LifecycleEvent>, GeneticsError> {
    cfg.validate()?;
    let ids: Vec<PartnerId> = net.partners.keys().copied().collect();
    let mut events = Vec::new();
    for id in ids {
        if !net.partners.contains_key(&id) {
            continue;
        }
        let pinned = net.anchor == Some(id) || net.is_locked(id);
        let adjacency = net.adjacency();
        let neighbors: Vec<PartnerId> = adjacency[&id].iter().copied().filter(|&b| !net.is_severed(id, b)).collect();
        if !pinned {
            let fit = measure.score(&net.partners[&id].footprint, &net.environment)?;
            if fit >= cfg.split_threshold {
                if net.len() < cfg.max_partners {
                    events.extend(split(net, id, cfg, rng)?);
                }
                continue;
            }
            if fit < cfg.merge_threshold {
                events.push(merge(net, id, &neighbors)?);
                continue;
            }
        }
        let mut kept = Vec::with_capacity(neighbors.len());
        for b in neighbors {
            let force = net.force(id, b)?;
            if b > id && force < cfg.sever_threshold {
                net.sever(id, b);
                events.push(LifecycleEvent::Sever { a: id, b, force });
            } else {
                kept.push(b);
            }
        }
        if !pinned {
            events.push(drift(net, id, &kept, cfg)?);
        }
    }
    Ok(events)
}
