use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{consistence, lifecycle_step, random_walk_step, ConsistencePoint, GeneticsError, LifecycleConfig, LifecycleEvent, WalkParams};
use crate::automata::{step_graph, RuleSet};
use crate::kinetics::AdjacencyGraph;
use crate::network::{Network, PartnerId};
use crate::registry::{Registry, Strategies};

/// Everything a tick needs besides the network itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSettings {
    pub lifecycle: LifecycleConfig,
    pub walk: WalkParams,
    pub rules: RuleSet,
    /// Registered fitness measure used by the lifecycle.
    pub fitness: String,
    /// Registered dynamics applied in order within each tick.
    pub steps: Vec<String>,
}

impl Default for DynamicsSettings {
    fn default() -> Self {
        DynamicsSettings {
            lifecycle: LifecycleConfig::default(),
            walk: WalkParams::default(),
            rules: RuleSet::business(),
            fitness: "min-max-overlap".into(),
            steps: vec!["lifecycle".into(), "random-walk".into()],
        }
    }
}

/// One kind of per-tick update.
pub trait DynamicsStep: Send + Sync {
    fn apply(
        &self,
        net: &mut Network,
        settings: &DynamicsSettings,
        strategies: &Strategies,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<LifecycleEvent>, GeneticsError>;
}

struct Lifecycle;

impl DynamicsStep for Lifecycle {
    fn apply(&self, net: &mut Network, s: &DynamicsSettings, st: &Strategies, rng: &mut ChaCha8Rng) -> Result<Vec<LifecycleEvent>, GeneticsError> {
        lifecycle_step(net, &s.lifecycle, st.fitness.get(&s.fitness)?, rng)
    }
}

struct RandomWalk;

impl DynamicsStep for RandomWalk {
    fn apply(&self, net: &mut Network, s: &DynamicsSettings, _: &Strategies, rng: &mut ChaCha8Rng) -> Result<Vec<LifecycleEvent>, GeneticsError> {
        random_walk_step(net, &s.walk, rng)
    }
}

/// Synchronous automaton update of partner states over the partner adjacency.
struct Automaton;

impl DynamicsStep for Automaton {
    fn apply(&self, net: &mut Network, s: &DynamicsSettings, _: &Strategies, _: &mut ChaCha8Rng) -> Result<Vec<LifecycleEvent>, GeneticsError> {
        let mut graph = AdjacencyGraph::<PartnerId>::new();
        for (a, list) in net.adjacency() {
            graph.add_node(a);
            for b in list {
                graph.add_edge(a, b);
            }
        }
        let states = net.partners.iter().map(|(&id, p)| (id, p.state)).collect();
        let next = step_graph(&states, &graph, &s.rules).map_err(|e| GeneticsError::InvalidConfig(e.to_string()))?;
        let mut events = Vec::new();
        for (id, to) in next {
            let p = net.partner_mut(id)?;
            if p.state != to {
                events.push(LifecycleEvent::StateChange {
                    partner: id,
                    from: p.state,
                    to,
                });
                p.state = to;
            }
        }
        Ok(events)
    }
}

pub fn dynamics_steps() -> Registry<dyn DynamicsStep> {
    let mut r: Registry<dyn DynamicsStep> = Registry::new("dynamics step");
    r.register("lifecycle", Box::new(Lifecycle));
    r.register("random-walk", Box::new(RandomWalk));
    r.register("automaton", Box::new(Automaton));
    r
}

/// Independent stream for one tick of one trial.
pub fn tick_rng(seed: u64, trial: u64, tick: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"bizvor-tick");
    h.update(seed.to_le_bytes());
    h.update(trial.to_le_bytes());
    h.update(tick.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub events: Vec<LifecycleEvent>,
    /// Absent once the network has no partners left.
    pub consistence: Option<ConsistencePoint>,
}

/// Advances the network `ticks` ticks past `start_tick`, applying the
/// configured dynamics in order within each tick.
pub fn evolve(
    net: &mut Network,
    settings: &DynamicsSettings,
    strategies: &Strategies,
    seed: u64,
    trial: u64,
    start_tick: u64,
    ticks: u64,
) -> Result<Vec<TickRecord>, GeneticsError> {
    let steps = settings
        .steps
        .iter()
        .map(|name| strategies.dynamics.get(name))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(ticks as usize);
    for tick in start_tick + 1..=start_tick + ticks {
        let mut rng = tick_rng(seed, trial, tick);
        let mut events = Vec::new();
        for step in &steps {
            events.extend(step.apply(net, settings, strategies, &mut rng)?);
        }
        let consistence = if net.is_empty() {
            None
        } else {
            Some(consistence(net.partners.values(), tick)?)
        };
        out.push(TickRecord {
            tick,
            events,
            consistence,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::business_state;
    use crate::geometry::{BoundingBox, Point2};
    use crate::network::Partner;
    use rand::Rng;

    fn scattered(n: usize, seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::new(BoundingBox::centered(20.0), vec!["skill".into(), "staff".into()]);
        for i in 0..n {
            let p = Partner::new(0, format!("R{:02}", i % 3))
                .with_goals((0..rng.gen_range(2..6)).map(|g| format!("g{}", (g * 3 + i) % 7)))
                .with_footprint([("skill", rng.gen_range(0.0..1.0)), ("staff", rng.gen_range(0.0..1.0))]);
            net.add_partner(p, Point2::new(rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0))).unwrap();
        }
        net
    }

    fn busy_settings() -> DynamicsSettings {
        let mut s = DynamicsSettings::default();
        s.lifecycle.split_threshold = 0.7;
        s.lifecycle.merge_threshold = 0.3;
        s.lifecycle.max_partners = 60;
        s.walk.diffusion = 0.5;
        s
    }

    #[test]
    fn streams_differ_by_coordinate() {
        let draw = |s, t, k| tick_rng(s, t, k).gen::<u64>();
        assert_eq!(draw(1, 2, 3), draw(1, 2, 3));
        assert_ne!(draw(1, 2, 3), draw(1, 2, 4));
        assert_ne!(draw(1, 2, 3), draw(1, 3, 3));
        assert_ne!(draw(1, 2, 3), draw(2, 2, 3));
    }

    #[test]
    fn evolve_is_deterministic_and_keeps_delaunay() {
        let st = Strategies::standard();
        let settings = busy_settings();
        let mut a = scattered(25, 11);
        let mut b = a.clone();
        let mut log = Vec::new();
        for chunk in 0..3 {
            let recs = evolve(&mut a, &settings, &st, 77, 0, chunk * 100, 100).unwrap();
            assert!(a.triangulation.delaunay_violations().is_empty(), "after tick {}", (chunk + 1) * 100);
            assert!(a.triangulation.check_topology().is_ok());
            log.extend(recs);
        }
        assert_eq!(log, evolve(&mut b, &settings, &st, 77, 0, 0, 300).unwrap());
        assert_eq!(a, b);
        for r in &log {
            let c = r.consistence.as_ref().unwrap();
            assert!(c.q > 0.0 || c.p >= 2);
            assert!(c.q <= 1.0);
        }
    }

    #[test]
    fn partner_count_follows_splits_and_merges() {
        let st = Strategies::standard();
        let settings = busy_settings();
        let mut net = scattered(20, 3);
        let mut rng = tick_rng(5, 0, 1);
        let before = net.len();
        let events = lifecycle_step(&mut net, &settings.lifecycle, st.fitness.get("min-max-overlap").unwrap(), &mut rng).unwrap();
        let splits = events.iter().filter(|e| matches!(e, LifecycleEvent::Split { .. })).count();
        let merges = events.iter().filter(|e| matches!(e, LifecycleEvent::Merge { .. })).count();
        assert!(splits + merges > 0);
        assert_eq!(net.len(), before + splits - merges);
    }

    #[test]
    fn automaton_step_changes_states() {
        let st = Strategies::standard();
        let mut net = scattered(6, 8);
        for p in net.partners.values_mut() {
            p.state = business_state::STABLE;
        }
        let settings = DynamicsSettings {
            steps: vec!["automaton".into()],
            ..DynamicsSettings::default()
        };
        let recs = evolve(&mut net, &settings, &st, 1, 0, 0, 1).unwrap();
        for e in &recs[0].events {
            let LifecycleEvent::StateChange { partner, to, .. } = e else {
                panic!("{e:?}")
            };
            assert_eq!(net.partners[partner].state, *to);
        }
    }

    #[test]
    fn unknown_step_is_reported() {
        let settings = DynamicsSettings {
            steps: vec!["teleport".into()],
            ..DynamicsSettings::default()
        };
        let err = evolve(&mut scattered(2, 0), &settings, &Strategies::standard(), 0, 0, 0, 1).unwrap_err();
        assert!(matches!(err, GeneticsError::Strategy(ref u) if u.name == "teleport"));
    }
}
