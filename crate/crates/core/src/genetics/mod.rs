//! Birth, life and death of the network: fitness footprints, the
//! consistence graph, threshold lifecycle rules and stochastic dynamics.

mod consistence;
mod dynamics;
mod fitness;
mod lifecycle;
mod montecarlo;
mod triads;
mod walk;

pub use consistence::{consistence, ConsistencePoint};
pub use dynamics::{dynamics_steps, evolve, tick_rng, DynamicsSettings, DynamicsStep, TickRecord};
pub use fitness::{fitness, fitness_measures, Cosine, FitnessMeasure, MinMaxOverlap};
pub use lifecycle::{lifecycle_step, LifecycleConfig, LifecycleEvent};
pub use montecarlo::{run_monte_carlo, MonteCarloReport, Summary, TickSummary};
pub use triads::{indirect_link_candidates, IndirectLink};
pub use walk::{random_walk_step, WalkParams};

use thiserror::Error;

use crate::network::{NetworkError, PartnerId};
use crate::registry::UnknownStrategy;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneticsError {
    #[error("consistence needs at least one party")]
    NoParties,
    #[error("partner {0} has an empty goal set")]
    EmptyGoals(PartnerId),
    #[error("footprint and environment use different attribute dictionaries ({0})")]
    DictionaryMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("at least one trial and one tick are required")]
    EmptyRun,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
}
