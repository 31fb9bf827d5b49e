//! Named, runtime-selectable strategy implementations.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::automata::RuleSet;
use crate::genetics::{self, DynamicsStep, FitnessMeasure};
use crate::sourcing::{self, PortfolioSelector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} {name:?}; available: {}", available.join(", "))]
pub struct UnknownStrategy {
    pub kind: &'static str,
    pub name: String,
    pub available: Vec<String>,
}

/// Implementations of one strategy trait, keyed by name.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Box<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Adds or replaces an entry, returning the one it replaced.
    pub fn register(&mut self, name: impl Into<String>, item: Box<T>) -> Option<Box<T>> {
        self.entries.insert(name.into(), item)
    }

    pub fn get(&self, name: &str) -> Result<&T, UnknownStrategy> {
        self.entries.get(name).map(|b| b.as_ref()).ok_or_else(|| UnknownStrategy {
            kind: self.kind,
            name: name.to_string(),
            available: self.names(),
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }
}

/// Every registry the engine consults.
pub struct Strategies {
    pub fitness: Registry<dyn FitnessMeasure>,
    pub dynamics: Registry<dyn DynamicsStep>,
    pub selectors: Registry<dyn PortfolioSelector>,
    pub rules: Registry<RuleSet>,
}

impl Strategies {
    pub fn standard() -> Self {
        let mut rules = Registry::new("rule preset");
        rules.register("life", Box::new(RuleSet::life()));
        rules.register("life-threshold", Box::new(RuleSet::life_threshold()));
        rules.register("business", Box::new(RuleSet::business()));
        Strategies {
            fitness: genetics::fitness_measures(),
            dynamics: genetics::dynamics_steps(),
            selectors: sourcing::selectors(),
            rules,
        }
    }
}

impl Default for Strategies {
    fn default() -> Self {
        Self::standard()
    }
}
