use serde::{Deserialize, Serialize};

use super::MapError;
use crate::network::Partner;

/// A condition on a pair of partners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    /// Both partners hold the attribute at `min` or above.
    SharedAttribute { attribute: String, min: f64 },
    /// At least one partner holds the attribute at `min` or above.
    EitherHas { attribute: String, min: f64 },
    /// The second partner holds the attribute at `min` or above. Not symmetric.
    CounterpartHas { attribute: String, min: f64 },
    /// Either partner has a track record with the anchor's competitors.
    CompetitorHistory,
    SameRegion,
    DifferentRegion,
    /// The goal sets overlap in at least `min` goals.
    SharedGoals { min: usize },
}

impl Predicate {
    pub fn holds(&self, a: &Partner, b: &Partner) -> bool {
        match self {
            Predicate::SharedAttribute { attribute, min } => a.attribute(attribute) >= *min && b.attribute(attribute) >= *min,
            Predicate::EitherHas { attribute, min } => a.attribute(attribute) >= *min || b.attribute(attribute) >= *min,
            Predicate::CounterpartHas { attribute, min } => b.attribute(attribute) >= *min,
            Predicate::CompetitorHistory => a.competitor_history || b.competitor_history,
            Predicate::SameRegion => a.region == b.region,
            Predicate::DifferentRegion => a.region != b.region,
            Predicate::SharedGoals { min } => a.goals.intersection(&b.goals).count() >= *min,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Predicate::CounterpartHas { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRow {
    pub name: String,
    pub predicate: Predicate,
    /// Attraction when positive, repulsion when negative.
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreferenceTable {
    pub rows: Vec<PreferenceRow>,
}

impl PreferenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn row(mut self, name: impl Into<String>, predicate: Predicate, weight: f64) -> Self {
        self.rows.push(PreferenceRow {
            name: name.into(),
            predicate,
            weight,
        });
        self
    }

    pub fn validate(&self) -> Result<(), MapError> {
        match self.rows.iter().find(|r| !r.weight.is_finite()) {
            Some(r) => Err(MapError::NonFiniteWeight(r.name.clone())),
            None => Ok(()),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows.iter().all(|r| r.predicate.is_symmetric())
    }
}

/// Sum of the weights of every row whose predicate holds for `(a, b)`.
pub fn pair_force(a: &Partner, b: &Partner, table: &PreferenceTable) -> f64 {
    table
        .rows
        .iter()
        .filter(|r| r.predicate.holds(a, b))
        .map(|r| r.weight)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn skill_table() -> PreferenceTable {
        PreferenceTable::new()
            .row("shared-skill", Predicate::SharedAttribute { attribute: "skill".into(), min: 0.5 }, 2.0)
            .row("competitor-history", Predicate::CompetitorHistory, -1.0)
    }

    fn partner(id: u64, skill: f64, competitor: bool) -> Partner {
        let mut p = Partner::new(id, "R01").with_goals(["g"]).with_footprint([("skill", skill)]);
        p.competitor_history = competitor;
        p
    }

    #[test]
    fn empty_table_is_neutral() {
        assert_eq!(pair_force(&partner(1, 1.0, true), &partner(2, 1.0, true), &PreferenceTable::new()), 0.0);
    }

    #[test]
    fn weights_add_up() {
        let t = skill_table();
        assert_eq!(pair_force(&partner(1, 0.9, false), &partner(2, 0.7, false), &t), 2.0);
        assert_eq!(pair_force(&partner(1, 0.9, false), &partner(2, 0.7, true), &t), 1.0);
        assert_eq!(pair_force(&partner(1, 0.1, true), &partner(2, 0.7, false), &t), -1.0);
    }

    #[test]
    fn rejects_non_finite_weight() {
        let t = PreferenceTable::new().row("x", Predicate::SameRegion, f64::NAN);
        assert_eq!(t.validate(), Err(MapError::NonFiniteWeight("x".into())));
    }

    fn arb_partner(id: u64) -> impl Strategy<Value = Partner> {
        (0.0f64..=1.0, 0.0f64..=1.0, any::<bool>(), 0usize..3, prop::collection::btree_set("g[0-5]", 1..4)).prop_map(
            move |(skill, staff, competitor, region, goals)| {
                let mut p = Partner::new(id, format!("R{region}"))
                    .with_goals(goals)
                    .with_footprint([("skill", skill), ("staff", staff)]);
                p.competitor_history = competitor;
                p
            },
        )
    }

    fn arb_symmetric_row() -> impl Strategy<Value = PreferenceRow> {
        let predicate = prop_oneof![
            (0.0f64..1.0).prop_map(|min| Predicate::SharedAttribute { attribute: "skill".into(), min }),
            (0.0f64..1.0).prop_map(|min| Predicate::EitherHas { attribute: "staff".into(), min }),
            Just(Predicate::CompetitorHistory),
            Just(Predicate::SameRegion),
            Just(Predicate::DifferentRegion),
            (0usize..3).prop_map(|min| Predicate::SharedGoals { min }),
        ];
        (predicate, -5.0f64..5.0).prop_map(|(predicate, weight)| PreferenceRow {
            name: "row".into(),
            predicate,
            weight,
        })
    }

    proptest! {
        #[test]
        fn symmetric_tables_give_symmetric_forces(
            a in arb_partner(1),
            b in arb_partner(2),
            rows in prop::collection::vec(arb_symmetric_row(), 0..8),
        ) {
            let table = PreferenceTable { rows };
            prop_assert!(table.is_symmetric());
            prop_assert_eq!(pair_force(&a, &b, &table), pair_force(&b, &a, &table));
        }
    }
}
