use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioError, SourcingState};
use crate::business_map::{embed_map, DimensionSpec, MeasureKind, PreferenceTable, Predicate, RelationLedger};
use crate::geometry::{BoundingBox, GeometryError, Point2};
use crate::kinetics::KineticsError;
use crate::network::{Network, NetworkError, Partner, PartnerId};
use crate::sourcing::{
    generate_candidates, select_portfolio, CandidateProfile, Contract, PortfolioConstraints, PortfolioSelector,
};

/// Inputs of the synthetic outsourcing case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseParams {
    pub count: usize,
    pub regions: usize,
    pub seed: u64,
    /// Half-width of the square map universe.
    pub universe_half: f64,
    /// Ticks the contracts are scored over.
    pub horizon: u64,
    pub profile: CandidateProfile,
    pub constraints: PortfolioConstraints,
    /// Level the environment asks of every attribute.
    pub demand: f64,
}

impl Default for CaseParams {
    fn default() -> Self {
        CaseParams {
            count: 500,
            regions: 10,
            seed: 2024,
            universe_half: 100.0,
            horizon: 100,
            profile: CandidateProfile::default(),
            constraints: PortfolioConstraints::default(),
            demand: 0.6,
        }
    }
}

/// The integrator's preferences over supplier intangibles.
pub fn case_table() -> PreferenceTable {
    let has = |attribute: &str, min: f64| Predicate::CounterpartHas {
        attribute: attribute.into(),
        min,
    };
    PreferenceTable::new()
        .row("skills on hand", has("skills", 0.6), 2.0)
        .row("staff on short notice", has("staff", 0.5), 1.0)
        .row("prior product experience", has("experience", 0.6), 1.5)
        .row(
            "aligned incentives",
            Predicate::SharedAttribute {
                attribute: "incentives".into(),
                min: 0.5,
            },
            0.5,
        )
        .row("common ends", Predicate::SharedGoals { min: 2 }, 1.0)
        .row("track record with rivals", Predicate::CompetitorHistory, -1.5)
}

/// The integrator's mission, adopted by every supplier it considers.
pub const MISSION_GOAL: &str = "goal-00";

fn integrator(id: PartnerId, attributes: &[String]) -> Partner {
    let mut a = Partner::new(id, "HQ")
        .with_goals((0..6).map(|g| format!("goal-{g:02}")))
        .with_footprint(attributes.iter().map(|k| (k.clone(), 0.9)));
    a.name = "A".into();
    a
}

/// Records one measure, oriented so that the partner lands on the side of
/// the anchor chosen by `positive`.
fn record(ledger: &mut RelationLedger, anchor: PartnerId, p: PartnerId, kind: MeasureKind, value: f64, positive: bool) -> Result<(), ScenarioError> {
    let (from, to) = if positive { (p, anchor) } else { (anchor, p) };
    Ok(ledger.record(from, to, kind, 0, value)?)
}

fn place(net: &mut Network, partner: Partner, at: Point2) -> Result<PartnerId, ScenarioError> {
    let mut at = at;
    for _ in 0..8 {
        match net.add_partner(partner.clone(), at) {
            Err(NetworkError::Kinetics(KineticsError::Geometry(GeometryError::Duplicate(_)))) => {
                at = Point2::new(at.x + 1e-6, at.y + 1e-6);
            }
            other => return Ok(other?),
        }
    }
    Ok(net.add_partner(partner, at)?)
}

/// Generates the supplier pool, selects regional portfolios around the
/// integrator, lays them out on a sales/purchases map and attaches one
/// contract pair per feasible region.
pub fn build_case(params: &CaseParams) -> Result<Scenario, ScenarioError> {
    build_case_with(params, &crate::sourcing::Greedy)
}

pub fn build_case_with(params: &CaseParams, selector: &dyn PortfolioSelector) -> Result<Scenario, ScenarioError> {
    let mut candidates = generate_candidates(params.count, params.regions, params.seed, &params.profile)?;
    for c in &mut candidates {
        c.goals.insert(MISSION_GOAL.to_string());
    }
    let anchor_id = params.count as PartnerId + 1;
    let anchor = integrator(anchor_id, &params.profile.attributes);
    let table = case_table();
    let portfolio = select_portfolio(&candidates, &anchor, &params.constraints, &table, selector)?;

    let region_index: BTreeMap<&str, usize> = portfolio.regions.keys().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    let mut ledger = RelationLedger::new();
    for (region, sel) in &portfolio.regions {
        let r = region_index[region.as_str()];
        for &id in &sel.selected {
            let p = &portfolio.members[&id];
            record(&mut ledger, anchor_id, id, MeasureKind::Sales, 1.0 + 9.0 * p.attribute("skills"), r.is_multiple_of(2))?;
            record(&mut ledger, anchor_id, id, MeasureKind::Purchases, 1.0 + 9.0 * p.attribute("staff"), (r / 2).is_multiple_of(2))?;
        }
        for pair in sel.selected.windows(2) {
            let value = 1.0 + 9.0 * portfolio.members[&pair[1]].attribute("experience");
            ledger.record(pair[0], pair[1], MeasureKind::Sales, 0, value)?;
        }
    }
    let dims = vec![
        DimensionSpec::new(MeasureKind::Sales, 2.0),
        DimensionSpec::new(MeasureKind::Purchases, 2.0),
    ];
    let mut ids: Vec<PartnerId> = portfolio.members.keys().copied().collect();
    ids.push(anchor_id);
    let embedding = embed_map(&ledger, &dims, anchor_id, &ids, 0)?;
    let extent = embedding
        .coordinates
        .values()
        .flat_map(|c| c.iter().map(|x| x.abs()))
        .fold(0.0f64, f64::max);
    let scale = if extent > 0.0 { 0.8 * params.universe_half / extent } else { 1.0 };

    let universe = BoundingBox::centered(params.universe_half);
    let mut net = Network::new(universe, params.profile.attributes.clone());
    for v in net.environment.values_mut() {
        *v = params.demand;
    }
    net.table = table;
    net.ledger = ledger;
    place(&mut net, anchor, Point2::new(0.0, 0.0))?;
    net.anchor = Some(anchor_id);
    for (id, p) in &portfolio.members {
        let c = &embedding.coordinates[id];
        place(&mut net, p.clone(), Point2::new(c[0] * scale, c[1] * scale))?;
    }

    let h = params.horizon.max(1);
    let contracts = portfolio
        .regions
        .iter()
        .filter(|(_, s)| !s.infeasible)
        .flat_map(|(region, _)| {
            [
                Contract {
                    region: region.clone(),
                    required: BTreeMap::from([("skills".to_string(), 0.6)]),
                    start: 0,
                    duration: h,
                },
                Contract {
                    region: region.clone(),
                    required: BTreeMap::from([("experience".to_string(), 0.5), ("staff".to_string(), 0.5)]),
                    start: h / 4,
                    duration: (h / 2).max(1),
                },
            ]
        })
        .collect();

    let mut s = Scenario::new(format!("case-{}", params.seed), net, params.seed);
    s.dimensions = dims;
    s.sourcing = Some(SourcingState {
        portfolio,
        contracts,
        horizon: h,
    });
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_is_reproducible_and_consistent() {
        let p = CaseParams {
            count: 120,
            regions: 4,
            ..CaseParams::default()
        };
        let a = build_case(&p).unwrap();
        assert_eq!(a, build_case(&p).unwrap());
        let src = a.sourcing.as_ref().unwrap();
        assert_eq!(a.network.len(), src.portfolio.members.len() + 1);
        assert_eq!(a.network.anchor, Some(121));
        assert!(a.network.triangulation.delaunay_violations().is_empty());
        assert!(src.portfolio.regions.values().all(|r| r.infeasible || (3..=15).contains(&r.selected.len())));
        assert_eq!(src.contracts.len(), 2 * src.portfolio.regions.values().filter(|r| !r.infeasible).count());
        let q = crate::genetics::consistence(a.network.partners.values(), 0).unwrap();
        assert!(q.q > 0.0 && q.shared >= 1);
        let k = a.kpis().unwrap();
        assert!((0.0..=1.0).contains(&k.fulfillment_rate));
    }
}
