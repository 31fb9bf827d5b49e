//! Partners placed as generators of the triangulation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::business_map::{pair_force, PreferenceTable, RelationLedger};
use crate::geometry::{BoundingBox, GeometryError, Point2, Triangulation, VertexId};
use crate::kinetics::{build_vag, KineticsError, MoveTrace, ObjectId, DEFAULT_SNAP_TOLERANCE};

pub type PartnerId = u64;

/// A network node: a business party with its goals and intangibles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partner {
    pub id: PartnerId,
    pub name: String,
    pub region: String,
    pub goals: BTreeSet<String>,
    /// Attribute levels in `[0, 1]` over the network's attribute dictionary.
    pub footprint: BTreeMap<String, f64>,
    /// Track record with competitors or customers of the anchor.
    #[serde(default)]
    pub competitor_history: bool,
    #[serde(default)]
    pub state: u8,
    /// Generator backing this partner; assigned on placement.
    #[serde(default)]
    pub vertex: Option<VertexId>,
}

impl Partner {
    pub fn new(id: PartnerId, region: impl Into<String>) -> Self {
        Partner {
            id,
            name: format!("P{id:04}"),
            region: region.into(),
            goals: BTreeSet::new(),
            footprint: BTreeMap::new(),
            competitor_history: false,
            state: 0,
            vertex: None,
        }
    }

    pub fn with_goals<I, S>(mut self, goals: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.goals = goals.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_footprint<I, S>(mut self, footprint: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        self.footprint = footprint.into_iter().map(|(k, v)| (k.into(), v)).collect();
        self
    }

    pub fn attribute(&self, name: &str) -> f64 {
        self.footprint.get(name).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("unknown partner {0}")]
    UnknownPartner(PartnerId),
    #[error("partner {0} already exists")]
    DuplicatePartner(PartnerId),
    #[error("partner {0} has no goals")]
    NoGoals(PartnerId),
    #[error("partner {id} attribute {attribute} = {value} is outside [0, 1]")]
    AttributeRange { id: PartnerId, attribute: String, value: f64 },
    #[error("partner {id} attribute {attribute} is not in the dictionary")]
    UnknownAttribute { id: PartnerId, attribute: String },
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

impl From<GeometryError> for NetworkError {
    fn from(e: GeometryError) -> Self {
        NetworkError::Kinetics(KineticsError::Geometry(e))
    }
}

/// Partners, their map positions and the relations between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub triangulation: Triangulation,
    pub partners: BTreeMap<PartnerId, Partner>,
    /// Attribute dictionary shared by all footprints.
    pub attributes: Vec<String>,
    /// Environment the footprints are scored against.
    pub environment: BTreeMap<String, f64>,
    pub ledger: RelationLedger,
    pub table: PreferenceTable,
    /// The systems integrator around which the map is anchored.
    pub anchor: Option<PartnerId>,
    /// Relations cut by a sever event, stored as `(smaller, larger)`.
    pub severed: BTreeSet<(PartnerId, PartnerId)>,
    pub next_id: PartnerId,
}

impl Network {
    pub fn new(universe: BoundingBox, attributes: Vec<String>) -> Self {
        let environment = attributes.iter().map(|a| (a.clone(), 0.5)).collect();
        Network {
            triangulation: Triangulation::new(universe),
            partners: BTreeMap::new(),
            attributes,
            environment,
            ledger: RelationLedger::default(),
            table: PreferenceTable::default(),
            anchor: None,
            severed: BTreeSet::new(),
            next_id: 1,
        }
    }

    pub fn universe(&self) -> BoundingBox {
        self.triangulation.universe()
    }

    pub fn len(&self) -> usize {
        self.partners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partners.is_empty()
    }

    pub fn partner(&self, id: PartnerId) -> Result<&Partner, NetworkError> {
        self.partners.get(&id).ok_or(NetworkError::UnknownPartner(id))
    }

    pub fn partner_mut(&mut self, id: PartnerId) -> Result<&mut Partner, NetworkError> {
        self.partners.get_mut(&id).ok_or(NetworkError::UnknownPartner(id))
    }

    pub fn position(&self, id: PartnerId) -> Result<Point2, NetworkError> {
        let p = self.partner(id)?;
        let v = p.vertex.ok_or(NetworkError::UnknownPartner(id))?;
        Ok(self.triangulation.position(v))
    }

    pub fn partner_at(&self, v: VertexId) -> Option<PartnerId> {
        self.triangulation.vertex(v).and_then(|x| x.payload)
    }

    pub fn validate_partner(&self, p: &Partner) -> Result<(), NetworkError> {
        if p.goals.is_empty() {
            return Err(NetworkError::NoGoals(p.id));
        }
        for (k, &v) in &p.footprint {
            if !self.attributes.is_empty() && !self.attributes.contains(k) {
                return Err(NetworkError::UnknownAttribute {
                    id: p.id,
                    attribute: k.clone(),
                });
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(NetworkError::AttributeRange {
                    id: p.id,
                    attribute: k.clone(),
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Places a partner at `position`. An id of 0 asks for a fresh id.
    /// Attributes missing from the footprint are filled in at level 0.
    pub fn add_partner(&mut self, mut partner: Partner, position: Point2) -> Result<PartnerId, NetworkError> {
        if partner.id == 0 {
            partner.id = self.next_id;
        }
        if self.partners.contains_key(&partner.id) {
            return Err(NetworkError::DuplicatePartner(partner.id));
        }
        self.validate_partner(&partner)?;
        for a in &self.attributes {
            partner.footprint.entry(a.clone()).or_insert(0.0);
        }
        let v = self.triangulation.insert_point(position, Some(partner.id))?;
        partner.vertex = Some(v);
        let id = partner.id;
        self.next_id = self.next_id.max(id + 1);
        self.partners.insert(id, partner);
        Ok(id)
    }

    pub fn remove_partner(&mut self, id: PartnerId) -> Result<Partner, NetworkError> {
        let v = self.partner(id)?.vertex;
        if let Some(v) = v {
            self.triangulation.delete_point(v)?;
        }
        let mut p = self.partners.remove(&id).expect("checked");
        p.vertex = None;
        if self.anchor == Some(id) {
            self.anchor = None;
        }
        Ok(p)
    }

    pub fn move_partner(&mut self, id: PartnerId, target: Point2) -> Result<MoveTrace, NetworkError> {
        let v = self.partner(id)?.vertex.ok_or(NetworkError::UnknownPartner(id))?;
        Ok(self.triangulation.move_point(v, target)?)
    }

    /// Whether the partner's generator is an endpoint of a segment object.
    pub fn is_locked(&self, id: PartnerId) -> bool {
        self.partners
            .get(&id)
            .and_then(|p| p.vertex)
            .is_some_and(|v| self.triangulation.segment_of_endpoint(v).is_some())
    }

    pub fn is_severed(&self, a: PartnerId, b: PartnerId) -> bool {
        self.severed.contains(&(a.min(b), a.max(b)))
    }

    /// Partner adjacency induced by the VAG.
    pub fn adjacency(&self) -> BTreeMap<PartnerId, Vec<PartnerId>> {
        let vag = build_vag(&self.triangulation, DEFAULT_SNAP_TOLERANCE);
        let mut out: BTreeMap<PartnerId, Vec<PartnerId>> =
            self.partners.keys().map(|&id| (id, Vec::new())).collect();
        for (a, b) in vag.edges() {
            if let (ObjectId::Point(va), ObjectId::Point(vb)) = (a, b) {
                if let (Some(pa), Some(pb)) = (self.partner_at(va), self.partner_at(vb)) {
                    if pa != pb {
                        out.entry(pa).or_default().push(pb);
                        out.entry(pb).or_default().push(pa);
                    }
                }
            }
        }
        for list in out.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        out
    }

    pub fn force(&self, a: PartnerId, b: PartnerId) -> Result<f64, NetworkError> {
        Ok(pair_force(self.partner(a)?, self.partner(b)?, &self.table))
    }

    /// Signed force on every adjacent pair, keyed `(smaller, larger)`.
    pub fn forces(&self) -> BTreeMap<(PartnerId, PartnerId), f64> {
        let mut out = BTreeMap::new();
        for (a, list) in self.adjacency() {
            for b in list {
                if a < b && !self.is_severed(a, b) {
                    out.insert((a, b), pair_force(&self.partners[&a], &self.partners[&b], &self.table));
                }
            }
        }
        out
    }

    /// Sum of the positive adjacent forces.
    pub fn total_attraction(&self) -> f64 {
        self.forces().values().filter(|f| **f > 0.0).sum()
    }

    /// Drops the relation between two partners: ledger entries in both
    /// directions are zeroed and the pair no longer exerts force.
    pub fn sever(&mut self, a: PartnerId, b: PartnerId) {
        self.ledger.zero_between(a, b);
        self.severed.insert((a.min(b), a.max(b)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> Network {
        Network::new(BoundingBox::centered(10.0), vec!["skill".into(), "staff".into()])
    }

    #[test]
    fn partners_map_to_generators() {
        let mut n = net();
        let a = n.add_partner(Partner::new(0, "R01").with_goals(["g"]), Point2::new(1.0, 1.0)).unwrap();
        let b = n.add_partner(Partner::new(0, "R01").with_goals(["g"]), Point2::new(-1.0, 1.0)).unwrap();
        assert_eq!((a, b), (1, 2));
        assert_eq!(n.position(b).unwrap(), Point2::new(-1.0, 1.0));
        assert_eq!(n.adjacency()[&a], vec![b]);
        let v = n.partner(a).unwrap().vertex.unwrap();
        assert_eq!(n.partner_at(v), Some(a));
        n.remove_partner(a).unwrap();
        assert!(n.adjacency()[&b].is_empty());
    }

    #[test]
    fn validation() {
        let mut n = net();
        assert_eq!(
            n.add_partner(Partner::new(5, "R"), Point2::new(0.0, 0.0)),
            Err(NetworkError::NoGoals(5))
        );
        let bad = Partner::new(5, "R").with_goals(["g"]).with_footprint([("skill", 1.5)]);
        assert!(matches!(n.add_partner(bad, Point2::new(0.0, 0.0)), Err(NetworkError::AttributeRange { .. })));
        let unknown = Partner::new(5, "R").with_goals(["g"]).with_footprint([("color", 0.5)]);
        assert!(matches!(n.add_partner(unknown, Point2::new(0.0, 0.0)), Err(NetworkError::UnknownAttribute { .. })));
        n.add_partner(Partner::new(5, "R").with_goals(["g"]), Point2::new(0.0, 0.0)).unwrap();
        assert_eq!(
            n.add_partner(Partner::new(5, "R").with_goals(["g"]), Point2::new(1.0, 0.0)),
            Err(NetworkError::DuplicatePartner(5))
        );
        assert!(n.add_partner(Partner::new(0, "R").with_goals(["g"]), Point2::new(0.0, 0.0)).is_err());
        assert_eq!(n.len(), 1);
    }
}
