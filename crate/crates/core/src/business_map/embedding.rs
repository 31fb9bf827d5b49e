use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{MapError, MeasureKind, RelationLedger};
use crate::network::PartnerId;

/// One map axis: which measure it reads and how measures become distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSpec {
    pub kind: MeasureKind,
    #[serde(default = "unit_scale")]
    pub scale: f64,
    /// Distance assigned to a zero measure.
    pub cap: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl DimensionSpec {
    pub fn new(kind: MeasureKind, cap: f64) -> Self {
        DimensionSpec { kind, scale: 1.0, cap }
    }

    pub fn validate(&self) -> Result<(), MapError> {
        if self.scale > 0.0 && self.cap > 0.0 && self.scale.is_finite() && self.cap.is_finite() {
            Ok(())
        } else {
            Err(MapError::InvalidDimension {
                scale: self.scale,
                cap: self.cap,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEmbedding {
    pub coordinates: BTreeMap<PartnerId, Vec<f64>>,
    /// Sum of squared deviation errors over all axes.
    pub residual: f64,
    /// Partners not tied to the anchor by data on some axis.
    pub flagged: BTreeSet<PartnerId>,
}

impl MapEmbedding {
    pub fn dimensions(&self) -> usize {
        self.coordinates.values().next().map_or(0, Vec::len)
    }
}

/// Business volume turned into distance: more business, closer together.
pub fn inverse_measure(value: f64, spec: &DimensionSpec) -> Result<f64, MapError> {
    if !(value >= 0.0) || value.is_nan() {
        return Err(MapError::InvalidValue(value));
    }
    if value == 0.0 {
        return Ok(spec.cap);
    }
    Ok((spec.scale / value).min(spec.cap))
}

/// `(from, to, deviation)`: the map should satisfy `x[from] - x[to] = deviation`.
type Constraint = (PartnerId, PartnerId, f64);

fn constraints(
    ledger: &RelationLedger,
    spec: &DimensionSpec,
    period: u32,
    members: &BTreeSet<PartnerId>,
) -> Result<Vec<Constraint>, MapError> {
    ledger
        .entries_for(spec.kind, period)
        .filter(|e| e.from != e.to && members.contains(&e.from) && members.contains(&e.to))
        .map(|e| Ok((e.from, e.to, inverse_measure(e.value, spec)?)))
        .collect()
}

fn components(members: &BTreeSet<PartnerId>, cons: &[Constraint]) -> Vec<Vec<PartnerId>> {
    let mut adj: BTreeMap<PartnerId, Vec<PartnerId>> = members.iter().map(|&m| (m, Vec::new())).collect();
    for &(a, b, _) in cons {
        adj.get_mut(&a).expect("member").push(b);
        adj.get_mut(&b).expect("member").push(a);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in members {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut i = 0;
        while i < comp.len() {
            for &n in &adj[&comp[i]] {
                if seen.insert(n) {
                    comp.push(n);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Least-squares coordinates of one connected component with `pin` fixed.
fn solve_component(comp: &[PartnerId], pin: PartnerId, pinned: f64, cons: &[Constraint]) -> BTreeMap<PartnerId, f64> {
    let unknowns: Vec<PartnerId> = comp.iter().copied().filter(|&c| c != pin).collect();
    let index: BTreeMap<PartnerId, usize> = unknowns.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let n = unknowns.len();
    let mut out = BTreeMap::from([(pin, pinned)]);
    if n == 0 {
        return out;
    }
    let mut normal = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for &(a, b, d) in cons {
        if !index.contains_key(&a) && a != pin {
            continue;
        }
        if !index.contains_key(&b) && b != pin {
            continue;
        }
        // Residual x_a - x_b - d.
        match (index.get(&a), index.get(&b)) {
            (Some(&i), Some(&j)) => {
                normal[(i, i)] += 1.0;
                normal[(j, j)] += 1.0;
                normal[(i, j)] -= 1.0;
                normal[(j, i)] -= 1.0;
                rhs[i] += d;
                rhs[j] -= d;
            }
            (Some(&i), None) => {
                normal[(i, i)] += 1.0;
                rhs[i] += d + pinned;
            }
            (None, Some(&j)) => {
                normal[(j, j)] += 1.0;
                rhs[j] += pinned - d;
            }
            (None, None) => {}
        }
    }
    let x = normal
        .clone()
        .cholesky()
        .map(|c| c.solve(&rhs))
        .or_else(|| normal.lu().solve(&rhs))
        .expect("a connected component with a pinned node has a nonsingular system");
    for (k, &c) in unknowns.iter().enumerate() {
        out.insert(c, x[k]);
    }
    out
}

/// Per-axis least-squares map with `anchor` pinned at the origin. Partners
/// with no data linking them to the anchor on an axis are placed at the
/// axis cap and flagged.
pub fn embed_map(
    ledger: &RelationLedger,
    dims: &[DimensionSpec],
    anchor: PartnerId,
    partners: &[PartnerId],
    period: u32,
) -> Result<MapEmbedding, MapError> {
    if partners.is_empty() {
        return Err(MapError::NoPartners);
    }
    let members: BTreeSet<PartnerId> = partners.iter().copied().collect();
    if !members.contains(&anchor) {
        return Err(MapError::MissingAnchor(anchor));
    }
    for d in dims {
        d.validate()?;
    }
    let mut coordinates: BTreeMap<PartnerId, Vec<f64>> = members.iter().map(|&m| (m, vec![0.0; dims.len()])).collect();
    let mut flagged = BTreeSet::new();
    let mut all_constraints = Vec::with_capacity(dims.len());
    for (axis, spec) in dims.iter().enumerate() {
        let cons = constraints(ledger, spec, period, &members)?;
        for comp in components(&members, &cons) {
            let (pin, pinned) = if comp.contains(&anchor) {
                (anchor, 0.0)
            } else {
                flagged.extend(comp.iter().copied());
                (comp[0], spec.cap)
            };
            for (id, x) in solve_component(&comp, pin, pinned, &cons) {
                coordinates.get_mut(&id).expect("member")[axis] = x;
            }
        }
        all_constraints.push(cons);
    }
    let residual = all_constraints
        .iter()
        .enumerate()
        .flat_map(|(axis, cons)| {
            let coordinates = &coordinates;
            cons.iter().map(move |&(a, b, d)| {
                let r = coordinates[&a][axis] - coordinates[&b][axis] - d;
                r * r
            })
        })
        .sum();
    Ok(MapEmbedding {
        coordinates,
        residual,
        flagged,
    })
}

fn all_constraints(
    ledger: &RelationLedger,
    dims: &[DimensionSpec],
    period: u32,
    coords: &BTreeMap<PartnerId, Vec<f64>>,
) -> Result<Vec<Vec<Constraint>>, MapError> {
    let members: BTreeSet<PartnerId> = coords.keys().copied().collect();
    dims.iter().map(|d| constraints(ledger, d, period, &members)).collect()
}

/// Sum of squared deviation errors for arbitrary coordinates.
pub fn residual(
    ledger: &RelationLedger,
    dims: &[DimensionSpec],
    period: u32,
    coords: &BTreeMap<PartnerId, Vec<f64>>,
) -> Result<f64, MapError> {
    let cons = all_constraints(ledger, dims, period, coords)?;
    Ok(cons
        .iter()
        .enumerate()
        .flat_map(|(axis, c)| {
            c.iter().map(move |&(a, b, d)| {
                let r = coords[&a][axis] - coords[&b][axis] - d;
                r * r
            })
        })
        .sum())
}

/// Analytic gradient of [`residual`] with respect to every coordinate.
pub fn residual_gradient(
    ledger: &RelationLedger,
    dims: &[DimensionSpec],
    period: u32,
    coords: &BTreeMap<PartnerId, Vec<f64>>,
) -> Result<BTreeMap<PartnerId, Vec<f64>>, MapError> {
    let cons = all_constraints(ledger, dims, period, coords)?;
    let mut grad: BTreeMap<PartnerId, Vec<f64>> = coords.keys().map(|&k| (k, vec![0.0; dims.len()])).collect();
    for (axis, c) in cons.iter().enumerate() {
        for &(a, b, d) in c {
            let r = coords[&a][axis] - coords[&b][axis] - d;
            grad.get_mut(&a).expect("member")[axis] += 2.0 * r;
            grad.get_mut(&b).expect("member")[axis] -= 2.0 * r;
        }
    }
    Ok(grad)
}
