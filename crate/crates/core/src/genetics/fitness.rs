use std::collections::BTreeMap;

use super::GeneticsError;
use crate::network::Partner;
use crate::registry::Registry;

/// Scores how well a footprint corresponds to the environment, in `[0, 1]`.
pub trait FitnessMeasure: Send + Sync {
    fn score(&self, footprint: &BTreeMap<String, f64>, environment: &BTreeMap<String, f64>) -> Result<f64, GeneticsError>;
}

fn same_dictionary(f: &BTreeMap<String, f64>, e: &BTreeMap<String, f64>) -> Result<(), GeneticsError> {
    if let Some(k) = f.keys().find(|k| !e.contains_key(*k)) {
        return Err(GeneticsError::DictionaryMismatch(format!("{k} missing from environment")));
    }
    if let Some(k) = e.keys().find(|k| !f.contains_key(*k)) {
        return Err(GeneticsError::DictionaryMismatch(format!("{k} missing from footprint")));
    }
    Ok(())
}

/// Weighted sum of elementwise minima over weighted sum of maxima.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MinMaxOverlap {
    /// Per-attribute weights; absent attributes weigh 1.
    pub weights: BTreeMap<String, f64>,
}

impl FitnessMeasure for MinMaxOverlap {
    fn score(&self, f: &BTreeMap<String, f64>, e: &BTreeMap<String, f64>) -> Result<f64, GeneticsError> {
        same_dictionary(f, e)?;
        let (mut lo, mut hi) = (0.0, 0.0);
        for (k, &fk) in f {
            let w = self.weights.get(k).copied().unwrap_or(1.0);
            lo += w * fk.min(e[k]);
            hi += w * fk.max(e[k]);
        }
        Ok(if hi == 0.0 { 1.0 } else { lo / hi })
    }
}

/// Cosine similarity; non-negative footprints keep it in `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Cosine;

impl FitnessMeasure for Cosine {
    fn score(&self, f: &BTreeMap<String, f64>, e: &BTreeMap<String, f64>) -> Result<f64, GeneticsError> {
        same_dictionary(f, e)?;
        let dot: f64 = f.iter().map(|(k, v)| v * e[k]).sum();
        let nf = f.values().map(|v| v * v).sum::<f64>().sqrt();
        let ne = e.values().map(|v| v * v).sum::<f64>().sqrt();
        Ok(match (nf == 0.0, ne == 0.0) {
            (true, true) => 1.0,
            (true, false) | (false, true) => 0.0,
            _ => (dot / (nf * ne)).clamp(0.0, 1.0),
        })
    }
}

/// Uniform-weight min/max overlap of a partner's footprint.
pub fn fitness(partner: &Partner, environment: &BTreeMap<String, f64>) -> Result<f64, GeneticsError> {
    MinMaxOverlap::default().score(&partner.footprint, environment)
}

pub fn fitness_measures() -> Registry<dyn FitnessMeasure> {
    let mut r: Registry<dyn FitnessMeasure> = Registry::new("fitness measure");
    r.register("min-max-overlap", Box::new(MinMaxOverlap::default()));
    r.register("cosine", Box::new(Cosine));
    r
}
