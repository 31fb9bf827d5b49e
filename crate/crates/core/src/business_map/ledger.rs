use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::MapError;
use crate::network::PartnerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// M€ per year.
    Sales,
    /// M€ per year.
    Purchases,
    /// Fraction in `[0, 1]`.
    OwnershipShare,
    /// M€ per year or a count.
    LicensePayments,
    /// Sales plus purchases, M€ per year.
    TotalVolume,
}

/// A directed measure from one partner to another in one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationEntry {
    pub from: PartnerId,
    pub to: PartnerId,
    pub kind: MeasureKind,
    pub period: u32,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationLedger {
    pub entries: Vec<RelationEntry>,
}

impl RelationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, from: PartnerId, to: PartnerId, kind: MeasureKind, period: u32, value: f64) -> Result<(), MapError> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(MapError::InvalidValue(value));
        }
        self.entries.push(RelationEntry {
            from,
            to,
            kind,
            period,
            value,
        });
        Ok(())
    }

    pub fn validate(&self) -> Result<(), MapError> {
        for e in &self.entries {
            if !(e.value >= 0.0 && e.value.is_finite()) {
                return Err(MapError::InvalidValue(e.value));
            }
        }
        let periods: BTreeSet<u32> = self.entries.iter().map(|e| e.period).collect();
        if let (Some(&lo), Some(&hi)) = (periods.first(), periods.last()) {
            if let Some(gap) = (lo..=hi).find(|p| !periods.contains(p)) {
                return Err(MapError::PeriodGap(gap));
            }
        }
        Ok(())
    }

    pub fn entries_for(&self, kind: MeasureKind, period: u32) -> impl Iterator<Item = &RelationEntry> {
        self.entries
            .iter()
            .filter(move |e| e.kind == kind && e.period == period)
    }

    pub fn zero_between(&mut self, a: PartnerId, b: PartnerId) {
        for e in &mut self.entries {
            if (e.from == a && e.to == b) || (e.from == b && e.to == a) {
                e.value = 0.0;
            }
        }
    }

    /// Removes every entry touching `id`.
    pub fn forget(&mut self, id: PartnerId) {
        self.entries.retain(|e| e.from != id && e.to != id);
    }
}
