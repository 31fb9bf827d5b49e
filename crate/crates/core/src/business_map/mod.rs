//! The smart business map: pairwise business measures turned into map
//! coordinates, and preference tables turned into pairwise forces.

mod embedding;
mod ledger;
mod preferences;

pub use embedding::{embed_map, inverse_measure, residual, residual_gradient, DimensionSpec, MapEmbedding};
pub use ledger::{MeasureKind, RelationEntry, RelationLedger};
pub use preferences::{pair_force, Predicate, PreferenceRow, PreferenceTable};

use thiserror::Error;

use crate::network::PartnerId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("measure value {0} is negative or not finite")]
    InvalidValue(f64),
    #[error("dimension scale and cap must be positive, got scale {scale} and cap {cap}")]
    InvalidDimension { scale: f64, cap: f64 },
    #[error("no partners to embed")]
    NoPartners,
    #[error("anchor {0} is not among the partners")]
    MissingAnchor(PartnerId),
    #[error("ledger periods are not contiguous: missing {0}")]
    PeriodGap(u32),
    #[error("preference row {0} has a non-finite weight")]
    NonFiniteWeight(String),
}
