//! The outsourcing case: a synthetic supplier pool, regional portfolio
//! selection around the integrator, and contract KPIs.

mod candidates;
mod kpi;
mod selection;

pub use candidates::{generate_candidates, region_label, CandidateProfile, CASE_ATTRIBUTES};
pub use kpi::{diversity, evaluate_kpis, Contract, KpiReport};
pub use selection::{select_portfolio, selectors, Exhaustive, Greedy, Portfolio, PortfolioConstraints, PortfolioSelector, RegionSelection};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourcingError {
    #[error("at least one candidate must be generated")]
    ZeroCount,
    #[error("at least one region is required")]
    NoRegions,
    #[error("candidate list is empty")]
    NoCandidates,
    #[error("portfolio is empty")]
    EmptyPortfolio,
    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),
    #[error("invalid candidate profile: {0}")]
    InvalidProfile(String),
    #[error("horizon must be at least one tick")]
    ZeroHorizon,
    #[error("contract {0} has zero duration")]
    ZeroDuration(usize),
    #[error("exhaustive search over {0} candidates is too large")]
    TooLarge(usize),
}
