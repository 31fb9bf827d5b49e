//! Versioned scenario documents binding a network to its settings, sourcing
//! state, event log and consistence series.

mod case;
mod export;
mod view;

pub use case::{build_case, build_case_with, case_table, CaseParams, MISSION_GOAL};
pub use export::{consistence_csv, export_map_svg, kpi_csv, render_map_svg};
pub use view::{apply_whatif, project_whatif, CellView, ForceView, MapView, WhatIf, WhatIfProjection};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::business_map::{DimensionSpec, MapError, PreferenceTable};
use crate::genetics::{evolve, ConsistencePoint, DynamicsSettings, GeneticsError, LifecycleEvent, TickRecord};
use crate::geometry::{GeometryError, Point2};
use crate::kinetics::MoveTrace;
use crate::network::{Network, NetworkError, Partner, PartnerId};
use crate::registry::{Strategies, UnknownStrategy};
use crate::sourcing::{evaluate_kpis, Contract, KpiReport, Portfolio, SourcingError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("unsupported format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u64 },
    #[error("malformed scenario at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("scenario has no partners")]
    Empty,
    #[error("partner {0} anchors the map and cannot be removed")]
    AnchorFixed(PartnerId),
    #[error("scenario has no sourcing portfolio")]
    NoSourcing,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Genetics(#[from] GeneticsError),
    #[error(transparent)]
    Sourcing(#[from] SourcingError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
}

impl From<GeometryError> for ScenarioError {
    fn from(e: GeometryError) -> Self {
        ScenarioError::Network(e.into())
    }
}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        ScenarioError::Io(e.to_string())
    }
}

/// What happened to a scenario, in the order it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEvent {
    Lifecycle { event: LifecycleEvent },
    PartnerAdded { partner: PartnerId, position: Point2 },
    PartnerRemoved { partner: PartnerId },
    PartnerMoved { partner: PartnerId, from: Point2, trace: MoveTrace },
    TableReplaced { rows: usize },
    Advanced { from: u64, to: u64 },
    WhatIfCommitted { action: WhatIf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub tick: u64,
    pub event: LogEvent,
}

/// The outsourcing case attached to a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcingState {
    pub portfolio: Portfolio,
    pub contracts: Vec<Contract>,
    pub horizon: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub name: String,
    pub seed: u64,
    pub tick: u64,
    pub network: Network,
    pub dimensions: Vec<DimensionSpec>,
    pub settings: DynamicsSettings,
    pub sourcing: Option<SourcingState>,
    pub events: Vec<LogEntry>,
    pub consistence: Vec<ConsistencePoint>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<u64>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, network: Network, seed: u64) -> Self {
        Scenario {
            format_version: FORMAT_VERSION,
            name: name.into(),
            seed,
            tick: 0,
            network,
            dimensions: Vec::new(),
            settings: DynamicsSettings::default(),
            sourcing: None,
            events: Vec::new(),
            consistence: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// Parses a scenario, rejecting other format versions before the body
    /// is examined.
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        if let Ok(VersionProbe { format_version: Some(v) }) = serde_json::from_str::<VersionProbe>(text) {
            if v != FORMAT_VERSION as u64 {
                return Err(ScenarioError::Version { found: v });
            }
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::Parse {
                path: if path == "." { "document".into() } else { path },
                message: e.into_inner().to_string(),
            }
        })
    }

    /// SHA-256 of the compact serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn log(&mut self, event: LogEvent) -> u64 {
        let seq = self.events.last().map_or(1, |e| e.seq + 1);
        self.events.push(LogEntry {
            seq,
            tick: self.tick,
            event,
        });
        seq
    }

    /// Runs the configured dynamics forward, logging every event and
    /// consistence point.
    pub fn evolve(&mut self, ticks: u64, strategies: &Strategies) -> Result<Vec<TickRecord>, ScenarioError> {
        let records = evolve(&mut self.network, &self.settings, strategies, self.seed, 0, self.tick, ticks)?;
        for r in &records {
            self.tick = r.tick;
            for e in &r.events {
                self.log(LogEvent::Lifecycle { event: e.clone() });
            }
            self.consistence.extend(r.consistence.clone());
        }
        if let Some(last) = records.last() {
            self.log(LogEvent::Advanced {
                from: last.tick - ticks,
                to: last.tick,
            });
        }
        Ok(records)
    }

    pub fn add_partner(&mut self, partner: Partner, position: Point2) -> Result<(PartnerId, u64), ScenarioError> {
        let id = self.network.add_partner(partner, position)?;
        let position = self.network.position(id)?;
        Ok((id, self.log(LogEvent::PartnerAdded { partner: id, position })))
    }

    /// Removes a partner from the map. The anchor cannot be removed.
    pub fn remove_partner(&mut self, id: PartnerId) -> Result<u64, ScenarioError> {
        if self.network.anchor == Some(id) {
            return Err(ScenarioError::AnchorFixed(id));
        }
        self.network.remove_partner(id)?;
        Ok(self.log(LogEvent::PartnerRemoved { partner: id }))
    }

    pub fn move_partner(&mut self, id: PartnerId, target: Point2) -> Result<(MoveTrace, u64), ScenarioError> {
        let from = self.network.position(id)?;
        let trace = self.network.move_partner(id, target)?;
        let seq = self.log(LogEvent::PartnerMoved {
            partner: id,
            from,
            trace: trace.clone(),
        });
        Ok((trace, seq))
    }

    pub fn replace_table(&mut self, table: PreferenceTable) -> Result<u64, ScenarioError> {
        table.validate()?;
        let rows = table.rows.len();
        self.network.table = table;
        Ok(self.log(LogEvent::TableReplaced { rows }))
    }

    pub fn lifecycle_events(&self) -> Vec<(u64, LifecycleEvent)> {
        self.events
            .iter()
            .filter_map(|e| match &e.event {
                LogEvent::Lifecycle { event } => Some((e.tick, event.clone())),
                _ => None,
            })
            .collect()
    }

    pub fn kpis(&self) -> Result<KpiReport, ScenarioError> {
        let s = self.sourcing.as_ref().ok_or(ScenarioError::NoSourcing)?;
        Ok(evaluate_kpis(
            &s.portfolio,
            &s.contracts,
            &self.lifecycle_events(),
            s.horizon,
            &self.network.environment,
        )?)
    }
}

pub fn save_scenario(s: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    Ok(fs::write(path, s.to_json())?)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    Scenario::from_json(&fs::read_to_string(path)?)
}
