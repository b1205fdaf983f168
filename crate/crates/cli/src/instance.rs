//! JSON instance files.
//!
//! ```json
//! {
//!   "nodes": 3,
//!   "edges": [{"from": 0, "to": 1, "capacity": 10.0}, ...],
//!   "nodal_capacities": [10.0, 10.0, 10.0],
//!   "source": 0,
//!   "sink": 2,
//!   "injection": 5.0,
//!   "meta": { ... }
//! }
//! ```
//!
//! Node ids are 0-based. `meta` is optional and ignored when solving.

use std::fs;
use std::path::Path;

use cfp_split::flowprob::{Calibration, CalibrationAction, CapacityModel, FlowEdge, FlowError, FlowInstance};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed instance file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Invalid(#[from] FlowError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRecord {
    pub round: usize,
    pub action: String,
    pub injection: f64,
    pub edge_capacity: f64,
    pub feasible: bool,
    pub throughput: f64,
}

/// How an instance was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    /// Seed given to `gen`.
    pub seed: u64,
    /// Seed of the graph actually used; differs from `seed` when earlier
    /// draws could not be calibrated.
    pub graph_seed: u64,
    pub attempt: usize,
    pub edge_probability: f64,
    /// `feasible` or `infeasible`.
    pub mode: String,
    /// `proportional` or `relaxed_endpoints`.
    pub capacity_model: String,
    pub edge_capacity: f64,
    pub calibration: Vec<CalibrationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub nodes: usize,
    pub edges: Vec<EdgeRecord>,
    pub nodal_capacities: Vec<f64>,
    pub source: usize,
    pub sink: usize,
    pub injection: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

impl InstanceFile {
    pub fn from_instance(inst: &FlowInstance, meta: Option<Meta>) -> Self {
        InstanceFile {
            nodes: inst.n_nodes(),
            edges: inst
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    from: e.from,
                    to: e.to,
                    capacity: e.capacity,
                })
                .collect(),
            nodal_capacities: inst.nodal_capacity().to_vec(),
            source: inst.source(),
            sink: inst.sink(),
            injection: inst.injection(),
            meta,
        }
    }

    pub fn to_instance(&self) -> Result<FlowInstance, FlowError> {
        let edges = self
            .edges
            .iter()
            .map(|e| FlowEdge {
                from: e.from,
                to: e.to,
                capacity: e.capacity,
            })
            .collect();
        FlowInstance::new(
            self.nodes,
            edges,
            self.nodal_capacities.clone(),
            self.source,
            self.sink,
            self.injection,
        )
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("instance serializes");
        text.push('\n');
        text
    }

    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Reads and validates an instance file.
pub fn read_instance(path: &Path) -> Result<(InstanceFile, FlowInstance), InstanceError> {
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = InstanceFile::parse(&text)?;
    let inst = file.to_instance()?;
    Ok((file, inst))
}

pub fn action_name(action: CalibrationAction) -> &'static str {
    match action {
        CalibrationAction::Initial => "initial",
        CalibrationAction::HalveInjection => "halve_injection",
        CalibrationAction::DoubleCapacity => "double_capacity",
        CalibrationAction::DoubleInjection => "double_injection",
        CalibrationAction::HalveCapacity => "halve_capacity",
        CalibrationAction::BetweenThroughputAndLocalLimit => "between_throughput_and_local_limit",
    }
}

pub fn model_name(model: CapacityModel) -> &'static str {
    match model {
        CapacityModel::Proportional => "proportional",
        CapacityModel::RelaxedEndpoints => "relaxed_endpoints",
    }
}

pub fn calibration_records(cal: &Calibration) -> Vec<CalibrationRecord> {
    cal.trace
        .iter()
        .map(|s| CalibrationRecord {
            round: s.round,
            action: action_name(s.action).to_string(),
            injection: s.injection,
            edge_capacity: s.edge_capacity,
            feasible: s.feasible,
            throughput: s.throughput,
        })
        .collect()
}
