//! Instance generation: random digraph, source/sink choice, calibration.

use cfp_split::flowprob::{calibrate_feasible, calibrate_infeasible, FlowError};
use cfp_split::graphgen::{generate_graph_with, GraphGenError, GraphGenOptions};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{calibration_records, model_name, InstanceFile, Meta};

/// Graph draws tried before giving up on a calibration mode.
pub const MAX_GRAPH_ATTEMPTS: usize = 200;

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Feasible,
    Infeasible,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Feasible => "feasible",
            Mode::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error(transparent)]
    Graph(#[from] GraphGenError),
    #[error("no {mode} calibration in {attempts} graph draws (last error: {last})")]
    Calibration {
        mode: &'static str,
        attempts: usize,
        last: FlowError,
    },
}

/// Seed of the `attempt`-th graph draw for a user seed.
pub fn graph_seed(seed: u64, attempt: usize) -> u64 {
    seed.wrapping_add((attempt as u64).wrapping_mul(SEED_STRIDE))
}

/// Draws graphs from successive seeds until one calibrates in `mode`.
///
/// Feasible calibration only fails on graphs without enough relaying
/// capacity; infeasible calibration also rejects graphs whose bottleneck sits
/// at the source or sink, so that mode often needs a few draws.
pub fn generate(nodes: usize, seed: u64, mode: Mode, edge_probability: f64) -> Result<InstanceFile, GenError> {
    let options = GraphGenOptions {
        edge_probability,
        ..Default::default()
    };
    let mut last = None;
    for attempt in 0..MAX_GRAPH_ATTEMPTS {
        let gseed = graph_seed(seed, attempt);
        let adj = generate_graph_with(nodes, &mut ChaCha8Rng::seed_from_u64(gseed), &options)?;
        let graph = adj.to_flow_graph();
        let calibrated = match mode {
            Mode::Feasible => calibrate_feasible(&graph),
            Mode::Infeasible => calibrate_infeasible(&graph),
        };
        match calibrated {
            Ok(cal) => {
                let meta = Meta {
                    seed,
                    graph_seed: gseed,
                    attempt,
                    edge_probability,
                    mode: mode.name().to_string(),
                    capacity_model: model_name(cal.model).to_string(),
                    edge_capacity: cal.edge_capacity,
                    calibration: calibration_records(&cal),
                };
                return Ok(InstanceFile::from_instance(&cal.instance, Some(meta)));
            }
            Err(e) => last = Some(e),
        }
    }
    Err(GenError::Calibration {
        mode: mode.name(),
        attempts: MAX_GRAPH_ATTEMPTS,
        last: last.expect("at least one attempt"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cfp_split::flowprob::maxflow_feasible;

    #[test]
    fn generated_instances_match_their_mode() {
        for seed in 0..4 {
            let f = generate(12, seed, Mode::Feasible, 0.2).unwrap();
            assert!(maxflow_feasible(&f.to_instance().unwrap()).0);
            let i = generate(12, seed, Mode::Infeasible, 0.2).unwrap();
            assert!(!maxflow_feasible(&i.to_instance().unwrap()).0);
            let meta = i.meta.unwrap();
            assert_eq!(meta.graph_seed, graph_seed(seed, meta.attempt));
            assert_eq!(meta.calibration.last().unwrap().feasible, false);
        }
    }

    #[test]
    fn too_few_nodes_is_a_graph_error() {
        assert!(matches!(
            generate(3, 0, Mode::Feasible, 0.2),
            Err(GenError::Graph(GraphGenError::TooSmall(3)))
        ));
    }
}
