//! Distributed solution of loosely coupled convex feasibility problems.
//!
//! A problem is a set of agents, each owning a few global variables and one
//! closed convex set over them. The solvers work on per-agent copies of the
//! variables and reach agreement by averaging shared copies among the
//! agents that own them, so each agent only talks to its neighbours (the
//! mean projection baseline being the exception).
//!
//! - [`coupling`]: index sets, product vectors, consensus averaging.
//! - [`sets`]: boxes, halfspaces, hyperplanes and their intersections.
//! - [`solvers`]: the splitting and alternating projection methods.
//! - [`convergence`]: local feasibility and relative-change tests.
//! - [`flowprob`], [`graphgen`]: flow feasibility benchmark instances.
//! - [`netsim`]: message-level simulation with traffic accounting.

pub mod convergence;
pub mod coupling;
pub mod flowprob;
pub mod graphgen;
pub mod maxflow;
pub mod netsim;
pub mod sets;
pub mod solvers;

pub use coupling::{build_coupling, CouplingStructure, GlobalVector, ProductVector};
pub use sets::SetSpec;
pub use solvers::{solve, Algorithm, Problem, SolveReport, SolveStatus, SolverConfig};
