//! Single-commodity flow feasibility as a loosely coupled feasibility problem.
//!
//! Every node is an agent. Its local variables are the flows on its incident
//! edges, and each edge flow is shared by exactly its two endpoints. A node's
//! set combines flow conservation (with the injection at source and sink),
//! its nodal relaying capacity and the edge bounds.

use thiserror::Error;

use crate::coupling::{build_coupling, CouplingError, CouplingStructure, ProductVector};
use crate::maxflow::MaxFlow;
use crate::sets::{SetError, SetSpec};
use crate::solvers::{Problem, SolverError};

pub const CALIBRATION_MAX_ROUNDS: usize = 64;
pub const INITIAL_INJECTION: f64 = 100.0;
pub const INITIAL_EDGE_CAPACITY: f64 = 10.0;

/// Relative slack used when comparing throughput against the injection.
const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("node {0} does not exist")]
    InvalidNode(usize),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("more than one edge between nodes {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("node {0} has no incident edge")]
    IsolatedNode(usize),
    #[error("capacity must be finite and nonnegative, got {0}")]
    InvalidCapacity(f64),
    #[error("injection must be positive and finite, got {0}")]
    InvalidInjection(f64),
    #[error("expected {expected} nodal capacities, got {actual}")]
    NodalCapacityCount { expected: usize, actual: usize },
    #[error("source and sink are both node {0}")]
    SourceIsSink(usize),
    #[error("constraints of node {0} alone cannot be satisfied")]
    EmptyLocalSet(usize),
    #[error("calibration did not settle within {0} rounds")]
    CalibrationDiverged(usize),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

/// Directed graph with designated source and sink, before capacities are
/// chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowGraph {
    pub n_nodes: usize,
    pub arcs: Vec<(usize, usize)>,
    pub source: usize,
    pub sink: usize,
}

impl FlowGraph {
    pub fn out_degree(&self, i: usize) -> usize {
        self.arcs.iter().filter(|(a, _)| *a == i).count()
    }

    /// All edges at capacity `c_bar`, node `i` relaying `|O(i)| c_bar / 2`.
    pub fn with_uniform_capacities(&self, injection: f64, c_bar: f64) -> Result<FlowInstance, FlowError> {
        self.with_capacities(CapacityModel::Proportional, injection, c_bar)
    }

    pub fn with_capacities(
        &self,
        model: CapacityModel,
        injection: f64,
        c_bar: f64,
    ) -> Result<FlowInstance, FlowError> {
        let edges = self
            .arcs
            .iter()
            .map(|&(from, to)| FlowEdge {
                from,
                to,
                capacity: c_bar,
            })
            .collect();
        let mut nodal: Vec<f64> = (0..self.n_nodes)
            .map(|i| self.out_degree(i) as f64 * c_bar / 2.0)
            .collect();
        if model == CapacityModel::RelaxedEndpoints {
            nodal[self.source] = self.out_degree(self.source) as f64 * c_bar;
            nodal[self.sink] += injection;
        }
        FlowInstance::new(self.n_nodes, edges, nodal, self.source, self.sink, injection)
    }
}

/// How nodal capacities follow from the common edge capacity `c_bar`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityModel {
    /// Every node relays at most `|O(i)| c_bar / 2`.
    Proportional,
    /// As [`CapacityModel::Proportional`] for relays, but the source may
    /// use its edges fully and absorbing the injection does not count
    /// against the sink's relaying capacity. Under the proportional model
    /// the source or sink is always the bottleneck, so any infeasible
    /// injection already empties that node's own constraint set.
    RelaxedEndpoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowInstance {
    n_nodes: usize,
    edges: Vec<FlowEdge>,
    nodal_capacity: Vec<f64>,
    source: usize,
    sink: usize,
    injection: f64,
    // global variable index of each edge
    var_of_edge: Vec<usize>,
    // per node: incident edge ids, ordered by neighbour id
    incident: Vec<Vec<usize>>,
}

impl FlowInstance {
    pub fn new(
        n_nodes: usize,
        edges: Vec<FlowEdge>,
        nodal_capacity: Vec<f64>,
        source: usize,
        sink: usize,
        injection: f64,
    ) -> Result<Self, FlowError> {
        for &node in &[source, sink] {
            if node >= n_nodes {
                return Err(FlowError::InvalidNode(node));
            }
        }
        if source == sink {
            return Err(FlowError::SourceIsSink(source));
        }
        if !(injection > 0.0 && injection.is_finite()) {
            return Err(FlowError::InvalidInjection(injection));
        }
        if nodal_capacity.len() != n_nodes {
            return Err(FlowError::NodalCapacityCount {
                expected: n_nodes,
                actual: nodal_capacity.len(),
            });
        }
        for &c in &nodal_capacity {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(FlowError::InvalidCapacity(c));
            }
        }
        let mut keys = Vec::with_capacity(edges.len());
        for e in &edges {
            if e.from >= n_nodes {
                return Err(FlowError::InvalidNode(e.from));
            }
            if e.to >= n_nodes {
                return Err(FlowError::InvalidNode(e.to));
            }
            if e.from == e.to {
                return Err(FlowError::SelfLoop(e.from));
            }
            if !(e.capacity >= 0.0 && e.capacity.is_finite()) {
                return Err(FlowError::InvalidCapacity(e.capacity));
            }
            keys.push((e.from.min(e.to), e.from.max(e.to)));
        }
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&e| keys[e]);
        for w in order.windows(2) {
            if keys[w[0]] == keys[w[1]] {
                return Err(FlowError::DuplicateEdge(keys[w[0]].0, keys[w[0]].1));
            }
        }
        let mut var_of_edge = vec![0; edges.len()];
        let mut incident = vec![Vec::new(); n_nodes];
        for (var, &e) in order.iter().enumerate() {
            var_of_edge[e] = var;
            let (a, b) = keys[e];
            incident[a].push(e);
            incident[b].push(e);
        }
        for (i, inc) in incident.iter_mut().enumerate() {
            if inc.is_empty() {
                return Err(FlowError::IsolatedNode(i));
            }
            inc.sort_by_key(|&e| var_of_edge[e]);
        }
        Ok(FlowInstance {
            n_nodes,
            edges,
            nodal_capacity,
            source,
            sink,
            injection,
            var_of_edge,
            incident,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[FlowEdge] {
        &self.edges
    }

    pub fn nodal_capacity(&self) -> &[f64] {
        &self.nodal_capacity
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn injection(&self) -> f64 {
        self.injection
    }

    /// Global variable carrying the flow of edge `e`.
    pub fn variable_of_edge(&self, e: usize) -> usize {
        self.var_of_edge[e]
    }

    /// Edges incident to `i`, in the node's local coordinate order.
    pub fn incident_edges(&self, i: usize) -> &[usize] {
        &self.incident[i]
    }

    pub fn graph(&self) -> FlowGraph {
        FlowGraph {
            n_nodes: self.n_nodes,
            arcs: self.edges.iter().map(|e| (e.from, e.to)).collect(),
            source: self.source,
            sink: self.sink,
        }
    }

    /// Right-hand side of `sum_in f - sum_out f = b` at node `i`.
    fn conservation_rhs(&self, i: usize) -> f64 {
        if i == self.source {
            -self.injection
        } else if i == self.sink {
            self.injection
        } else {
            0.0
        }
    }

    /// Bound on the total outgoing flow of node `i`.
    fn outflow_bound(&self, i: usize) -> f64 {
        if i == self.sink {
            self.nodal_capacity[i] - self.injection
        } else {
            self.nodal_capacity[i]
        }
    }

    /// Whether node `i`'s own constraints admit some assignment of its
    /// incident flows. Exact: the set is nonempty iff the conservation
    /// right-hand side lies between minus the attainable outflow and the
    /// attainable inflow.
    pub fn local_set_nonempty(&self, i: usize) -> bool {
        let (mut cap_in, mut cap_out) = (0.0, 0.0);
        for &e in &self.incident[i] {
            if self.edges[e].to == i {
                cap_in += self.edges[e].capacity;
            } else {
                cap_out += self.edges[e].capacity;
            }
        }
        let bound = self.outflow_bound(i);
        if bound < 0.0 {
            return false;
        }
        let b = self.conservation_rhs(i);
        -(cap_out.min(bound)) <= b && b <= cap_in
    }

    /// Nodes whose local constraint set is empty.
    pub fn empty_local_sets(&self) -> Vec<usize> {
        (0..self.n_nodes).filter(|&i| !self.local_set_nonempty(i)).collect()
    }

    /// Largest injection for which source and sink sets stay nonempty.
    fn local_injection_limit(&self) -> f64 {
        let (u, o) = (self.source, self.sink);
        let mut out_u = 0.0;
        let mut in_o = 0.0;
        for e in &self.edges {
            if e.from == u {
                out_u += e.capacity;
            }
            if e.to == o {
                in_o += e.capacity;
            }
        }
        out_u
            .min(self.nodal_capacity[u])
            .min(in_o)
            .min(self.nodal_capacity[o])
    }
}

/// Constraint set of node `i` over its incident edge flows.
pub fn node_set(instance: &FlowInstance, i: usize) -> Result<SetSpec, FlowError> {
    if i >= instance.n_nodes {
        return Err(FlowError::InvalidNode(i));
    }
    let inc = &instance.incident[i];
    let mut conservation = Vec::with_capacity(inc.len());
    let mut outflow = Vec::with_capacity(inc.len());
    let mut upper = Vec::with_capacity(inc.len());
    for &e in inc {
        let edge = &instance.edges[e];
        let leaving = edge.from == i;
        conservation.push(if leaving { -1.0 } else { 1.0 });
        outflow.push(if leaving { 1.0 } else { 0.0 });
        upper.push(edge.capacity);
    }
    let mut members = vec![SetSpec::hyperplane(conservation, instance.conservation_rhs(i))?];
    if outflow.iter().any(|&x| x != 0.0) {
        members.push(SetSpec::halfspace(outflow, instance.outflow_bound(i))?);
    } else if instance.outflow_bound(i) < 0.0 {
        return Err(FlowError::EmptyLocalSet(i));
    }
    members.push(SetSpec::boxed(vec![0.0; inc.len()], upper)?);
    Ok(SetSpec::composite(members)?)
}

/// Coupling (one variable per edge, owned by both endpoints) and node sets.
pub fn build_cfp(instance: &FlowInstance) -> Result<(CouplingStructure, Vec<SetSpec>), FlowError> {
    let index_sets: Vec<Vec<usize>> = instance
        .incident
        .iter()
        .map(|inc| inc.iter().map(|&e| instance.var_of_edge[e]).collect())
        .collect();
    let coupling = build_coupling(index_sets, instance.edges.len())?;
    let sets = (0..instance.n_nodes)
        .map(|i| node_set(instance, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((coupling, sets))
}

/// [`build_cfp`] packaged as a solver problem. Fails with
/// [`FlowError::EmptyLocalSet`] when some node's constraints are
/// contradictory on their own, since projecting onto an empty set is
/// undefined; such an instance is infeasible without any iteration.
pub fn build_problem(instance: &FlowInstance) -> Result<Problem, FlowError> {
    if let Some(&i) = instance.empty_local_sets().first() {
        return Err(FlowError::EmptyLocalSet(i));
    }
    let (coupling, sets) = build_cfp(instance)?;
    Ok(Problem::new(coupling, sets)?)
}

/// Exact feasibility via node splitting: node `i` becomes `i_in -> i_out`
/// with capacity `n_i`, edge `(i, j)` becomes `i_out -> j_in` with capacity
/// `c_ij`. Returns the verdict and the max flow from `u_in` to `o_in`.
pub fn maxflow_feasible(instance: &FlowInstance) -> (bool, f64) {
    let n = instance.n_nodes;
    let mut g = MaxFlow::new(2 * n);
    for i in 0..n {
        if i != instance.sink {
            g.add_arc(2 * i, 2 * i + 1, instance.nodal_capacity[i]);
        }
    }
    for e in &instance.edges {
        g.add_arc(2 * e.from + 1, 2 * e.to, e.capacity);
    }
    let throughput = g.run(2 * instance.source, 2 * instance.sink);
    let u = instance.injection;
    let slack = ORACLE_TOL * u;
    let feasible = throughput + slack >= u && u <= instance.nodal_capacity[instance.sink] + slack;
    (feasible, throughput)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationAction {
    Initial,
    HalveInjection,
    DoubleCapacity,
    DoubleInjection,
    HalveCapacity,
    /// Injection placed between the network throughput and the largest
    /// value the source and sink can handle on their own.
    BetweenThroughputAndLocalLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationStep {
    pub round: usize,
    pub action: CalibrationAction,
    pub injection: f64,
    pub edge_capacity: f64,
    pub feasible: bool,
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub instance: FlowInstance,
    pub model: CapacityModel,
    pub edge_capacity: f64,
    pub trace: Vec<CalibrationStep>,
}

struct Walk<'g> {
    graph: &'g FlowGraph,
    model: CapacityModel,
    injection: f64,
    c_bar: f64,
    trace: Vec<CalibrationStep>,
}

impl Walk<'_> {
    fn check(&mut self, round: usize, action: CalibrationAction) -> Result<(FlowInstance, bool), FlowError> {
        let inst = self.graph.with_capacities(self.model, self.injection, self.c_bar)?;
        let (feasible, throughput) = maxflow_feasible(&inst);
        self.trace.push(CalibrationStep {
            round,
            action,
            injection: self.injection,
            edge_capacity: self.c_bar,
            feasible,
            throughput,
        });
        Ok((inst, feasible))
    }

    fn done(self, instance: FlowInstance) -> Calibration {
        Calibration {
            instance,
            model: self.model,
            edge_capacity: self.c_bar,
            trace: self.trace,
        }
    }
}

/// Starting from `U = 100`, `c = 10`: halve the injection, and if still
/// infeasible double the edge capacity (re-deriving nodal capacities),
/// until the max-flow oracle accepts.
pub fn calibrate_feasible(graph: &FlowGraph) -> Result<Calibration, FlowError> {
    calibrate_feasible_with(graph, CapacityModel::Proportional)
}

pub fn calibrate_feasible_with(graph: &FlowGraph, model: CapacityModel) -> Result<Calibration, FlowError> {
    let mut walk = Walk {
        graph,
        model,
        injection: INITIAL_INJECTION,
        c_bar: INITIAL_EDGE_CAPACITY,
        trace: Vec::new(),
    };
    let (inst, ok) = walk.check(0, CalibrationAction::Initial)?;
    if ok {
        return Ok(walk.done(inst));
    }
    for round in 1..=CALIBRATION_MAX_ROUNDS {
        walk.injection /= 2.0;
        let (inst, ok) = walk.check(round, CalibrationAction::HalveInjection)?;
        if ok {
            return Ok(walk.done(inst));
        }
        walk.c_bar *= 2.0;
        let (inst, ok) = walk.check(round, CalibrationAction::DoubleCapacity)?;
        if ok {
            return Ok(walk.done(inst));
        }
    }
    Err(FlowError::CalibrationDiverged(CALIBRATION_MAX_ROUNDS))
}

/// Mirror of [`calibrate_feasible`]: double the injection, then halve the
/// edge capacity, until the oracle rejects. Capacities follow
/// [`CapacityModel::RelaxedEndpoints`].
///
/// The walk starts at the initial values when those are feasible, and
/// otherwise from the feasible calibration, so it ends just past the
/// network's relaying capability. If the first infeasible point leaves the
/// source or sink with contradictory constraints of its own, the injection
/// is moved to the midpoint between the throughput and the largest value
/// those two nodes can handle. Graphs whose bottleneck is at the source or
/// sink admit no such point and are rejected with
/// [`FlowError::EmptyLocalSet`].
pub fn calibrate_infeasible(graph: &FlowGraph) -> Result<Calibration, FlowError> {
    let model = CapacityModel::RelaxedEndpoints;
    let mut walk = Walk {
        graph,
        model,
        injection: INITIAL_INJECTION,
        c_bar: INITIAL_EDGE_CAPACITY,
        trace: Vec::new(),
    };
    let (inst, ok) = walk.check(0, CalibrationAction::Initial)?;
    if !ok && inst.empty_local_sets().is_empty() {
        return Ok(walk.done(inst));
    }
    if !ok {
        let feasible = calibrate_feasible_with(graph, model)?;
        walk.injection = feasible.instance.injection();
        walk.c_bar = feasible.edge_capacity;
        walk.trace.extend(feasible.trace.into_iter().skip(1));
    }
    let mut landed = None;
    for round in 1..=CALIBRATION_MAX_ROUNDS {
        walk.injection *= 2.0;
        let (inst, ok) = walk.check(round, CalibrationAction::DoubleInjection)?;
        if !ok {
            landed = Some((round, inst));
            break;
        }
        walk.c_bar /= 2.0;
        let (inst, ok) = walk.check(round, CalibrationAction::HalveCapacity)?;
        if !ok {
            landed = Some((round, inst));
            break;
        }
    }
    let (round, inst) = landed.ok_or(FlowError::CalibrationDiverged(CALIBRATION_MAX_ROUNDS))?;
    if inst.empty_local_sets().is_empty() {
        return Ok(walk.done(inst));
    }
    let (_, throughput) = maxflow_feasible(&inst);
    let limit = inst.local_injection_limit();
    if throughput < limit * (1.0 - 1e-6) {
        walk.injection = 0.5 * (throughput + limit);
        let (inst, ok) = walk.check(round, CalibrationAction::BetweenThroughputAndLocalLimit)?;
        if !ok {
            if let Some(&i) = inst.empty_local_sets().first() {
                return Err(FlowError::EmptyLocalSet(i));
            }
            return Ok(walk.done(inst));
        }
    }
    let node = inst.empty_local_sets()[0];
    Err(FlowError::EmptyLocalSet(node))
}

/// Largest violation of each constraint family by a product-space iterate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowViolations {
    pub conservation: f64,
    pub nodal: f64,
    pub bounds: f64,
    /// `||S - P_D(S)||`: disagreement between the two endpoint copies.
    pub consensus: f64,
}

impl FlowViolations {
    pub fn max(&self) -> f64 {
        self.conservation
            .max(self.nodal)
            .max(self.bounds)
            .max(self.consensus)
    }
}

/// Evaluates every node's constraints on its own block of `s`.
pub fn violations(
    instance: &FlowInstance,
    coupling: &CouplingStructure,
    s: &ProductVector,
) -> Result<FlowViolations, FlowError> {
    coupling.check_conforms(s)?;
    let mut out = FlowViolations {
        consensus: coupling.consensus_residual(s)?,
        ..Default::default()
    };
    for i in 0..instance.n_nodes {
        let block = s.block(i);
        let (mut net_in, mut sum_out) = (0.0, 0.0);
        for (&e, &f) in instance.incident[i].iter().zip(block) {
            let edge = &instance.edges[e];
            if edge.from == i {
                net_in -= f;
                sum_out += f;
            } else {
                net_in += f;
            }
            out.bounds = out.bounds.max(-f).max(f - edge.capacity);
        }
        out.conservation = out
            .conservation
            .max((net_in - instance.conservation_rhs(i)).abs());
        out.nodal = out.nodal.max(sum_out - instance.outflow_bound(i));
    }
    Ok(out)
}
