//! Synchronous message-passing simulation of the distributed solvers.
//!
//! [`Network`] implements [`Exchange`] with explicit messages: in a
//! neighbour round every owner of a shared variable sends its copy to each
//! co-owner, and agents only average what arrived in their inbox. Receivers
//! sort contributions by sender before summing, so results do not depend on
//! the order in which agents are scheduled and match the central averaging
//! bit for bit.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coupling::{CouplingStructure, GlobalVector, ProductVector};
use crate::solvers::{
    solve_with, Exchange, MessageCounts, Problem, SolveReport, SolverConfig, SolverError,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub round: usize,
    /// `(global variable, value)` pairs.
    pub payload: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundKind {
    /// Averaging needed by the algorithm itself.
    Update,
    /// Consensus snapshot taken only for convergence detection.
    Detector,
    /// All-to-all round of the mean projection method.
    Broadcast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub round: usize,
    pub kind: RoundKind,
    /// `(from, to, number of values)` per message, in send order.
    pub messages: Vec<(usize, usize, usize)>,
    /// Order in which agents were stepped.
    pub compute_order: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Network {
    order: Vec<usize>,
    round: usize,
    record: bool,
    logs: Vec<RoundLog>,
    pending: MessageCounts,
    locality_violations: usize,
}

impl Network {
    /// Agents stepped in id order; logs off.
    pub fn new(n_agents: usize) -> Self {
        Network {
            order: (0..n_agents).collect(),
            round: 0,
            record: false,
            logs: Vec::new(),
            pending: MessageCounts::default(),
            locality_violations: 0,
        }
    }

    /// Agents stepped in a seeded random order.
    pub fn shuffled(n_agents: usize, seed: u64) -> Self {
        let mut net = Network::new(n_agents);
        net.order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        net
    }

    pub fn with_logs(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn logs(&self) -> &[RoundLog] {
        &self.logs
    }

    pub fn rounds(&self) -> usize {
        self.round
    }

    /// Messages sent to a non-neighbour or carrying a variable the two
    /// agents do not share. Always zero for neighbour rounds.
    pub fn locality_violations(&self) -> usize {
        self.locality_violations
    }

    /// Writes the round logs as CSV: `round,from,to,n_values`.
    pub fn write_logs_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "round,from,to,n_values")?;
        for log in &self.logs {
            for &(from, to, n) in &log.messages {
                writeln!(w, "{},{},{},{}", log.round, from, to, n)?;
            }
        }
        Ok(())
    }

    fn check_locality(&mut self, coupling: &CouplingStructure, msg: &Message) {
        let neighbours = coupling.neighbors(msg.from);
        let ok = neighbours.binary_search(&msg.to).is_ok()
            && msg.payload.iter().all(|(j, _)| {
                coupling.local_position(msg.from, *j).is_some()
                    && coupling.local_position(msg.to, *j).is_some()
            });
        if !ok {
            self.locality_violations += 1;
        }
    }

    /// One neighbour round: each agent sends one message per shared
    /// variable to each co-owner, then every agent averages its inbox.
    fn neighbour_round(
        &mut self,
        coupling: &CouplingStructure,
        s: &ProductVector,
        kind: RoundKind,
    ) -> ProductVector {
        self.round += 1;
        let n = coupling.n_agents();
        let mut inbox: Vec<Vec<Message>> = vec![Vec::new(); n];
        let mut log = Vec::new();
        let mut sent = 0u64;
        let order = self.order.clone();
        for &i in &order {
            for (pos, &j) in coupling.index_set(i).iter().enumerate() {
                for &k in coupling.membership(j) {
                    if k == i {
                        continue;
                    }
                    let msg = Message {
                        from: i,
                        to: k,
                        round: self.round,
                        payload: vec![(j, s.block(i)[pos])],
                    };
                    self.check_locality(coupling, &msg);
                    if self.record {
                        log.push((i, k, 1));
                    }
                    sent += 1;
                    inbox[k].push(msg);
                }
            }
        }
        // barrier
        let mut out = s.zeros_like();
        for &i in &order {
            let set = coupling.index_set(i);
            let mut received: Vec<Vec<(usize, f64)>> = set
                .iter()
                .enumerate()
                .map(|(pos, _)| vec![(i, s.block(i)[pos])])
                .collect();
            for msg in &inbox[i] {
                for &(j, value) in &msg.payload {
                    let pos = coupling.local_position(i, j).expect("payload variable is local");
                    received[pos].push((msg.from, value));
                }
            }
            let block = out.block_mut(i);
            for (pos, contributions) in received.iter_mut().enumerate() {
                contributions.sort_by_key(|&(from, _)| from);
                let mut sum = 0.0;
                for &(_, value) in contributions.iter() {
                    sum += value;
                }
                block[pos] = sum / contributions.len() as f64;
            }
        }
        match kind {
            RoundKind::Detector => self.pending.detector += sent,
            _ => self.pending.update += sent,
        }
        if self.record {
            self.logs.push(RoundLog {
                round: self.round,
                kind,
                messages: log,
                compute_order: order,
            });
        }
        out
    }
}

impl Exchange for Network {
    fn average(&mut self, coupling: &CouplingStructure, contributions: &ProductVector) -> ProductVector {
        self.neighbour_round(coupling, contributions, RoundKind::Update)
    }

    fn detector_average(
        &mut self,
        coupling: &CouplingStructure,
        contributions: &ProductVector,
    ) -> ProductVector {
        self.neighbour_round(coupling, contributions, RoundKind::Detector)
    }

    /// Every agent sends its whole projected block to every other agent;
    /// each agent then forms the same weighted combination.
    fn broadcast_mix(
        &mut self,
        coupling: &CouplingStructure,
        v: &GlobalVector,
        projections: &ProductVector,
        weights: &[f64],
    ) -> GlobalVector {
        self.round += 1;
        let n = coupling.n_agents();
        let order = self.order.clone();
        let mut inbox: Vec<Vec<Message>> = vec![Vec::new(); n];
        let mut log = Vec::new();
        for &i in &order {
            let payload: Vec<(usize, f64)> = coupling
                .index_set(i)
                .iter()
                .copied()
                .zip(projections.block(i).iter().copied())
                .collect();
            for k in (0..n).filter(|&k| k != i) {
                if self.record {
                    log.push((i, k, payload.len()));
                }
                inbox[k].push(Message {
                    from: i,
                    to: k,
                    round: self.round,
                    payload: payload.clone(),
                });
            }
        }
        self.pending.update += (n * (n - 1)) as u64;

        // every agent ends up with identical data; evaluate at the first
        // scheduled one
        let me = order[0];
        let mut blocks: Vec<Option<Vec<(usize, f64)>>> = vec![None; n];
        blocks[me] = Some(
            coupling
                .index_set(me)
                .iter()
                .copied()
                .zip(projections.block(me).iter().copied())
                .collect(),
        );
        for msg in &inbox[me] {
            blocks[msg.from] = Some(msg.payload.clone());
        }
        let mut lifted: Vec<Vec<f64>> = Vec::with_capacity(n);
        for block in blocks {
            let mut full = v.0.clone();
            for (j, value) in block.expect("every agent broadcast") {
                full[j] = value;
            }
            lifted.push(full);
        }
        let mut next = vec![0.0; v.len()];
        for (j, slot) in next.iter_mut().enumerate() {
            for (q, alpha) in weights.iter().enumerate() {
                *slot += alpha * lifted[q][j];
            }
        }
        if self.record {
            self.logs.push(RoundLog {
                round: self.round,
                kind: RoundKind::Broadcast,
                messages: log,
                compute_order: order,
            });
        }
        GlobalVector(next)
    }

    fn take_counts(&mut self) -> MessageCounts {
        std::mem::take(&mut self.pending)
    }
}

/// One neighbour averaging round on its own: returns `P_D(s)` and the round
/// log.
pub fn exchange_shared(
    coupling: &CouplingStructure,
    s: &ProductVector,
) -> Result<(ProductVector, RoundLog), SolverError> {
    coupling.check_conforms(s)?;
    let mut net = Network::new(coupling.n_agents()).with_logs();
    let out = net.average(coupling, s);
    let log = net.logs.pop().expect("round was recorded");
    Ok((out, log))
}

/// Runs a solver with all inter-agent traffic going through `network`.
pub fn run_distributed(
    problem: &Problem,
    config: &SolverConfig,
    network: &mut Network,
) -> Result<SolveReport, SolverError> {
    solve_with(problem, config, network)
}
