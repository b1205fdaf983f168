//! Random connected directed graphs in signed-adjacency form.
//!
//! `A[i][j] = +1` when edge `(i, j)` leaves `i`, `-1` when it enters `i`,
//! and `0` otherwise, so `A = -A^T`. Rows are filled top to bottom: row `r`
//! draws a random 0-1 vector for the columns right of the diagonal, redraws
//! until the row has at least three nonzeros, then assigns random signs
//! until the row holds both directions. The mirrored column gets the
//! negated values. A whole attempt is discarded when the last row misses a
//! direction, some row has fewer than three nonzeros, or the undirected
//! support is disconnected.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::flowprob::FlowGraph;

pub const DEFAULT_EDGE_PROBABILITY: f64 = 0.2;
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;
pub const DEFAULT_MAX_DRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphGenError {
    #[error("need at least 4 nodes, got {0}")]
    TooSmall(usize),
    #[error("no valid graph after {0} attempts")]
    GenerationFailed(usize),
    #[error("edge probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("max_attempts must be at least 1")]
    NoAttempts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphGenOptions {
    /// Probability that a candidate entry of the 0-1 draw is one.
    pub edge_probability: f64,
    pub max_attempts: usize,
    /// Cap on redraws inside each row loop.
    pub max_draws: usize,
}

impl Default for GraphGenOptions {
    fn default() -> Self {
        GraphGenOptions {
            edge_probability: DEFAULT_EDGE_PROBABILITY,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            max_draws: DEFAULT_MAX_DRAWS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedAdjacency {
    n: usize,
    a: Vec<i8>,
}

impl SignedAdjacency {
    /// Wraps a row-major matrix without checking the invariants; see
    /// [`SignedAdjacency::check`].
    pub fn from_rows(rows: Vec<Vec<i8>>) -> Self {
        let n = rows.len();
        SignedAdjacency {
            n,
            a: rows.into_iter().flatten().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.a[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: i8) {
        self.a[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&x| x > 0).count()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&x| x < 0).count()
    }

    /// Directed edges `(i, j)` with `A[i][j] = +1`, row-major order.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) > 0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for j in 0..self.n {
                if self.get(i, j) != 0 && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.n
    }

    /// Checks skew-symmetry, row degree, both directions per row and
    /// connectivity. Returns the first violated property.
    pub fn check(&self) -> Result<(), String> {
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) != -self.get(j, i) {
                    return Err(format!("A[{i}][{j}] != -A[{j}][{i}]"));
                }
            }
            let nnz = self.row(i).iter().filter(|&&x| x != 0).count();
            if nnz < 3 {
                return Err(format!("row {i} has {nnz} nonzeros"));
            }
            if self.out_degree(i) == 0 || self.in_degree(i) == 0 {
                return Err(format!("row {i} lacks a direction"));
            }
        }
        if !self.is_connected() {
            return Err("undirected support is disconnected".into());
        }
        Ok(())
    }

    /// The digraph with source and sink from [`pick_source_sink`].
    pub fn to_flow_graph(&self) -> FlowGraph {
        let (source, sink) = pick_source_sink(self);
        FlowGraph {
            n_nodes: self.n,
            arcs: self.arcs(),
            source,
            sink,
        }
    }
}

/// Seeded generation with default options.
pub fn generate_graph(n: usize, seed: u64, max_attempts: usize) -> Result<SignedAdjacency, GraphGenError> {
    let options = GraphGenOptions {
        max_attempts,
        ..Default::default()
    };
    generate_graph_with(n, &mut ChaCha8Rng::seed_from_u64(seed), &options)
}

pub fn generate_graph_with<R: Rng>(
    n: usize,
    rng: &mut R,
    options: &GraphGenOptions,
) -> Result<SignedAdjacency, GraphGenError> {
    if n < 4 {
        return Err(GraphGenError::TooSmall(n));
    }
    let p = options.edge_probability;
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphGenError::InvalidProbability(p));
    }
    if options.max_attempts == 0 {
        return Err(GraphGenError::NoAttempts);
    }
    for _ in 0..options.max_attempts {
        if let Some(adj) = attempt(n, rng, options) {
            if adj.check().is_ok() {
                return Ok(adj);
            }
        }
    }
    Err(GraphGenError::GenerationFailed(options.max_attempts))
}

fn attempt<R: Rng>(n: usize, rng: &mut R, options: &GraphGenOptions) -> Option<SignedAdjacency> {
    let mut adj = SignedAdjacency {
        n,
        a: vec![0; n * n],
    };
    for r in 0..n - 1 {
        let fixed = &adj.row(r)[..r];
        let fixed_nnz = fixed.iter().filter(|&&x| x != 0).count();
        let fixed_pos = fixed.iter().any(|&x| x > 0);
        let fixed_neg = fixed.iter().any(|&x| x < 0);
        let width = n - 1 - r;
        if fixed_nnz + width <= 2 {
            return None;
        }

        let mut x = vec![0i8; width];
        let mut drawn = false;
        for _ in 0..options.max_draws {
            for v in x.iter_mut() {
                *v = rng.gen_bool(options.edge_probability) as i8;
            }
            if fixed_nnz + x.iter().filter(|&&v| v != 0).count() > 2 {
                drawn = true;
                break;
            }
        }
        if !drawn {
            return None;
        }

        let nnz_x = x.iter().filter(|&&v| v != 0).count();
        let possible = (fixed_pos && fixed_neg)
            || ((fixed_pos || fixed_neg) && nnz_x >= 1)
            || nnz_x >= 2;
        if !possible {
            return None;
        }
        let mut signed = false;
        for _ in 0..options.max_draws {
            for v in x.iter_mut().filter(|v| **v != 0) {
                *v = if rng.gen_bool(0.5) { 1 } else { -1 };
            }
            let pos = fixed_pos || x.iter().any(|&v| v > 0);
            let neg = fixed_neg || x.iter().any(|&v| v < 0);
            if pos && neg {
                signed = true;
                break;
            }
        }
        if !signed {
            return None;
        }
        for (k, &v) in x.iter().enumerate() {
            let c = r + 1 + k;
            adj.set(r, c, v);
            adj.set(c, r, -v);
        }
    }
    let last = adj.row(n - 1);
    (last.iter().any(|&v| v > 0) && last.iter().any(|&v| v < 0)).then_some(adj)
}

/// Source = most outgoing edges, sink = most incoming edges, ties to the
/// lowest index; on collision the sink moves to the next-ranked node.
pub fn pick_source_sink(adj: &SignedAdjacency) -> (usize, usize) {
    let n = adj.n();
    let argmax = |score: &dyn Fn(usize) -> usize, skip: Option<usize>| {
        (0..n)
            .filter(|&i| Some(i) != skip)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if score(b) >= score(i) => Some(b),
                _ => Some(i),
            })
            .expect("at least two nodes")
    };
    let u = argmax(&|i| adj.out_degree(i), None);
    let o = argmax(&|i| adj.in_degree(i), Some(u));
    (u, o)
}
