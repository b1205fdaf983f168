//! Variable coupling between agents and the consensus subspace.
//!
//! Every agent `i` owns an ordered index set `J_i` of global variables. A
//! product vector stacks one local block per agent; the consensus subspace
//! is the set of product vectors in which all copies of a variable agree.
//! Selection and stacking are realised as index arithmetic, never as
//! matrices.

use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CouplingError {
    #[error("variable {0} is not owned by any agent")]
    UnownedVariable(usize),
    #[error("agent {agent} references variable {index}, but there are only {n_global} variables")]
    IndexOutOfRange {
        agent: usize,
        index: usize,
        n_global: usize,
    },
    #[error("agent {agent} lists variable {index} more than once")]
    DuplicateIndex { agent: usize, index: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// A vector in global coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalVector(pub Vec<f64>);

impl GlobalVector {
    pub fn zeros(n: usize) -> Self {
        GlobalVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for GlobalVector {
    fn from(v: Vec<f64>) -> Self {
        GlobalVector(v)
    }
}

/// Stacked local blocks `(s^1, ..., s^N)`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector {
    data: Vec<f64>,
    offsets: Arc<[usize]>,
}

impl ProductVector {
    /// Builds a product vector from explicit blocks.
    pub fn from_blocks<B: AsRef<[f64]>>(blocks: &[B]) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut data = Vec::new();
        offsets.push(0);
        for b in blocks {
            data.extend_from_slice(b.as_ref());
            offsets.push(data.len());
        }
        ProductVector {
            data,
            offsets: offsets.into(),
        }
    }

    pub(crate) fn from_parts(data: Vec<f64>, offsets: Arc<[usize]>) -> Self {
        debug_assert_eq!(*offsets.last().unwrap_or(&0), data.len());
        ProductVector { data, offsets }
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.num_blocks()).map(move |i| self.block(i))
    }

    /// Flat view over all blocks in agent order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn zeros_like(&self) -> Self {
        ProductVector {
            data: vec![0.0; self.data.len()],
            offsets: self.offsets.clone(),
        }
    }

    /// `a * self + b * other`, elementwise.
    pub fn lincomb(&self, a: f64, other: &ProductVector, b: f64) -> ProductVector {
        debug_assert_eq!(self.offsets, other.offsets);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        ProductVector {
            data,
            offsets: self.offsets.clone(),
        }
    }

    pub fn sub(&self, other: &ProductVector) -> ProductVector {
        debug_assert_eq!(self.offsets, other.offsets);
        let data = self.data.iter().zip(&other.data).map(|(x, y)| x - y).collect();
        ProductVector {
            data,
            offsets: self.offsets.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &ProductVector) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    pub fn map_blocks<F>(&self, mut f: F) -> ProductVector
    where
        F: FnMut(usize, &[f64]) -> Vec<f64>,
    {
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.num_blocks() {
            let out = f(i, self.block(i));
            debug_assert_eq!(out.len(), self.block(i).len());
            data.extend(out);
        }
        ProductVector {
            data,
            offsets: self.offsets.clone(),
        }
    }
}

/// Index sets `J_i`, memberships `I_j` and neighbour sets `Ne(i)`.
#[derive(Debug, Clone)]
pub struct CouplingStructure {
    n_global: usize,
    index_sets: Vec<Vec<usize>>,
    memberships: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    offsets: Arc<[usize]>,
    // per variable: (agent, flat position of that agent's copy), agents ascending
    copies: Vec<Vec<(usize, usize)>>,
}

/// Derives memberships and neighbour sets from per-agent index sets.
///
/// Indices are zero-based. Each `J_i` is stored sorted ascending and the
/// coordinates of block `i` follow that order.
pub fn build_coupling(
    index_sets: Vec<Vec<usize>>,
    n_global: usize,
) -> Result<CouplingStructure, CouplingError> {
    let mut sets = index_sets;
    for (agent, set) in sets.iter_mut().enumerate() {
        if let Some(&index) = set.iter().find(|&&j| j >= n_global) {
            return Err(CouplingError::IndexOutOfRange {
                agent,
                index,
                n_global,
            });
        }
        set.sort_unstable();
        if let Some(w) = set.windows(2).find(|w| w[0] == w[1]) {
            return Err(CouplingError::DuplicateIndex { agent, index: w[0] });
        }
    }

    let mut offsets = Vec::with_capacity(sets.len() + 1);
    offsets.push(0usize);
    for set in &sets {
        offsets.push(offsets.last().unwrap() + set.len());
    }

    let mut memberships = vec![Vec::new(); n_global];
    let mut copies = vec![Vec::new(); n_global];
    for (agent, set) in sets.iter().enumerate() {
        for (pos, &j) in set.iter().enumerate() {
            memberships[j].push(agent);
            copies[j].push((agent, offsets[agent] + pos));
        }
    }
    if let Some(j) = memberships.iter().position(|m| m.is_empty()) {
        return Err(CouplingError::UnownedVariable(j));
    }

    let mut neighbors = vec![Vec::new(); sets.len()];
    for owners in &memberships {
        for &a in owners {
            for &b in owners {
                if a != b {
                    neighbors[a].push(b);
                }
            }
        }
    }
    for ne in &mut neighbors {
        ne.sort_unstable();
        ne.dedup();
    }

    Ok(CouplingStructure {
        n_global,
        index_sets: sets,
        memberships,
        neighbors,
        offsets: offsets.into(),
        copies,
    })
}

impl CouplingStructure {
    pub fn n_global(&self) -> usize {
        self.n_global
    }

    pub fn n_agents(&self) -> usize {
        self.index_sets.len()
    }

    /// `J_i`, sorted ascending.
    pub fn index_set(&self, agent: usize) -> &[usize] {
        &self.index_sets[agent]
    }

    /// `I_j`: agents owning variable `j`, ascending.
    pub fn membership(&self, var: usize) -> &[usize] {
        &self.memberships[var]
    }

    /// `Ne(i)`, ascending.
    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbors[agent]
    }

    pub fn degree(&self, var: usize) -> usize {
        self.memberships[var].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.memberships.iter().map(Vec::len).collect()
    }

    /// Total number of local coordinates, `sum_i |J_i|`.
    pub fn product_len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Position of variable `var` inside agent `agent`'s block, if owned.
    pub fn local_position(&self, agent: usize, var: usize) -> Option<usize> {
        self.index_sets[agent].binary_search(&var).ok()
    }

    /// Variables shared by two agents, ascending.
    pub fn shared(&self, a: usize, b: usize) -> Vec<usize> {
        let (ja, jb) = (&self.index_sets[a], &self.index_sets[b]);
        let (mut p, mut q) = (0, 0);
        let mut out = Vec::new();
        while p < ja.len() && q < jb.len() {
            match ja[p].cmp(&jb[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    out.push(ja[p]);
                    p += 1;
                    q += 1;
                }
            }
        }
        out
    }

    pub fn zeros(&self) -> ProductVector {
        ProductVector::from_parts(vec![0.0; self.product_len()], self.offsets.clone())
    }

    /// Checks that `s` has one block per agent with the right lengths.
    pub fn check_conforms(&self, s: &ProductVector) -> Result<(), CouplingError> {
        if s.offsets[..] != self.offsets[..] {
            return Err(CouplingError::LengthMismatch {
                expected: self.product_len(),
                actual: s.len(),
            });
        }
        Ok(())
    }

    /// Builds a product vector from a flat buffer laid out in agent order.
    pub fn product_from_flat(&self, data: Vec<f64>) -> Result<ProductVector, CouplingError> {
        if data.len() != self.product_len() {
            return Err(CouplingError::LengthMismatch {
                expected: self.product_len(),
                actual: data.len(),
            });
        }
        Ok(ProductVector::from_parts(data, self.offsets.clone()))
    }

    /// `s^i = E_{J_i} v` for every agent.
    pub fn scatter(&self, v: &GlobalVector) -> Result<ProductVector, CouplingError> {
        if v.len() != self.n_global {
            return Err(CouplingError::LengthMismatch {
                expected: self.n_global,
                actual: v.len(),
            });
        }
        Ok(self.scatter_unchecked(&v.0))
    }

    pub(crate) fn scatter_unchecked(&self, v: &[f64]) -> ProductVector {
        let data = self
            .index_sets
            .iter()
            .flat_map(|set| set.iter().map(|&j| v[j]))
            .collect();
        ProductVector::from_parts(data, self.offsets.clone())
    }

    /// Per-variable mean of all agents' copies.
    pub fn gather_average(&self, s: &ProductVector) -> Result<GlobalVector, CouplingError> {
        self.check_conforms(s)?;
        Ok(GlobalVector(self.gather_average_unchecked(s)))
    }

    pub(crate) fn gather_average_unchecked(&self, s: &ProductVector) -> Vec<f64> {
        self.copies
            .iter()
            .map(|owners| {
                let mut sum = 0.0;
                for &(_, pos) in owners {
                    sum += s.data[pos];
                }
                sum / owners.len() as f64
            })
            .collect()
    }

    /// Reads each variable from its lowest-numbered owner. Exact for
    /// consensual product vectors.
    pub(crate) fn first_copy(&self, s: &ProductVector) -> GlobalVector {
        GlobalVector(self.copies.iter().map(|o| s.data[o[0].1]).collect())
    }

    /// Projection onto the consensus subspace: `scatter(gather_average(s))`.
    pub fn consensus_project(&self, s: &ProductVector) -> Result<ProductVector, CouplingError> {
        let v = self.gather_average(s)?;
        Ok(self.scatter_unchecked(&v.0))
    }

    /// `||s - P_D(s)||` over all blocks.
    pub fn consensus_residual(&self, s: &ProductVector) -> Result<f64, CouplingError> {
        let p = self.consensus_project(s)?;
        Ok(s.distance(&p))
    }

    /// Number of pairwise value transfers needed for one averaging round:
    /// every owner of a variable sends its copy to every co-owner.
    pub fn pairwise_transfers(&self) -> u64 {
        self.memberships
            .iter()
            .map(|m| (m.len() * (m.len() - 1)) as u64)
            .sum()
    }
}
