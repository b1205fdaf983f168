//! Dinic max-flow on real capacities.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: f64,
}

/// Residual network; arcs are stored in pairs so `a ^ 1` is the reverse.
#[derive(Debug, Clone)]
pub struct MaxFlow {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    eps: f64,
}

impl MaxFlow {
    pub fn new(n: usize) -> Self {
        MaxFlow {
            arcs: Vec::new(),
            out: vec![Vec::new(); n],
            eps: 0.0,
        }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) {
        let cap = cap.max(0.0);
        self.eps = self.eps.max(cap * 1e-12);
        self.out[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap });
        self.out[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: 0.0 });
    }

    /// Maximum flow value from `s` to `t`. Consumes the residual capacities.
    pub fn run(&mut self, s: usize, t: usize) -> f64 {
        if s == t {
            return 0.0;
        }
        let n = self.out.len();
        let mut total = 0.0;
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0usize; n];
            loop {
                let pushed = self.augment(s, t, f64::INFINITY, &level, &mut next);
                if pushed <= self.eps {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.out.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.out[u] {
                let arc = &self.arcs[a];
                if arc.cap > self.eps && level[arc.to] == usize::MAX {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, t: usize, limit: f64, level: &[usize], next: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while next[u] < self.out[u].len() {
            let a = self.out[u][next[u]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > self.eps && level[to] == level[u] + 1 {
                let pushed = self.augment(to, t, limit.min(cap), level, next);
                if pushed > self.eps {
                    self.arcs[a].cap -= pushed;
                    self.arcs[a ^ 1].cap += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0.0
    }
}
