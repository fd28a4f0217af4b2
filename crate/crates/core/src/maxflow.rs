//! Dinic max-flow over integer capacities, with residual-reachability
//! extraction of the two extreme minimum cuts.
//!
//! The set of minimum s-t cuts is a distributive lattice; its least element
//! (fewest source-side nodes) is the set of nodes reachable from s in the
//! residual network, and its greatest element is the complement of the nodes
//! that can still reach t. Those two extractions are what makes the minimal
//! and maximal ATW minimizers exact.
//!
//! Arcs are stored in partner pairs (arc e and e^1 are each other's
//! residuals); adjacency is a CSR index built once before solving.

/// Flow/capacity type. Capacities come from energies scaled by 2^40; the
/// builders keep per-node totals bounded, so i64 is ample.
pub type Cap = i64;

#[derive(Debug, Clone, Default)]
pub struct FlowStats {
    pub nodes: usize,
    pub edges: usize,
    pub augmentations: usize,
}

pub struct FlowGraph {
    n: usize, // interior nodes; s = n, t = n + 1
    to: Vec<u32>,
    cap: Vec<Cap>,
    // source node of each stored pair (arcs 2k, 2k+1 run u->v, v->u)
    pair_from: Vec<u32>,
    // per-node net terminal capacity: > 0 means s->v, < 0 means v->t
    terminal: Vec<Cap>,
    // CSR adjacency over arc ids, built by `solve`
    head: Vec<u32>,
    arc_ids: Vec<u32>,
    level: Vec<i32>,
    iter: Vec<u32>,
    augmentations: usize,
}

impl FlowGraph {
    pub fn new(n: usize) -> FlowGraph {
        FlowGraph {
            n,
            to: Vec::new(),
            cap: Vec::new(),
            pair_from: Vec::new(),
            terminal: vec![0; n],
            head: Vec::new(),
            arc_ids: Vec::new(),
            level: Vec::new(),
            iter: Vec::new(),
            augmentations: 0,
        }
    }

    pub fn reserve_pairs(&mut self, pairs: usize) {
        self.to.reserve(2 * pairs);
        self.cap.reserve(2 * pairs);
        self.pair_from.reserve(pairs);
    }

    #[inline]
    fn source(&self) -> usize {
        self.n
    }

    #[inline]
    fn sink(&self) -> usize {
        self.n + 1
    }

    /// Undirected pairwise interaction: capacity `c` in both directions
    /// (each arc is the other's residual).
    pub fn add_pair(&mut self, u: usize, v: usize, c: Cap) {
        debug_assert!(u < self.n && v < self.n && u != v);
        if c <= 0 {
            return;
        }
        self.to.push(v as u32);
        self.cap.push(c);
        self.to.push(u as u32);
        self.cap.push(c);
        self.pair_from.push(u as u32);
    }

    /// Accumulate terminal capacity: positive attaches toward the source,
    /// negative toward the sink. Opposite contributions cancel exactly.
    pub fn add_terminal(&mut self, v: usize, c: Cap) {
        debug_assert!(v < self.n);
        self.terminal[v] += c;
    }

    fn build_csr(&mut self, from_of: &[u32]) {
        let total = self.n + 2;
        let mut counts = vec![0u32; total + 1];
        for (e, _) in self.to.iter().enumerate() {
            counts[from_of[e] as usize + 1] += 1;
        }
        for i in 0..total {
            counts[i + 1] += counts[i];
        }
        self.head = counts.clone();
        self.arc_ids = vec![0u32; self.to.len()];
        let mut cursor = counts;
        for e in 0..self.to.len() {
            let u = from_of[e] as usize;
            self.arc_ids[cursor[u] as usize] = e as u32;
            cursor[u] += 1;
        }
    }

    fn bfs(&mut self) -> bool {
        let s = self.source();
        self.level.clear();
        self.level.resize(self.n + 2, -1);
        let mut queue = std::collections::VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let lu = self.level[u];
            for idx in self.head[u]..self.head[u + 1] {
                let e = self.arc_ids[idx as usize] as usize;
                let v = self.to[e] as usize;
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = lu + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[self.sink()] >= 0
    }

    fn dfs(&mut self, u: usize, limit: Cap) -> Cap {
        if u == self.sink() {
            return limit;
        }
        while self.iter[u] < self.head[u + 1] {
            let e = self.arc_ids[self.iter[u] as usize] as usize;
            let v = self.to[e] as usize;
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, limit.min(self.cap[e]));
                if d > 0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        0
    }

    /// Run max flow to completion; returns the flow value.
    pub fn solve(&mut self) -> Cap {
        // materialize terminal arcs, remembering every arc's source node
        let mut from_of: Vec<u32> = Vec::with_capacity(self.to.len() + 2 * self.n);
        for &u in &self.pair_from {
            let e = from_of.len();
            from_of.push(u);
            from_of.push(self.to[e]);
        }
        for v in 0..self.n {
            let c = self.terminal[v];
            if c > 0 {
                from_of.push(self.source() as u32);
                from_of.push(v as u32);
                self.to.push(v as u32);
                self.cap.push(c);
                self.to.push(self.source() as u32);
                self.cap.push(0);
            } else if c < 0 {
                from_of.push(v as u32);
                from_of.push(self.sink() as u32);
                self.to.push(self.sink() as u32);
                self.cap.push(-c);
                self.to.push(v as u32);
                self.cap.push(0);
            }
        }
        self.build_csr(&from_of);
        let mut total: Cap = 0;
        while self.bfs() {
            self.iter = self.head.clone();
            loop {
                let f = self.dfs(self.source(), Cap::MAX);
                if f == 0 {
                    break;
                }
                total += f;
                self.augmentations += 1;
            }
        }
        total
    }

    pub fn stats(&self) -> FlowStats {
        FlowStats { nodes: self.n, edges: self.to.len() / 2, augmentations: self.augmentations }
    }

    /// Least minimum cut: interior nodes reachable from s in the residual
    /// network. Call after `solve`.
    pub fn min_cut_source_side(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n + 2];
        let mut stack = vec![self.source()];
        seen[self.source()] = true;
        while let Some(u) = stack.pop() {
            for idx in self.head[u]..self.head[u + 1] {
                let e = self.arc_ids[idx as usize] as usize;
                let v = self.to[e] as usize;
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.truncate(self.n);
        seen
    }

    /// Greatest minimum cut: complement (within interior nodes) of the nodes
    /// that can reach t in the residual network. Call after `solve`.
    pub fn min_cut_sink_side_complement(&self) -> Vec<bool> {
        // v reaches u iff the arc v->u has residual; the partner arc e^1 of
        // u's incident arc e = (u -> v) is exactly (v -> u)
        let mut reaches = vec![false; self.n + 2];
        reaches[self.sink()] = true;
        let mut stack = vec![self.sink()];
        while let Some(u) = stack.pop() {
            for idx in self.head[u]..self.head[u + 1] {
                let e = self.arc_ids[idx as usize] as usize;
                let v = self.to[e] as usize;
                if self.cap[e ^ 1] > 0 && !reaches[v] {
                    reaches[v] = true;
                    stack.push(v);
                }
            }
        }
        (0..self.n).map(|v| !reaches[v]).collect()
    }
}
