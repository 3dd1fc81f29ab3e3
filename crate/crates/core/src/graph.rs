//! Undirected graphs over variable ids (moral graphs, skeletons, fills).

use std::collections::BTreeSet;

use crate::tables::VarId;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UndirectedGraph {
    adj: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn new(nodes: usize) -> Self {
        UndirectedGraph { adj: vec![BTreeSet::new(); nodes] }
    }

    pub fn from_edges(nodes: usize, edges: impl IntoIterator<Item = (VarId, VarId)>) -> Self {
        let mut g = UndirectedGraph::new(nodes);
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }

    /// Adds `a - b`; self-loops are ignored. Returns whether the edge is new.
    pub fn add_edge(&mut self, a: VarId, b: VarId) -> bool {
        if a == b {
            return false;
        }
        let fresh = self.adj[a.0].insert(b.0);
        self.adj[b.0].insert(a.0);
        fresh
    }

    pub fn remove_edge(&mut self, a: VarId, b: VarId) -> bool {
        let had = self.adj[a.0].remove(&b.0);
        self.adj[b.0].remove(&a.0);
        had
    }

    pub fn has_edge(&self, a: VarId, b: VarId) -> bool {
        self.adj[a.0].contains(&b.0)
    }

    pub fn neighbors(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.adj[v.0].iter().map(|&u| VarId(u))
    }

    pub fn degree(&self, v: VarId) -> usize {
        self.adj[v.0].len()
    }

    /// Edges as `(low, high)` pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(VarId, VarId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (a, nbrs) in self.adj.iter().enumerate() {
            for &b in nbrs.range(a + 1..) {
                out.push((VarId(a), VarId(b)));
            }
        }
        out
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.adj.len()];
        let mut count = 0;
        for start in 0..self.adj.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for &w in &self.adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    /// Number of independent cycles: `|E| - |V| + components`.
    pub fn cycle_rank(&self) -> usize {
        self.edge_count() + self.component_count() - self.node_count()
    }

    pub fn is_forest(&self) -> bool {
        self.cycle_rank() == 0
    }

    /// Whether `a` and `b` are joined by a path avoiding every node in `blocked`.
    pub fn connected_avoiding(&self, a: VarId, b: VarId, blocked: &[VarId]) -> bool {
        if blocked.contains(&a) || blocked.contains(&b) {
            return false;
        }
        let mut seen = vec![false; self.adj.len()];
        for k in blocked {
            seen[k.0] = true;
        }
        let mut stack = vec![a.0];
        seen[a.0] = true;
        while let Some(u) = stack.pop() {
            if u == b.0 {
                return true;
            }
            for &w in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }
}
