//! Compiling belief networks into cluster trees.
//!
//! The general route is moralize → triangulate (min-fill) → maximal cliques →
//! maximum-weight spanning forest of the clique graph → potential assignment.
//! Three special constructions are provided as well: the family tree of a
//! singly connected network, the loop-cutset tree, and conditioning an
//! existing tree on a set of variables.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::network::{BeliefNetwork, ValidationReport};
use crate::tables::VarId;

/// Where each CPT (by child id) and each network finding (by index) lives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub cpts: Vec<usize>,
    pub findings: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterTree {
    cards: Vec<usize>,
    clusters: Vec<Vec<VarId>>,
    arcs: Vec<(usize, usize)>,
    assignment: Option<Assignment>,
}

impl ClusterTree {
    /// Builds a tree from clusters and arcs. Cluster members are sorted and
    /// arcs stored as `(low, high)`; no validity checks are made here.
    pub fn new(cards: Vec<usize>, clusters: Vec<Vec<VarId>>, arcs: Vec<(usize, usize)>) -> Self {
        let clusters = clusters
            .into_iter()
            .map(|c| c.into_iter().collect::<BTreeSet<_>>().into_iter().collect())
            .collect();
        let arcs = arcs.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        ClusterTree { cards, clusters, arcs, assignment: None }
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn clusters(&self) -> &[Vec<VarId>] {
        &self.clusters
    }

    pub fn cluster(&self, i: usize) -> &[VarId] {
        &self.clusters[i]
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn assignment(&self) -> Option<&Assignment> {
        self.assignment.as_ref()
    }

    pub fn with_assignment(mut self, assignment: Assignment) -> Self {
        self.assignment = Some(assignment);
        self
    }

    pub(crate) fn arcs_mut(&mut self) -> &mut Vec<(usize, usize)> {
        &mut self.arcs
    }

    /// Separation set of arc `k`.
    pub fn sepset(&self, k: usize) -> Vec<VarId> {
        let (a, b) = self.arcs[k];
        intersect(&self.clusters[a], &self.clusters[b])
    }

    pub fn arc_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        self.arcs.iter().position(|&x| x == key)
    }

    /// Product of member cardinalities.
    pub fn weight(&self, i: usize) -> usize {
        self.clusters[i].iter().map(|v| self.cards[v.0]).product()
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.arcs
            .iter()
            .filter_map(|&(a, b)| if a == i { Some(b) } else if b == i { Some(a) } else { None })
            .collect()
    }

    /// Clusters on the path between `a` and `b` (inclusive), if connected.
    pub fn path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; self.len()];
        let mut stack = vec![a];
        prev[a] = a;
        while let Some(u) = stack.pop() {
            if u == b {
                let mut out = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = prev[cur];
                    out.push(cur);
                }
                out.reverse();
                return Some(out);
            }
            for w in self.neighbors(u) {
                if prev[w] == usize::MAX {
                    prev[w] = u;
                    stack.push(w);
                }
            }
        }
        None
    }

    /// Clusters reachable from `start` without crossing arc `skip`.
    pub fn side(&self, start: usize, skip: usize) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for (k, &(a, b)) in self.arcs.iter().enumerate() {
                if k == skip {
                    continue;
                }
                let w = if a == u { b } else if b == u { a } else { continue };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        (0..self.len()).filter(|&i| seen[i]).collect()
    }

    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Smallest-weight cluster containing all of `vars` (ties to lowest index).
    pub fn smallest_containing(&self, vars: &[VarId]) -> Option<usize> {
        (0..self.len())
            .filter(|&i| vars.iter().all(|v| self.clusters[i].binary_search(v).is_ok()))
            .min_by_key(|&i| (self.weight(i), i))
    }

    pub fn stats(&self) -> TreeStats {
        let sizes: Vec<usize> = (0..self.len()).map(|i| self.weight(i)).collect();
        TreeStats {
            clusters: self.len(),
            arcs: self.arcs.len(),
            max_cluster_cardinality: self.max_cluster_size(),
            total_state_space: sizes.iter().sum(),
            table_sizes: sizes,
            sepset_sizes: (0..self.arcs.len()).map(|k| self.sepset(k).len()).collect(),
        }
    }
}

pub(crate) fn intersect(a: &[VarId], b: &[VarId]) -> Vec<VarId> {
    a.iter().copied().filter(|v| b.binary_search(v).is_ok()).collect()
}

/// Size statistics of a compiled tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeStats {
    pub clusters: usize,
    pub arcs: usize,
    pub max_cluster_cardinality: usize,
    pub total_state_space: usize,
    pub table_sizes: Vec<usize>,
    pub sepset_sizes: Vec<usize>,
}

/// Elimination order: `order[0]` is eliminated first.
pub type EliminationOrder = Vec<VarId>;

/// Whether `order` is a perfect elimination order of `g`: the neighbors of
/// each vertex that come later in the order form a clique.
pub fn is_perfect_elimination_order(g: &UndirectedGraph, order: &[VarId]) -> bool {
    if order.len() != g.node_count() {
        return false;
    }
    let mut pos = vec![usize::MAX; g.node_count()];
    for (i, v) in order.iter().enumerate() {
        if pos[v.0] != usize::MAX {
            return false;
        }
        pos[v.0] = i;
    }
    order.iter().enumerate().all(|(i, v)| {
        let later: Vec<VarId> = g.neighbors(*v).filter(|u| pos[u.0] > i).collect();
        later.iter().enumerate().all(|(k, a)| later[k + 1..].iter().all(|b| g.has_edge(*a, *b)))
    })
}

/// Maximum-cardinality search; the reversed visit order is a perfect
/// elimination order exactly when the graph is chordal.
pub fn maximum_cardinality_order(g: &UndirectedGraph) -> EliminationOrder {
    let n = g.node_count();
    let mut weight = vec![0usize; n];
    let mut numbered = vec![false; n];
    let mut order = vec![VarId(0); n];
    for slot in (0..n).rev() {
        let v = (0..n)
            .filter(|&v| !numbered[v])
            .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
            .unwrap();
        numbered[v] = true;
        order[slot] = VarId(v);
        for u in g.neighbors(VarId(v)) {
            if !numbered[u.0] {
                weight[u.0] += 1;
            }
        }
    }
    order
}

pub fn is_chordal(g: &UndirectedGraph) -> bool {
    is_perfect_elimination_order(g, &maximum_cardinality_order(g))
}

/// Min-fill triangulation. Ties go to the smallest resulting clique weight
/// (product of cardinalities), then to the lowest id. Returns the filled
/// graph and the elimination order, which is perfect for it.
pub fn triangulate(g: &UndirectedGraph, cards: &[usize]) -> (UndirectedGraph, EliminationOrder) {
    let n = g.node_count();
    let mut work = g.clone();
    let mut filled = g.clone();
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let best = (0..n)
            .filter(|&v| alive[v])
            .map(|v| {
                let nbrs: Vec<VarId> = work.neighbors(VarId(v)).collect();
                let mut fill = 0usize;
                for (i, a) in nbrs.iter().enumerate() {
                    for b in &nbrs[i + 1..] {
                        if !work.has_edge(*a, *b) {
                            fill += 1;
                        }
                    }
                }
                let weight: usize = cards[v] * nbrs.iter().map(|u| cards[u.0]).product::<usize>();
                (fill, weight, v)
            })
            .min()
            .unwrap();
        let v = VarId(best.2);
        let nbrs: Vec<VarId> = work.neighbors(v).collect();
        for (i, a) in nbrs.iter().enumerate() {
            for b in &nbrs[i + 1..] {
                work.add_edge(*a, *b);
                filled.add_edge(*a, *b);
            }
        }
        for u in &nbrs {
            work.remove_edge(v, *u);
        }
        alive[v.0] = false;
        order.push(v);
    }
    (filled, order)
}

/// Maximal cliques of a chordal graph from a perfect elimination order, in
/// order of their eliminated vertex.
pub fn max_cliques(g: &UndirectedGraph, order: &[VarId]) -> Result<Vec<Vec<VarId>>> {
    if !is_perfect_elimination_order(g, order) {
        return Err(Error::NotChordal);
    }
    let mut pos = vec![0; g.node_count()];
    for (i, v) in order.iter().enumerate() {
        pos[v.0] = i;
    }
    let candidates: Vec<Vec<VarId>> = order
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut c: Vec<VarId> = g.neighbors(*v).filter(|u| pos[u.0] > i).collect();
            c.push(*v);
            c.sort_unstable();
            c
        })
        .collect();
    let mut out: Vec<Vec<VarId>> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let dominated = candidates.iter().enumerate().any(|(j, d)| {
            j != i && d.len() >= c.len() && is_subset(c, d) && (d.len() > c.len() || j < i)
        });
        if !dominated {
            out.push(c.clone());
        }
    }
    Ok(out)
}

fn is_subset(a: &[VarId], b: &[VarId]) -> bool {
    a.iter().all(|v| b.binary_search(v).is_ok())
}

/// Maximum-weight spanning forest over the clique graph, weight = sepset
/// size. Ties prefer the smaller combined cluster weight, then lexicographic
/// `(i, j)`. Clusters sharing nothing stay in separate trees.
pub fn build_join_tree(clusters: Vec<Vec<VarId>>, cards: &[usize]) -> ClusterTree {
    let tree = ClusterTree::new(cards.to_vec(), clusters, Vec::new());
    let n = tree.len();
    let mut candidates = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let sep = intersect(&tree.clusters[i], &tree.clusters[j]).len();
            if sep > 0 {
                candidates.push((std::cmp::Reverse(sep), tree.weight(i) + tree.weight(j), i, j));
            }
        }
    }
    candidates.sort_unstable();
    let mut uf = UnionFind::new(n);
    let mut arcs = Vec::new();
    for (_, _, i, j) in candidates {
        if uf.union(i, j) {
            arcs.push((i, j));
        }
    }
    ClusterTree { arcs, ..tree }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeViolation {
    ArcOutOfRange(usize),
    DuplicateArc(usize, usize),
    NotAForest,
    EmptyCluster(usize),
    JoinProperty(VarId),
    FamilyUncovered(VarId),
    CptMisassigned(VarId),
    FindingMisassigned(usize),
    AssignmentShape,
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::ArcOutOfRange(k) => write!(f, "arc {k} references a missing cluster"),
            TreeViolation::DuplicateArc(a, b) => write!(f, "arc ({a}, {b}) listed twice"),
            TreeViolation::NotAForest => write!(f, "arcs contain a cycle"),
            TreeViolation::EmptyCluster(i) => write!(f, "cluster {i} is empty"),
            TreeViolation::JoinProperty(v) => {
                write!(f, "clusters containing {v} are not connected (join property)")
            }
            TreeViolation::FamilyUncovered(v) => write!(f, "no cluster contains the CPT scope of {v}"),
            TreeViolation::CptMisassigned(v) => write!(f, "CPT of {v} assigned to a cluster lacking its scope"),
            TreeViolation::FindingMisassigned(k) => write!(f, "finding {k} assigned to a cluster lacking its scope"),
            TreeViolation::AssignmentShape => write!(f, "assignment does not match the network"),
        }
    }
}

/// Checks every cluster-tree condition: forest, join property, family
/// coverage, and (when present) the potential assignment.
pub fn verify_cluster_tree(net: &BeliefNetwork, tree: &ClusterTree) -> ValidationReport<TreeViolation> {
    let mut violations = Vec::new();
    let n = tree.len();
    for (i, c) in tree.clusters.iter().enumerate() {
        if c.is_empty() {
            violations.push(TreeViolation::EmptyCluster(i));
        }
    }
    let mut seen = BTreeSet::new();
    let mut uf = UnionFind::new(n);
    let mut forest = true;
    for (k, &(a, b)) in tree.arcs.iter().enumerate() {
        if a >= n || b >= n || a == b {
            violations.push(TreeViolation::ArcOutOfRange(k));
            continue;
        }
        if !seen.insert((a, b)) {
            violations.push(TreeViolation::DuplicateArc(a, b));
        } else if !uf.union(a, b) {
            forest = false;
        }
    }
    if !forest {
        violations.push(TreeViolation::NotAForest);
    }
    if violations.iter().any(|v| matches!(v, TreeViolation::ArcOutOfRange(_))) {
        return ValidationReport { violations };
    }
    for v in 0..tree.cards.len() {
        let v = VarId(v);
        let holders: Vec<usize> = (0..n).filter(|&i| tree.clusters[i].binary_search(&v).is_ok()).collect();
        if holders.len() < 2 {
            continue;
        }
        // holders must induce a connected subforest
        let mut uf = UnionFind::new(n);
        for &(a, b) in &tree.arcs {
            if tree.clusters[a].binary_search(&v).is_ok() && tree.clusters[b].binary_search(&v).is_ok() {
                uf.union(a, b);
            }
        }
        let root = uf.find(holders[0]);
        if holders.iter().any(|&h| uf.find(h) != root) {
            violations.push(TreeViolation::JoinProperty(v));
        }
    }
    for cpt in net.cpts() {
        if tree.smallest_containing(cpt.table.scope().vars()).is_none() {
            violations.push(TreeViolation::FamilyUncovered(cpt.child));
        }
    }
    if let Some(asg) = &tree.assignment {
        if asg.cpts.len() != net.len() || asg.findings.len() != net.evidence().len() {
            violations.push(TreeViolation::AssignmentShape);
        } else {
            for cpt in net.cpts() {
                let home = asg.cpts[cpt.child.0];
                if home >= n || !is_subset(cpt.table.scope().vars(), &tree.clusters[home]) {
                    violations.push(TreeViolation::CptMisassigned(cpt.child));
                }
            }
            for (k, f) in net.evidence().iter().enumerate() {
                let home = asg.findings[k];
                if home >= n || !is_subset(f.scope().vars(), &tree.clusters[home]) {
                    violations.push(TreeViolation::FindingMisassigned(k));
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Places each CPT and each network finding in the smallest-weight cluster
/// containing its scope (ties to the lowest index).
pub fn assign_potentials(net: &BeliefNetwork, tree: &ClusterTree) -> Result<ClusterTree> {
    let mut cpts = Vec::with_capacity(net.len());
    for cpt in net.cpts() {
        let vars = cpt.table.scope().vars();
        cpts.push(tree.smallest_containing(vars).ok_or_else(|| {
            Error::InvalidNetwork(format!("no cluster contains the family of {}", cpt.child))
        })?);
    }
    let mut findings = Vec::with_capacity(net.evidence().len());
    for f in net.evidence() {
        let vars = f.scope().vars();
        findings.push(tree.smallest_containing(vars).ok_or_else(|| Error::FindingNotCoverable(vars.to_vec()))?);
    }
    Ok(tree.clone().with_assignment(Assignment { cpts, findings }))
}

/// Full compilation through min-fill triangulation.
/// `tree` itself if its assignment matches `net`'s CPTs and findings,
/// otherwise a freshly assigned copy.
pub fn ensure_assigned(net: &BeliefNetwork, tree: &ClusterTree) -> Result<ClusterTree> {
    match &tree.assignment {
        Some(a) if a.cpts.len() == net.len() && a.findings.len() == net.evidence().len() => Ok(tree.clone()),
        _ => assign_potentials(net, tree),
    }
}

pub fn compile(net: &BeliefNetwork) -> Result<ClusterTree> {
    let (filled, order) = triangulate(&net.moral_graph(), &net.cards());
    let cliques = max_cliques(&filled, &order)?;
    assign_potentials(net, &build_join_tree(cliques, &net.cards()))
}

/// Family tree of a singly connected network: one cluster `{j} ∪ Pa(j)` per
/// node (cluster index = variable id), arcs mirroring the network's.
pub fn polytree_cluster_tree(net: &BeliefNetwork) -> Result<ClusterTree> {
    if !net.is_singly_connected() {
        return Err(Error::NotSinglyConnected);
    }
    let clusters = net.ids().map(|v| net.family(v)).collect();
    let arcs = net.arcs().into_iter().map(|(p, c)| (p.0, c.0)).collect();
    assign_potentials(net, &ClusterTree::new(net.cards(), clusters, arcs))
}

pub fn verify_cutset(net: &BeliefNetwork, cutset: &[VarId]) -> bool {
    net.cut_outgoing_arcs(cutset).is_singly_connected()
}

/// Loop-cutset tree: the family tree of the cut network with the cutset added
/// to every cluster. Cut arcs from cutset nodes are re-inserted where needed
/// to keep the clusters connected, since the cutset must then appear along
/// every path.
pub fn cutset_cluster_tree(net: &BeliefNetwork, cutset: &[VarId]) -> Result<ClusterTree> {
    let cut = net.cut_outgoing_arcs(cutset);
    if !cut.is_singly_connected() {
        return Err(Error::NotLoopCutset(cutset.to_vec()));
    }
    let clusters: Vec<Vec<VarId>> = cut
        .ids()
        .map(|v| {
            let mut c = cut.family(v);
            c.extend_from_slice(cutset);
            c
        })
        .collect();
    let mut arcs: Vec<(usize, usize)> = cut.arcs().into_iter().map(|(p, c)| (p.0, c.0)).collect();
    let mut uf = UnionFind::new(net.len());
    for &(a, b) in &arcs {
        uf.union(a, b);
    }
    let mut sorted: Vec<VarId> = cutset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &k in &sorted {
        for c in net.children(k) {
            if uf.union(k.0, c.0) {
                arcs.push((k.0, c.0));
            }
        }
    }
    if let Some(&k0) = sorted.first() {
        for j in 0..net.len() {
            if uf.union(k0.0, j) {
                arcs.push((k0.0, j));
            }
        }
    }
    assign_potentials(net, &ClusterTree::new(net.cards(), clusters, arcs))
}

/// Adds `cond` to every cluster (and hence every sepset). A forest is joined
/// into a single tree first when `cond` is non-empty so the join property
/// holds for the added variables.
pub fn conditioned_cluster_tree(tree: &ClusterTree, cond: &[VarId]) -> ClusterTree {
    if cond.is_empty() {
        return tree.clone();
    }
    let mut out = tree.clone();
    for c in &mut out.clusters {
        let mut s: BTreeSet<VarId> = c.iter().copied().collect();
        s.extend(cond.iter().copied());
        *c = s.into_iter().collect();
    }
    let mut uf = UnionFind::new(out.len());
    for &(a, b) in &out.arcs {
        uf.union(a, b);
    }
    for j in 1..out.len() {
        if uf.union(0, j) {
            out.arcs.push((0, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{chest_clinic, from_arcs, node, rng, CHEST_CLINIC_ARCS};
    use crate::network::NetworkBuilder;

    fn ids(xs: &[usize]) -> Vec<VarId> {
        xs.iter().map(|&k| node(k)).collect()
    }

    fn cycle(n: usize) -> UndirectedGraph {
        UndirectedGraph::from_edges(n, (0..n).map(|i| (VarId(i), VarId((i + 1) % n))))
    }

    #[test]
    fn chordality_of_chest_clinic_moral_graph() {
        let moral = chest_clinic(1).moral_graph();
        assert!(!is_chordal(&moral));
        let mut with35 = moral.clone();
        with35.add_edge(node(3), node(5));
        assert!(is_chordal(&with35));
        let mut with26 = moral.clone();
        with26.add_edge(node(2), node(6));
        assert!(is_chordal(&with26));
    }

    #[test]
    fn trees_and_complete_graphs_are_chordal() {
        let path = UndirectedGraph::from_edges(4, [(VarId(0), VarId(1)), (VarId(1), VarId(2)), (VarId(1), VarId(3))]);
        assert!(is_chordal(&path));
        let mut k5 = UndirectedGraph::new(5);
        for a in 0..5 {
            for b in a + 1..5 {
                k5.add_edge(VarId(a), VarId(b));
            }
        }
        assert!(is_chordal(&k5));
        assert!(!is_chordal(&cycle(4)));
        assert!(!is_chordal(&cycle(6)));
    }

    #[test]
    fn triangulation_cases() {
        let tri = cycle(3);
        let (filled, order) = triangulate(&tri, &[2, 2, 2]);
        assert_eq!(filled, tri);
        assert!(is_perfect_elimination_order(&filled, &order));

        let (filled, order) = triangulate(&cycle(4), &[2; 4]);
        assert_eq!(filled.edge_count(), 5);
        assert!(is_chordal(&filled) && is_perfect_elimination_order(&filled, &order));

        let net = chest_clinic(1);
        let moral = net.moral_graph();
        let (filled, order) = triangulate(&moral, &net.cards());
        assert_eq!(filled.edge_count(), moral.edge_count() + 1);
        let cliques = max_cliques(&filled, &order).unwrap();
        assert_eq!(cliques.iter().map(Vec::len).max(), Some(3));
        // deterministic
        assert_eq!(triangulate(&moral, &net.cards()), (filled, order));
    }

    #[test]
    fn max_cliques_small_cases() {
        let tri = cycle(3);
        let order = maximum_cardinality_order(&tri);
        assert_eq!(max_cliques(&tri, &order).unwrap(), vec![vec![VarId(0), VarId(1), VarId(2)]]);
        let path = UndirectedGraph::from_edges(3, [(VarId(0), VarId(1)), (VarId(1), VarId(2))]);
        let mut cl = max_cliques(&path, &maximum_cardinality_order(&path)).unwrap();
        cl.sort();
        assert_eq!(cl, vec![vec![VarId(0), VarId(1)], vec![VarId(1), VarId(2)]]);
        let c4 = cycle(4);
        assert!(matches!(max_cliques(&c4, &maximum_cardinality_order(&c4)), Err(Error::NotChordal)));
    }

    /// Brute-force maximal cliques by subset enumeration.
    fn brute_force_cliques(g: &UndirectedGraph) -> Vec<Vec<VarId>> {
        let n = g.node_count();
        let is_clique = |mask: u32| {
            (0..n).all(|a| (0..n).all(|b| a == b || mask & (1 << a) == 0 || mask & (1 << b) == 0 || g.has_edge(VarId(a), VarId(b))))
        };
        let cliques: Vec<u32> = (1u32..1 << n).filter(|&m| is_clique(m)).collect();
        let mut out: Vec<Vec<VarId>> = cliques
            .iter()
            .filter(|&&m| !cliques.iter().any(|&o| o != m && o & m == m))
            .map(|&m| (0..n).filter(|b| m & (1 << b) != 0).map(VarId).collect())
            .collect();
        out.sort();
        out
    }

    #[test]
    fn chest_clinic_cliques_with_chord_35() {
        let mut g = chest_clinic(1).moral_graph();
        g.add_edge(node(3), node(5));
        assert_eq!(g.edge_count(), 11);
        let mut cl = max_cliques(&g, &maximum_cardinality_order(&g)).unwrap();
        cl.sort();
        assert_eq!(cl, brute_force_cliques(&g));
        let mut sizes: Vec<usize> = cl.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn join_tree_small_cases() {
        let t = build_join_tree(vec![vec![VarId(0), VarId(1)], vec![VarId(2), VarId(3)]], &[2; 4]);
        assert!(t.arcs().is_empty());
        let t = build_join_tree(
            vec![vec![VarId(0), VarId(1)], vec![VarId(1), VarId(2)], vec![VarId(2), VarId(3)]],
            &[2; 4],
        );
        assert_eq!(t.arcs(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn chest_clinic_compiles_to_valid_tree() {
        let net = chest_clinic(1);
        let tree = compile(&net).unwrap();
        assert_eq!(tree.len(), 6);
        assert_eq!(tree.arcs().len(), 5);
        assert_eq!(tree.max_cluster_size(), 3);
        assert!((0..5).all(|k| matches!(tree.sepset(k).len(), 1 | 2)));
        assert!(verify_cluster_tree(&net, &tree).is_ok());
        let home = tree.assignment().unwrap().cpts[node(6).0];
        assert!(is_subset(&ids(&[3, 4, 6]), tree.cluster(home)));
    }

    #[test]
    fn verification_catches_perturbations() {
        let net = chest_clinic(1);
        let tree = compile(&net).unwrap();
        for k in 0..tree.arcs().len() {
            let mut broken = tree.clone();
            broken.arcs.remove(k);
            let report = verify_cluster_tree(&net, &broken);
            assert!(report.violations.iter().any(|v| matches!(v, TreeViolation::JoinProperty(_))));
        }
        // drop a sepset variable from a middle cluster of a path of length 3
        let chain = ClusterTree::new(
            vec![2; 2],
            vec![vec![VarId(0), VarId(1)], vec![VarId(0), VarId(1)], vec![VarId(0), VarId(1)]],
            vec![(0, 1), (1, 2)],
        );
        let mut b = NetworkBuilder::new("pair");
        let a = b.binary("a");
        let c = b.binary("c");
        b.cpt(a, &[], &[0.5, 0.5]).unwrap();
        b.cpt(c, &[a], &[0.5; 4]).unwrap();
        let pair = b.build().unwrap();
        assert!(verify_cluster_tree(&pair, &chain).is_ok());
        let mut broken = chain.clone();
        broken.clusters[1] = vec![VarId(1)];
        assert_eq!(
            verify_cluster_tree(&pair, &broken).violations,
            vec![TreeViolation::JoinProperty(VarId(0))]
        );
    }

    #[test]
    fn finding_spanning_no_cluster_is_rejected() {
        let net = chest_clinic(1);
        let tree = compile(&net).unwrap();
        let scope = net.scope_of(&ids(&[1, 8]));
        let f = crate::network::LikelihoodFinding::new(crate::tables::Table::ones(scope)).unwrap();
        let with = net.add_finding(f).unwrap();
        assert!(matches!(assign_potentials(&with, &tree), Err(Error::FindingNotCoverable(_))));
    }

    #[test]
    fn single_clique_takes_everything() {
        let mut b = NetworkBuilder::new("pair");
        let a = b.binary("a");
        let c = b.binary("c");
        b.cpt(a, &[], &[0.5, 0.5]).unwrap();
        b.cpt(c, &[a], &[0.5; 4]).unwrap();
        let net = b.build().unwrap().observe(c, "s1").unwrap();
        let tree = compile(&net).unwrap();
        assert_eq!(tree.len(), 1);
        let asg = tree.assignment().unwrap();
        assert_eq!(asg.cpts, vec![0, 0]);
        assert_eq!(asg.findings, vec![0]);
    }

    #[test]
    fn polytree_trees() {
        let chain = from_arcs("chain", 3, &[(1, 2), (2, 3)], &mut rng(1));
        let t = polytree_cluster_tree(&chain).unwrap();
        assert_eq!(t.clusters(), &[ids(&[1]), ids(&[1, 2]), ids(&[2, 3])]);
        assert_eq!(t.arcs(), &[(0, 1), (1, 2)]);

        let arcs: Vec<_> = CHEST_CLINIC_ARCS.iter().copied().filter(|&a| a != (2, 3)).collect();
        let net = from_arcs("no23", 8, &arcs, &mut rng(1));
        let t = polytree_cluster_tree(&net).unwrap();
        assert_eq!(t.len(), 8);
        assert_eq!(t.max_cluster_size(), 3);
        let big: Vec<&Vec<VarId>> = t.clusters().iter().filter(|c| c.len() == 3).collect();
        assert_eq!(big, vec![&ids(&[3, 4, 6]), &ids(&[5, 6, 8])]);
        assert!(verify_cluster_tree(&net, &t).is_ok());

        assert!(matches!(polytree_cluster_tree(&chest_clinic(1)), Err(Error::NotSinglyConnected)));
    }

    #[test]
    fn cutset_trees() {
        let net = chest_clinic(1);
        let t = cutset_cluster_tree(&net, &[node(2)]).unwrap();
        assert!(t.clusters().iter().all(|c| c.contains(&node(2))));
        assert_eq!(t.max_cluster_size(), 4);
        assert!(verify_cluster_tree(&net, &t).is_ok());
        assert!(matches!(cutset_cluster_tree(&net, &[node(7)]), Err(Error::NotLoopCutset(_))));

        let chain = from_arcs("chain", 4, &[(1, 2), (2, 3), (2, 4)], &mut rng(2));
        assert_eq!(cutset_cluster_tree(&chain, &[]).unwrap(), polytree_cluster_tree(&chain).unwrap());
    }

    #[test]
    fn cutset_verification() {
        let net = chest_clinic(1);
        assert!(verify_cutset(&net, &[node(2)]));
        assert!(!verify_cutset(&net, &[]));
        assert!(verify_cutset(&net, &[node(2), node(7)]));
    }

    #[test]
    fn conditioning_a_tree() {
        let net = chest_clinic(1);
        let tree = compile(&net).unwrap();
        assert_eq!(conditioned_cluster_tree(&tree, &[]), tree);
        let all = tree.clusters()[0].clone();
        let everywhere: Vec<VarId> = all.iter().copied().filter(|v| tree.clusters().iter().all(|c| c.contains(v))).collect();
        assert_eq!(conditioned_cluster_tree(&tree, &everywhere), tree);
        let cond = conditioned_cluster_tree(&tree, &[node(2)]);
        assert_eq!(tree.max_cluster_size(), 3);
        assert_eq!(cond.max_cluster_size(), 4);
        assert!(verify_cluster_tree(&net, &cond).is_ok());
    }
}
