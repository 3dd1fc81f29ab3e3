//! Replacing cluster-tree arcs without recompiling.
//!
//! If clusters `A` and `B` lie on opposite sides of arc `e` and `A ∩ B`
//! equals the sepset of `e`, then `e` may be swapped for an arc `A–B`. The
//! result is again a valid cluster tree, the move is reversible, and the
//! messages carried by `e` are exactly the ones the new arc needs.

use std::fmt;

use crate::error::{Error, Result};
use crate::propagate::{EngineState, Form};
use crate::tables::VarId;
use crate::treebuild::{intersect, ClusterTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RestructureMove {
    pub old_arc: (usize, usize),
    pub new_arc: (usize, usize),
}

impl RestructureMove {
    pub fn new(old_arc: (usize, usize), new_arc: (usize, usize)) -> Self {
        let canon = |(a, b): (usize, usize)| (a.min(b), a.max(b));
        RestructureMove { old_arc: canon(old_arc), new_arc: canon(new_arc) }
    }

    pub fn reverse(&self) -> Self {
        RestructureMove { old_arc: self.new_arc, new_arc: self.old_arc }
    }
}

impl fmt::Display for RestructureMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}:{},{}", self.old_arc.0, self.old_arc.1, self.new_arc.0, self.new_arc.1)
    }
}

impl std::str::FromStr for RestructureMove {
    type Err = String;

    /// Parses `I,J:A,B`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let pair = |p: &str| -> std::result::Result<(usize, usize), String> {
            let (a, b) = p.split_once(',').ok_or_else(|| format!("expected two cluster indices in `{p}`"))?;
            let n = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("bad cluster index `{x}`: {e}"));
            Ok((n(a)?, n(b)?))
        };
        let (old, new) = s.split_once(':').ok_or_else(|| format!("expected I,J:A,B, got `{s}`"))?;
        Ok(RestructureMove::new(pair(old)?, pair(new)?))
    }
}

/// Every move allowed on `tree`, arc by arc in arc order.
pub fn flexible_moves(tree: &ClusterTree) -> Vec<RestructureMove> {
    let mut out = Vec::new();
    for (k, &(u, v)) in tree.arcs().iter().enumerate() {
        let sep = tree.sepset(k);
        let left = tree.side(u, k);
        let right = tree.side(v, k);
        for &a in &left {
            for &b in &right {
                if (a, b) == (u, v) {
                    continue;
                }
                if intersect(tree.cluster(a), tree.cluster(b)) == sep {
                    out.push(RestructureMove::new((u, v), (a, b)));
                }
            }
        }
    }
    out
}

/// Checks the move's precondition; returns the old arc's index.
pub fn check_move(tree: &ClusterTree, mv: &RestructureMove) -> Result<usize> {
    let (u, v) = mv.old_arc;
    let (a, b) = mv.new_arc;
    let k = tree
        .arc_index(u, v)
        .ok_or_else(|| Error::InvalidMove(format!("{u}–{v} is not an arc")))?;
    if a >= tree.len() || b >= tree.len() || a == b {
        return Err(Error::InvalidMove(format!("{a}–{b} is not a pair of clusters")));
    }
    if tree.arc_index(a, b).is_some() {
        return Err(Error::InvalidMove(format!("{a} and {b} are already adjacent")));
    }
    let left = tree.side(u, k);
    if left.contains(&a) == left.contains(&b) {
        return Err(Error::InvalidMove(format!("{a} and {b} are not separated by {u}–{v}")));
    }
    if intersect(tree.cluster(a), tree.cluster(b)) != tree.sepset(k) {
        return Err(Error::InvalidMove(format!("{a} ∩ {b} differs from the sepset of {u}–{v}")));
    }
    Ok(k)
}

/// Applies a move to the bare tree. The arc keeps its index.
pub fn apply_to_tree(tree: &mut ClusterTree, mv: &RestructureMove) -> Result<usize> {
    let k = check_move(tree, mv)?;
    tree.arcs_mut()[k] = mv.new_arc;
    Ok(k)
}

/// Applies a move to an engine state, carrying the old arc's tables over.
///
/// Factored form: every other arc on the old `A`–`B` path is invalidated in
/// both directions, since its two sides have changed. Joint form: a
/// consistent state stays consistent and nothing is invalidated; otherwise
/// the path arcs are invalidated as in the factored form.
pub fn apply_move(state: &mut EngineState, mv: &RestructureMove) -> Result<()> {
    let k = check_move(&state.tree, mv)?;
    let (u, _) = mv.old_arc;
    let (a, b) = mv.new_arc;
    let path = state.tree.path(a, b).expect("a and b are connected through the old arc");
    let path_arcs: Vec<usize> =
        path.windows(2).map(|w| state.tree.arc_index(w[0], w[1]).expect("path arc")).filter(|&x| x != k).collect();
    let left = state.tree.side(u, k);
    // direction 0 of the old arc flowed out of `left`; keep it that way
    let swap = !left.contains(&a);
    state.tree.arcs_mut()[k] = mv.new_arc;
    if swap {
        state.messages[k].swap(0, 1);
        state.valid[k].swap(0, 1);
    }
    let stale = match state.form {
        Form::Factored => true,
        Form::Joint => !state.is_consistent(),
    };
    if stale {
        for &arc in &path_arcs {
            state.valid[arc] = [false; 2];
        }
        if state.form == Form::Factored {
            for &c in &path {
                state.posterior[c] = None;
            }
        }
    }
    state.rebuild_topology();
    Ok(())
}

fn distance(tree: &ClusterTree, a: usize, b: usize) -> usize {
    tree.path(a, b).map_or(usize::MAX / 4, |p| p.len() - 1)
}

/// Greedily applies moves that bring the most recently changed clusters
/// closer to the cluster answering `query`. Returns the moves applied.
pub fn cover_query(state: &mut EngineState, query: &[VarId]) -> Result<Vec<RestructureMove>> {
    let Some(target) = state.tree.smallest_containing(query) else {
        return Ok(Vec::new());
    };
    let sources: Vec<usize> = state.recently_changed().to_vec();
    let cost = |tree: &ClusterTree| -> usize { sources.iter().map(|&s| distance(tree, s, target)).sum() };
    let mut applied = Vec::new();
    let mut current = cost(&state.tree);
    for _ in 0..state.tree.len() {
        if current == 0 {
            break;
        }
        let mut best: Option<(usize, RestructureMove)> = None;
        for mv in flexible_moves(&state.tree) {
            let mut trial = state.tree.clone();
            apply_to_tree(&mut trial, &mv)?;
            let c = cost(&trial);
            if c < current && best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, mv));
            }
        }
        let Some((c, mv)) = best else { break };
        apply_move(state, &mv)?;
        applied.push(mv);
        current = c;
    }
    Ok(applied)
}
