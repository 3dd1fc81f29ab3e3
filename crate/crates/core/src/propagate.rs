//! The clustering engine: message passing on a cluster tree.
//!
//! Two message representations are supported. In the factored form each
//! directed arc caches the cluster message `M_ij`, and posteriors are
//! `P_i = Ψ_i ∏ M_ki`. In the joint form each cluster holds its posterior
//! `P_i`, each arc holds the last separator table sent, and an update
//! multiplies the receiver by the ratio of new to old separator tables.
//!
//! Messages are pulled on demand. Every directed arc carries a validity flag;
//! a change to a cluster's local factors clears the flags of all arcs
//! pointing away from it, and a collect recomputes exactly the cleared arcs
//! on its way in.
//!
//! Arcs with an empty separation set carry only a scalar, so they are not
//! traversed. The clusters joined by non-empty arcs form components
//! ("islands"); each component's total mass is computed at its root and the
//! global posterior of a cluster is its local posterior times the masses of
//! all other components.

use crate::error::{Error, Result};
use crate::network::BeliefNetwork;
use crate::tables::{Scope, Table, TableError, VarId};
use crate::treebuild::{ensure_assigned, ClusterTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    Factored,
    Joint,
}

impl std::str::FromStr for Form {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "factored" => Ok(Form::Factored),
            "joint" => Ok(Form::Joint),
            other => Err(format!("unknown message form `{other}`")),
        }
    }
}

pub type FindingId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorSource {
    Cpt(VarId),
    Finding(FindingId),
}

/// One local factor assigned to a cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub table: Table,
    pub source: FactorSource,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Components {
    pub(crate) of: Vec<usize>,
    pub(crate) roots: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct EngineState {
    pub(crate) tree: ClusterTree,
    pub(crate) form: Form,
    pub(crate) scopes: Vec<Scope>,
    pub(crate) factors: Vec<Vec<Factor>>,
    pub(crate) psi: Vec<Table>,
    pub(crate) changed: Vec<bool>,
    /// Per arc, per direction (0: `arcs[k].0 → arcs[k].1`): factored messages.
    pub(crate) messages: Vec<[Option<Table>; 2]>,
    pub(crate) valid: Vec<[bool; 2]>,
    /// Joint form: separator table last passed on each arc.
    pub(crate) sep: Vec<Table>,
    /// Local posteriors; always present in joint form, a cache in factored form.
    pub(crate) posterior: Vec<Option<Table>>,
    pub(crate) adjacency: Vec<Vec<(usize, usize)>>,
    pub(crate) components: Components,
    pub(crate) finding_home: Vec<Option<usize>>,
    pub(crate) pending: Vec<usize>,
    pub(crate) recent: Vec<usize>,
    pub(crate) messages_computed: usize,
}

fn cluster_scope(tree: &ClusterTree, i: usize) -> Scope {
    Scope::new(tree.cluster(i).iter().map(|v| (*v, tree.cards()[v.0]))).expect("sorted cluster")
}

impl EngineState {
    /// Multiplies the CPTs and findings assigned to each cluster. The tree is
    /// assigned first if it carries no assignment.
    pub fn initialize(net: &BeliefNetwork, tree: &ClusterTree, form: Form) -> Result<EngineState> {
        let tree = ensure_assigned(net, tree)?;
        let asg = tree.assignment().expect("assigned").clone();
        let mut factors = vec![Vec::new(); tree.len()];
        for cpt in net.cpts() {
            factors[asg.cpts[cpt.child.0]].push(Factor { table: cpt.table.clone(), source: FactorSource::Cpt(cpt.child) });
        }
        for (k, f) in net.evidence().iter().enumerate() {
            factors[asg.findings[k]].push(Factor { table: f.table.clone(), source: FactorSource::Finding(k) });
        }
        EngineState::from_factors(tree, factors, form)
    }

    /// Builds a state from explicit per-cluster factor lists. Clusters without
    /// factors get a scalar-one potential and are not marked changed.
    pub fn from_factors(tree: ClusterTree, factors: Vec<Vec<Factor>>, form: Form) -> Result<EngineState> {
        let n = tree.len();
        let scopes: Vec<Scope> = (0..n).map(|i| cluster_scope(&tree, i)).collect();
        for (i, fs) in factors.iter().enumerate() {
            if let Some(f) = fs.iter().find(|f| !f.table.scope().is_subset_of(&scopes[i])) {
                return Err(Error::FindingNotCoverable(f.table.scope().vars().to_vec()));
            }
        }
        let psi = factors.iter().map(|fs| product(fs)).collect::<Result<Vec<_>>>()?;
        let changed = factors.iter().map(|fs| !fs.is_empty()).collect();
        let finding_home = {
            let mut homes: Vec<Option<usize>> = Vec::new();
            for (i, fs) in factors.iter().enumerate() {
                for f in fs {
                    if let FactorSource::Finding(id) = f.source {
                        if homes.len() <= id {
                            homes.resize(id + 1, None);
                        }
                        homes[id] = Some(i);
                    }
                }
            }
            homes
        };
        let arcs = tree.arcs().len();
        let mut state = EngineState {
            form,
            scopes,
            factors,
            psi,
            changed,
            messages: vec![[None, None]; arcs],
            valid: vec![[false; 2]; arcs],
            sep: vec![Table::scalar(1.0); arcs],
            posterior: vec![None; n],
            adjacency: Vec::new(),
            components: Components::default(),
            finding_home,
            pending: Vec::new(),
            recent: Vec::new(),
            messages_computed: 0,
            tree,
        };
        state.rebuild_topology();
        state.pending = (0..n).filter(|&i| state.changed[i]).collect();
        if form == Form::Joint {
            state.reset_joint()?;
        }
        Ok(state)
    }

    fn reset_joint(&mut self) -> Result<()> {
        for i in 0..self.tree.len() {
            self.posterior[i] = Some(self.psi[i].expand_to(&self.scopes[i])?);
        }
        for k in 0..self.sep.len() {
            self.sep[k] = Table::scalar(1.0);
            self.valid[k] = [false; 2];
        }
        Ok(())
    }

    /// Recomputes adjacency over non-empty arcs and the component partition.
    pub(crate) fn rebuild_topology(&mut self) {
        let n = self.tree.len();
        let mut adjacency = vec![Vec::new(); n];
        for (k, &(a, b)) in self.tree.arcs().iter().enumerate() {
            if !self.tree.sepset(k).is_empty() {
                adjacency[a].push((b, k));
                adjacency[b].push((a, k));
            }
        }
        let mut of = vec![usize::MAX; n];
        let mut roots = Vec::new();
        for start in 0..n {
            if of[start] != usize::MAX {
                continue;
            }
            let c = roots.len();
            let mut members = vec![start];
            of[start] = c;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(w, _) in &adjacency[u] {
                    if of[w] == usize::MAX {
                        of[w] = c;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            let root = *members.iter().min_by_key(|&&i| (self.tree.weight(i), i)).unwrap();
            roots.push(root);
        }
        self.adjacency = adjacency;
        self.components = Components { of, roots };
    }

    pub fn tree(&self) -> &ClusterTree {
        &self.tree
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn psi(&self, i: usize) -> &Table {
        &self.psi[i]
    }

    pub fn factors(&self, i: usize) -> &[Factor] {
        &self.factors[i]
    }

    pub fn is_changed(&self, i: usize) -> bool {
        self.changed[i]
    }

    /// Number of cluster messages (factored) or separator updates (joint)
    /// computed since construction or the last reset.
    pub fn messages_computed(&self) -> usize {
        self.messages_computed
    }

    pub fn reset_counter(&mut self) {
        self.messages_computed = 0;
    }

    pub fn component_count(&self) -> usize {
        self.components.roots.len()
    }

    pub fn component_of(&self, i: usize) -> usize {
        self.components.of[i]
    }

    pub fn component_root(&self, c: usize) -> usize {
        self.components.roots[c]
    }

    /// Clusters whose local factors changed most recently.
    pub fn recently_changed(&self) -> &[usize] {
        if self.pending.is_empty() {
            &self.recent
        } else {
            &self.pending
        }
    }

    /// Whether every directed message is current.
    pub fn is_consistent(&self) -> bool {
        self.adjacency
            .iter()
            .enumerate()
            .all(|(u, nbrs)| nbrs.iter().all(|&(_, k)| self.valid[k][self.dir(k, u)]))
    }

    /// Cached message on arc `k` in direction `dir` (0: `arcs[k].0 → arcs[k].1`).
    pub fn stored_message(&self, k: usize, dir: usize) -> Option<&Table> {
        self.messages[k][dir].as_ref()
    }

    pub fn message_valid(&self, k: usize, dir: usize) -> bool {
        self.valid[k][dir]
    }

    /// Joint form: the separator table last passed over arc `k`.
    pub fn stored_sepset(&self, k: usize) -> &Table {
        &self.sep[k]
    }

    pub(crate) fn dir(&self, arc: usize, from: usize) -> usize {
        if self.tree.arcs()[arc].0 == from {
            0
        } else {
            1
        }
    }

    pub(crate) fn arc_between(&self, i: usize, j: usize) -> Option<usize> {
        self.adjacency[i].iter().find(|&&(w, _)| w == j).map(|&(_, k)| k)
    }

    fn sep_scope(&self, arc: usize) -> Scope {
        let (a, b) = self.tree.arcs()[arc];
        self.scopes[a].intersect(&self.scopes[b])
    }

    /// Marks cluster `i` changed and invalidates every message leaving it.
    pub(crate) fn mark_changed(&mut self, i: usize) {
        self.changed[i] = true;
        if !self.pending.contains(&i) {
            self.pending.push(i);
        }
        let mut stack = vec![(i, usize::MAX)];
        while let Some((u, from)) = stack.pop() {
            if self.form == Form::Factored {
                self.posterior[u] = None;
            }
            for idx in 0..self.adjacency[u].len() {
                let (w, k) = self.adjacency[u][idx];
                if w == from {
                    continue;
                }
                let d = self.dir(k, u);
                self.valid[k][d] = false;
                stack.push((w, u));
            }
        }
    }

    /// Factored form: the message `M_ij`, recomputed only if stale.
    pub fn message_factored(&mut self, i: usize, j: usize) -> Result<Table> {
        let k = self.arc_between(i, j).ok_or_else(|| Error::InvalidMove(format!("clusters {i} and {j} are not adjacent")))?;
        self.ensure_message(i, j, k)?;
        Ok(self.messages[k][self.dir(k, i)].clone().expect("message present"))
    }

    fn ensure_message(&mut self, i: usize, j: usize, k: usize) -> Result<()> {
        let d = self.dir(k, i);
        if self.valid[k][d] && self.messages[k][d].is_some() {
            return Ok(());
        }
        let nbrs = self.adjacency[i].clone();
        for &(w, a) in &nbrs {
            if w != j {
                self.ensure_message(w, i, a)?;
            }
        }
        let mut prod = self.psi[i].clone();
        for &(w, a) in &nbrs {
            if w != j {
                let m = self.messages[a][self.dir(a, w)].as_ref().expect("ensured");
                prod = prod.multiply(m)?;
            }
        }
        let sep = self.sep_scope(k);
        let msg = prod.marginalize_to(&sep).expand_to(&sep)?;
        self.messages[k][d] = Some(msg);
        self.valid[k][d] = true;
        self.messages_computed += 1;
        Ok(())
    }

    /// Joint form: cluster `j` absorbs from neighbor `i`.
    pub fn update_joint(&mut self, i: usize, j: usize) -> Result<()> {
        let k = self.arc_between(i, j).ok_or_else(|| Error::InvalidMove(format!("clusters {i} and {j} are not adjacent")))?;
        self.absorb(i, j, k)
    }

    fn absorb(&mut self, i: usize, j: usize, k: usize) -> Result<()> {
        let sep = self.sep_scope(k);
        let new = self.posterior[i].as_ref().expect("joint posterior").marginalize_to(&sep).expand_to(&sep)?;
        let ratio = new.divide(&self.sep[k])?;
        self.posterior[j].as_mut().expect("joint posterior").multiply_assign(&ratio)?;
        self.sep[k] = new;
        let d = self.dir(k, i);
        self.valid[k][d] = true;
        self.messages_computed += 1;
        Ok(())
    }

    fn joint_collect_into(&mut self, i: usize, from: usize, k: usize) -> Result<()> {
        let nbrs = self.adjacency[i].clone();
        for &(w, a) in &nbrs {
            if w != from {
                self.joint_collect_into(w, i, a)?;
            }
        }
        // `i` now holds everything on its side; pass it on if stale
        if !self.valid[k][self.dir(k, i)] {
            self.absorb(i, from, k)?;
        }
        Ok(())
    }

    /// Pulls every stale message toward cluster `i` and forms its local posterior.
    pub fn collect(&mut self, i: usize) -> Result<()> {
        let nbrs = self.adjacency[i].clone();
        match self.form {
            Form::Factored => {
                for &(w, k) in &nbrs {
                    self.ensure_message(w, i, k)?;
                }
                if self.posterior[i].is_none() {
                    let mut p = self.psi[i].clone();
                    for &(w, k) in &nbrs {
                        p = p.multiply(self.messages[k][self.dir(k, w)].as_ref().unwrap())?;
                    }
                    self.posterior[i] = Some(p.expand_to(&self.scopes[i])?);
                }
            }
            Form::Joint => {
                for &(w, k) in &nbrs {
                    self.joint_collect_into(w, i, k)?;
                }
            }
        }
        Ok(())
    }

    /// Collect at `i`, then push messages outward until every cluster of its
    /// component is current.
    pub fn distribute(&mut self, i: usize) -> Result<()> {
        self.collect(i)?;
        let mut stack = vec![(i, usize::MAX)];
        while let Some((u, from)) = stack.pop() {
            let nbrs = self.adjacency[u].clone();
            for &(w, k) in &nbrs {
                if w == from {
                    continue;
                }
                match self.form {
                    Form::Factored => {
                        self.ensure_message(u, w, k)?;
                        self.collect(w)?;
                    }
                    Form::Joint => {
                        if !self.valid[k][self.dir(k, u)] {
                            self.absorb(u, w, k)?;
                        }
                    }
                }
                stack.push((w, u));
            }
        }
        Ok(())
    }

    /// Full propagation: distribute from every component root.
    pub fn propagate(&mut self) -> Result<()> {
        for c in 0..self.components.roots.len() {
            self.distribute(self.components.roots[c])?;
        }
        self.settle();
        Ok(())
    }

    /// Propagation confined to one component.
    pub fn propagate_component(&mut self, c: usize) -> Result<()> {
        self.distribute(self.components.roots[c])
    }

    pub(crate) fn settle(&mut self) {
        for c in &mut self.changed {
            *c = false;
        }
        if !self.pending.is_empty() {
            self.recent = std::mem::take(&mut self.pending);
        }
    }

    /// Local posterior of cluster `i`: the sum of the product of potentials
    /// within its component, over the cluster scope.
    pub fn local_posterior(&mut self, i: usize) -> Result<Table> {
        self.collect(i)?;
        Ok(self.posterior[i].clone().expect("collected"))
    }

    /// Total mass of component `c`, summed at its root.
    pub fn component_mass(&mut self, c: usize) -> Result<f64> {
        let root = self.components.roots[c];
        self.collect(root)?;
        Ok(self.posterior[root].as_ref().unwrap().sum_all())
    }

    fn other_masses(&mut self, c: usize) -> Result<f64> {
        let mut f = 1.0;
        for d in 0..self.components.roots.len() {
            if d != c {
                f *= self.component_mass(d)?;
            }
        }
        Ok(f)
    }

    /// `P_i = Pr{X_{S_i}, e}`.
    pub fn cluster_posterior(&mut self, i: usize) -> Result<Table> {
        let mut p = self.local_posterior(i)?;
        let f = self.other_masses(self.components.of[i])?;
        if f != 1.0 {
            p.scale(f);
        }
        Ok(p)
    }

    /// `Pr{e}`: the product of all component masses.
    pub fn prob_evidence(&mut self) -> Result<f64> {
        let mut z = 1.0;
        for c in 0..self.components.roots.len() {
            z *= self.component_mass(c)?;
        }
        Ok(z)
    }

    /// `P_ij = Pr{X_{S_i ∩ S_j}, e}` for adjacent clusters.
    pub fn posterior_sepset(&mut self, i: usize, j: usize) -> Result<Table> {
        let arc = self
            .tree
            .arc_index(i, j)
            .ok_or_else(|| Error::InvalidMove(format!("clusters {i} and {j} are not adjacent")))?;
        if self.tree.sepset(arc).is_empty() {
            return Ok(Table::scalar(self.prob_evidence()?));
        }
        let sep = self.sep_scope(arc);
        let mut p = match self.form {
            Form::Factored => {
                let a = self.message_factored(i, j)?;
                let b = self.message_factored(j, i)?;
                a.multiply(&b)?
            }
            Form::Joint => {
                self.collect(i)?;
                self.posterior[i].as_ref().unwrap().marginalize_to(&sep)
            }
        };
        let f = self.other_masses(self.components.of[i])?;
        if f != 1.0 {
            p.scale(f);
        }
        Ok(p)
    }

    /// Unnormalized `Pr{X_J, e}` from the smallest cluster containing `J`.
    pub fn query_marginal(&mut self, query: &[VarId]) -> Result<Table> {
        let i = self.tree.smallest_containing(query).ok_or_else(|| Error::QueryNotCoverable(query.to_vec()))?;
        let p = self.cluster_posterior(i)?;
        let scope = self.scopes[i].filter(|v| query.contains(&v));
        Ok(p.marginalize_to(&scope))
    }

    /// Normalized posterior of one variable.
    pub fn marginal(&mut self, v: VarId) -> Result<Vec<f64>> {
        let m = self.query_marginal(&[v])?;
        match m.normalize() {
            Ok((t, _)) => Ok(t.values().to_vec()),
            Err(TableError::ZeroSum) => Err(Error::ImpossibleEvidence),
            Err(e) => Err(e.into()),
        }
    }

    /// Adds a finding to the smallest cluster containing its scope.
    pub fn enter_finding(&mut self, table: Table) -> Result<FindingId> {
        let vars = table.scope().vars().to_vec();
        let i = self.tree.smallest_containing(&vars).ok_or(Error::FindingNotCoverable(vars))?;
        let id = self.finding_home.len();
        self.psi[i] = self.psi[i].multiply(&table)?;
        if self.form == Form::Joint {
            self.posterior[i].as_mut().unwrap().multiply_assign(&table)?;
        }
        self.factors[i].push(Factor { table, source: FactorSource::Finding(id) });
        self.finding_home.push(Some(i));
        self.mark_changed(i);
        Ok(id)
    }

    /// Removes a finding. The factored form divides it out of the potential
    /// when it has no zero entries and rebuilds the potential otherwise; the
    /// joint form reinitializes the whole state.
    pub fn retract_finding(&mut self, id: FindingId) -> Result<()> {
        let i = self.finding_home.get(id).copied().flatten().ok_or(Error::UnknownFinding(id))?;
        let pos = self.factors[i]
            .iter()
            .position(|f| f.source == FactorSource::Finding(id))
            .ok_or(Error::UnknownFinding(id))?;
        let removed = self.factors[i].remove(pos);
        self.finding_home[id] = None;
        match self.form {
            Form::Factored => {
                if removed.table.values().iter().all(|x| *x > 0.0) {
                    self.psi[i] = self.psi[i].divide(&removed.table)?;
                } else {
                    self.psi[i] = product(&self.factors[i])?;
                }
                self.mark_changed(i);
            }
            Form::Joint => self.reinitialize()?,
        }
        Ok(())
    }

    /// Rebuilds every potential from its factors and discards all messages.
    pub fn reinitialize(&mut self) -> Result<()> {
        for i in 0..self.tree.len() {
            self.psi[i] = product(&self.factors[i])?;
            self.posterior[i] = None;
        }
        for k in 0..self.valid.len() {
            self.valid[k] = [false; 2];
            self.messages[k] = [None, None];
        }
        for i in 0..self.tree.len() {
            if !self.factors[i].is_empty() {
                self.changed[i] = true;
                if !self.pending.contains(&i) {
                    self.pending.push(i);
                }
            }
        }
        if self.form == Form::Joint {
            self.reset_joint()?;
        }
        Ok(())
    }

    /// Bytes held by factors, potentials, messages, separators and posteriors.
    pub fn table_bytes(&self) -> usize {
        let factors: usize = self.factors.iter().flatten().map(|f| f.table.payload_bytes()).sum();
        let psi: usize = self.psi.iter().map(Table::payload_bytes).sum();
        let msgs: usize = self.messages.iter().flatten().flatten().map(Table::payload_bytes).sum();
        let post: usize = self.posterior.iter().flatten().map(Table::payload_bytes).sum();
        let sep: usize = if self.form == Form::Joint { self.sep.iter().map(Table::payload_bytes).sum() } else { 0 };
        factors + psi + msgs + post + sep
    }
}

pub(crate) fn product(factors: &[Factor]) -> Result<Table> {
    let mut p = Table::scalar(1.0);
    for f in factors {
        p = p.multiply(&f.table)?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{chest_clinic, node, random_evidence, random_network, rng};
    use crate::network::NetworkBuilder;
    use crate::oracle;
    use crate::treebuild::compile;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn engine(net: &BeliefNetwork, form: Form) -> EngineState {
        EngineState::initialize(net, &compile(net).unwrap(), form).unwrap()
    }

    /// Defining sum of `M_ij`: the product of all potentials on `i`'s side
    /// of the arc, enumerated over the full joint and summed onto `S_j`.
    fn brute_force_message(state: &EngineState, net: &BeliefNetwork, i: usize, j: usize) -> Vec<f64> {
        let k = state.tree.arc_index(i, j).unwrap();
        let side = state.tree.side(i, k);
        let mut vars: Vec<VarId> = side.iter().flat_map(|&c| state.tree.cluster(c).iter().copied()).collect();
        vars.sort_unstable();
        vars.dedup();
        let full = net.scope_of(&vars);
        let sep = state.sep_scope(k);
        let mut out = vec![0.0; sep.size()];
        for idx in 0..full.size() {
            let states = full.unravel(idx);
            let mut p = 1.0;
            for &c in &side {
                let t = &state.psi[c];
                let st: Vec<usize> = t.scope().vars().iter().map(|v| states[full.position(*v).unwrap()]).collect();
                p *= t.get(&st);
            }
            let st: Vec<usize> = sep.vars().iter().map(|v| states[full.position(*v).unwrap()]).collect();
            let o: usize = st.iter().zip(sep.strides()).map(|(s, w)| s * w).sum();
            out[o] += p;
        }
        out
    }

    #[test]
    fn initialization_flags_and_scalars() {
        let net = chest_clinic(2);
        let tree = compile(&net).unwrap();
        let state = EngineState::initialize(&net, &tree, Form::Factored).unwrap();
        for i in 0..tree.len() {
            if state.factors(i).is_empty() {
                assert_eq!(state.psi(i), &Table::scalar(1.0));
                assert!(!state.is_changed(i));
            } else {
                assert!(state.is_changed(i));
            }
        }
        assert!((0..tree.len()).any(|i| state.factors(i).is_empty()));
        let mut total = Table::scalar(1.0);
        for i in 0..tree.len() {
            total = total.multiply(state.psi(i)).unwrap();
        }
        assert!((total.sum_all() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preloaded_evidence_marks_its_cluster() {
        let net = chest_clinic(2).observe(node(7), "s0").unwrap();
        let tree = compile(&net).unwrap();
        let state = EngineState::initialize(&net, &tree, Form::Joint).unwrap();
        let home = tree.assignment().unwrap().findings[0];
        assert!(state.is_changed(home));
        assert!(state.factors(home).iter().any(|f| f.source == FactorSource::Finding(0)));
    }

    #[test]
    fn messages_match_defining_sum() {
        let net = chest_clinic(4).observe(node(8), "s1").unwrap();
        let mut state = engine(&net, Form::Factored);
        for &(a, b) in state.tree.arcs().to_vec().iter() {
            for (i, j) in [(a, b), (b, a)] {
                let m = state.message_factored(i, j).unwrap();
                assert!(close(m.values(), &brute_force_message(&state, &net, i, j), 1e-14));
            }
        }
    }

    #[test]
    fn two_cluster_message_is_marginal() {
        let mut b = NetworkBuilder::new("three");
        let a = b.binary("a");
        let c = b.binary("c");
        let d = b.binary("d");
        b.cpt(a, &[], &[0.2, 0.8]).unwrap();
        b.cpt(c, &[a], &[0.1, 0.9, 0.6, 0.4]).unwrap();
        b.cpt(d, &[c], &[0.3, 0.7, 0.5, 0.5]).unwrap();
        let net = b.build().unwrap();
        let mut state = engine(&net, Form::Factored);
        assert_eq!(state.tree.len(), 2);
        let m = state.message_factored(0, 1).unwrap();
        let sep = state.sep_scope(0);
        assert_eq!(m, state.psi(0).marginalize_to(&sep));
    }

    #[test]
    fn second_collect_recomputes_nothing() {
        let net = chest_clinic(5);
        let mut state = engine(&net, Form::Factored);
        state.collect(0).unwrap();
        assert!(state.messages_computed() > 0);
        state.reset_counter();
        state.collect(0).unwrap();
        assert_eq!(state.messages_computed(), 0);
    }

    #[test]
    fn collect_at_chain_leaf_flows_inward() {
        let net = crate::fixtures::from_arcs("chain", 4, &[(1, 2), (2, 3), (3, 4)], &mut rng(3));
        let mut state = engine(&net, Form::Factored);
        let leaf = (0..state.tree.len()).find(|&i| state.tree.neighbors(i).len() == 1).unwrap();
        state.collect(leaf).unwrap();
        assert_eq!(state.messages_computed(), state.tree.len() - 1);
        for (k, &(a, b)) in state.tree.arcs().iter().enumerate() {
            let toward_leaf = state.tree.path(a, leaf).unwrap().contains(&b);
            let d_ab = state.valid[k][0];
            let d_ba = state.valid[k][1];
            assert_eq!((d_ab, d_ba), (toward_leaf, !toward_leaf));
        }
    }

    #[test]
    fn both_forms_match_oracle_after_full_propagation() {
        let mut r = rng(17);
        for _ in 0..25 {
            let net = random_network(&mut r, 9, 3);
            let ev = random_evidence(&mut r, &net, 3);
            let net = net.with_evidence(ev).unwrap();
            for form in [Form::Factored, Form::Joint] {
                let mut state = engine(&net, form);
                state.propagate().unwrap();
                for i in 0..state.tree.len() {
                    let p = state.cluster_posterior(i).unwrap();
                    let o = oracle::oracle_marginal(&net, state.tree.cluster(i)).unwrap();
                    assert!(close(p.values(), o.values(), 1e-12), "{form:?} cluster {i}");
                }
                let z = oracle::oracle_evidence(&net).unwrap();
                assert!((state.prob_evidence().unwrap() - z).abs() <= 1e-12 * z);
            }
        }
    }

    #[test]
    fn single_cluster_distribute_is_noop() {
        let mut b = NetworkBuilder::new("one");
        let a = b.binary("a");
        b.cpt(a, &[], &[0.3, 0.7]).unwrap();
        let net = b.build().unwrap();
        let mut state = engine(&net, Form::Joint);
        state.distribute(0).unwrap();
        assert_eq!(state.messages_computed(), 0);
        assert!(close(&state.marginal(a).unwrap(), &[0.3, 0.7], 1e-15));
    }

    #[test]
    fn joint_update_with_equal_tables_is_identity() {
        let net = chest_clinic(6);
        let mut state = engine(&net, Form::Joint);
        state.propagate().unwrap();
        let (a, b) = state.tree.arcs()[0];
        let before = state.posterior[b].clone();
        state.update_joint(a, b).unwrap();
        let after = state.posterior[b].clone().unwrap();
        assert!(close(before.unwrap().values(), after.values(), 1e-15));
    }

    #[test]
    fn observed_variable_has_indicator_posterior() {
        let net = chest_clinic(8);
        for form in [Form::Factored, Form::Joint] {
            let mut state = engine(&net, form);
            state.propagate().unwrap();
            let ind = Table::indicator(node(4), 2, 1).unwrap();
            state.enter_finding(ind).unwrap();
            assert_eq!(state.marginal(node(4)).unwrap(), vec![0.0, 1.0]);
            // zero entries stay zero under 0/0 = 0 in the joint form
            state.propagate().unwrap();
            let p = state.query_marginal(&[node(4)]).unwrap();
            assert_eq!(p.values()[0], 0.0);
        }
    }

    #[test]
    fn impossible_evidence_is_reported() {
        let net = chest_clinic(8).observe(node(4), "s0").unwrap().observe(node(4), "s1").unwrap();
        for form in [Form::Factored, Form::Joint] {
            let mut state = engine(&net, form);
            state.propagate().unwrap();
            assert_eq!(state.prob_evidence().unwrap(), 0.0);
            assert!(matches!(state.marginal(node(1)), Err(Error::ImpossibleEvidence)));
        }
    }

    #[test]
    fn evidence_probability_of_single_observation() {
        let net = chest_clinic(10);
        let prior = oracle::oracle_posterior(&net, node(5)).unwrap();
        let mut state = engine(&net.observe(node(5), "s1").unwrap(), Form::Factored);
        assert!((state.prob_evidence().unwrap() - prior[1]).abs() < 1e-14);
    }

    #[test]
    fn enter_and_retract_round_trip() {
        let net = chest_clinic(11).observe(node(8), "s0").unwrap();
        for form in [Form::Factored, Form::Joint] {
            let mut base = engine(&net, form);
            base.propagate().unwrap();
            let mut state = base.clone();
            let lik = Table::new(net.scope_of(&[node(3)]), vec![0.2, 0.9]).unwrap();
            let id = state.enter_finding(lik).unwrap();
            let hard = state.enter_finding(Table::indicator(node(7), 2, 0).unwrap()).unwrap();
            state.propagate().unwrap();
            state.retract_finding(id).unwrap();
            state.retract_finding(hard).unwrap();
            state.propagate().unwrap();
            for v in net.ids() {
                assert!(close(&state.marginal(v).unwrap(), &base.marginal(v).unwrap(), 1e-10));
            }
            assert!(state.retract_finding(id).is_err());
        }
    }

    #[test]
    fn query_needs_a_covering_cluster() {
        let net = chest_clinic(1);
        let mut state = engine(&net, Form::Factored);
        assert!(matches!(state.query_marginal(&[node(1), node(8)]), Err(Error::QueryNotCoverable(_))));
        let c = state.tree.cluster(2).to_vec();
        let q = state.query_marginal(&c).unwrap();
        assert_eq!(q, state.cluster_posterior(2).unwrap());
    }

    #[test]
    fn disconnected_networks_compile_to_forests() {
        let mut b = NetworkBuilder::new("split");
        let a = b.binary("a");
        let c = b.binary("c");
        let d = b.binary("d");
        b.cpt(a, &[], &[0.2, 0.8]).unwrap();
        b.cpt(c, &[a], &[0.1, 0.9, 0.6, 0.4]).unwrap();
        b.cpt(d, &[], &[0.3, 0.7]).unwrap();
        let net = b.build().unwrap().observe(d, "s1").unwrap().observe(c, "s0").unwrap();
        let mut state = engine(&net, Form::Factored);
        assert_eq!(state.component_count(), 2);
        let z = oracle::oracle_evidence(&net).unwrap();
        assert!((state.prob_evidence().unwrap() - z).abs() < 1e-15);
        let p = state.query_marginal(&[a]).unwrap();
        let o = oracle::oracle_marginal(&net, &[a]).unwrap();
        assert!(close(p.values(), o.values(), 1e-15));
    }
}
