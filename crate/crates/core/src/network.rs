//! Discrete belief networks: variables, conditional probability tables and
//! likelihood findings, plus the structural operations the compilers need.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::tables::{Scope, Table, TableError, VarId};

/// Tolerance on the sum of a CPT row.
pub const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn card(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Conditional distribution of `child` given `parents`.
///
/// `parents` keeps the declared order (used by the file format); the table is
/// always over the ascending scope of the family.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    pub child: VarId,
    pub parents: Vec<VarId>,
    pub table: Table,
}

impl Cpt {
    /// Builds a CPT from values listed row-major over `parents` in the given
    /// order (first parent slowest) with the child fastest.
    pub fn from_declared(
        child: (VarId, usize),
        parents: &[(VarId, usize)],
        values: &[f64],
    ) -> Result<Cpt> {
        let mut order = parents.to_vec();
        order.push(child);
        let table = table_from_declared(&order, values)?;
        Ok(Cpt { child: child.0, parents: parents.iter().map(|p| p.0).collect(), table })
    }

    /// Values in declared order, inverse of [`Cpt::from_declared`].
    pub fn declared_values(&self) -> Vec<f64> {
        let mut order = self.parents.clone();
        order.push(self.child);
        table_to_declared(&self.table, &order)
    }
}

/// Builds a table from values listed row-major over `order` (last fastest).
pub fn table_from_declared(order: &[(VarId, usize)], values: &[f64]) -> Result<Table> {
    let scope = Scope::new(order.iter().copied())?;
    let expected = scope.size();
    if values.len() != expected {
        return Err(TableError::LengthMismatch { expected, got: values.len() }.into());
    }
    let strides = scope.strides();
    let target: Vec<usize> = order.iter().map(|(v, _)| strides[scope.position(*v).unwrap()]).collect();
    let cards: Vec<usize> = order.iter().map(|p| p.1).collect();
    let mut out = vec![0.0; expected];
    let mut counters = vec![0usize; order.len()];
    for &x in values {
        let idx: usize = counters.iter().zip(&target).map(|(c, s)| c * s).sum();
        out[idx] = x;
        for k in (0..counters.len()).rev() {
            counters[k] += 1;
            if counters[k] < cards[k] {
                break;
            }
            counters[k] = 0;
        }
    }
    Ok(Table::new(scope, out)?)
}

/// Lists a table's values row-major over `order` (last fastest).
pub fn table_to_declared(table: &Table, order: &[VarId]) -> Vec<f64> {
    let scope = table.scope();
    let strides = scope.strides();
    let src: Vec<usize> = order.iter().map(|v| strides[scope.position(*v).unwrap()]).collect();
    let cards: Vec<usize> = order.iter().map(|v| scope.card_of(*v).unwrap()).collect();
    let mut counters = vec![0usize; order.len()];
    let mut out = Vec::with_capacity(table.len());
    for _ in 0..table.len() {
        let idx: usize = counters.iter().zip(&src).map(|(c, s)| c * s).sum();
        out.push(table.values()[idx]);
        for k in (0..counters.len()).rev() {
            counters[k] += 1;
            if counters[k] < cards[k] {
                break;
            }
            counters[k] = 0;
        }
    }
    out
}

/// Likelihood function `Pr{e_k | X_J}` of one observation.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodFinding {
    pub table: Table,
}

impl LikelihoodFinding {
    pub fn new(table: Table) -> Result<Self> {
        if table.scope().is_empty() {
            return Err(Error::InvalidFinding("finding scope is empty".into()));
        }
        if !table.values().iter().any(|x| *x > 0.0) {
            return Err(Error::InvalidFinding("finding has no positive entry".into()));
        }
        Ok(LikelihoodFinding { table })
    }

    pub fn scope(&self) -> &Scope {
        self.table.scope()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Cycle(Vec<VarId>),
    DuplicateName(String),
    DuplicateState { var: VarId, label: String },
    NoStates(VarId),
    BadCptLayout { child: VarId, detail: String },
    OutOfRange { child: VarId, value: f64 },
    NotNormalized { child: VarId, config: Vec<(VarId, usize)>, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle(c) => {
                let ids: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "cycle in parent relation: {}", ids.join(" -> "))
            }
            Violation::DuplicateName(n) => write!(f, "duplicate variable name `{n}`"),
            Violation::DuplicateState { var, label } => {
                write!(f, "variable {var} declares state `{label}` twice")
            }
            Violation::NoStates(v) => write!(f, "variable {v} has no states"),
            Violation::BadCptLayout { child, detail } => write!(f, "CPT of {child}: {detail}"),
            Violation::OutOfRange { child, value } => {
                write!(f, "CPT of {child} has entry {value} outside [0, 1]")
            }
            Violation::NotNormalized { child, config, sum } => {
                let cfg: Vec<String> = config.iter().map(|(v, s)| format!("{v}={s}")).collect();
                write!(f, "CPT of {child} sums to {sum} for parent configuration [{}]", cfg.join(", "))
            }
        }
    }
}

/// Problems found by [`BeliefNetwork::validate`] or tree verification; empty
/// means well formed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport<V = Violation> {
    pub violations: Vec<V>,
}

impl<V> ValidationReport<V> {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeliefNetwork {
    name: String,
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    evidence: Vec<LikelihoodFinding>,
    /// Variables whose outgoing arcs were cut; their CPT children still carry
    /// them in table scope.
    cut: Vec<VarId>,
}

impl BeliefNetwork {
    /// Assembles a network. Only index consistency is checked here; the
    /// probabilistic and structural conditions are reported by [`validate`].
    ///
    /// [`validate`]: BeliefNetwork::validate
    pub fn new(name: impl Into<String>, variables: Vec<Variable>, mut cpts: Vec<Cpt>) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            if v.id != VarId(i) {
                return Err(Error::InvalidNetwork(format!("variable `{}` has id {} at position {i}", v.name, v.id)));
            }
        }
        cpts.sort_by_key(|c| c.child);
        if cpts.len() != variables.len() || cpts.iter().enumerate().any(|(i, c)| c.child != VarId(i)) {
            return Err(Error::InvalidNetwork("expected exactly one CPT per variable".into()));
        }
        let n = variables.len();
        for c in &cpts {
            if let Some(p) = c.parents.iter().find(|p| p.0 >= n) {
                return Err(Error::InvalidNetwork(format!("CPT of {} names unknown parent {p}", c.child)));
            }
        }
        Ok(BeliefNetwork { name: name.into(), variables, cpts, evidence: Vec::new(), cut: Vec::new() })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.variables[v.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.variables.len()).map(VarId)
    }

    pub fn find(&self, name: &str) -> Result<VarId> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.id)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn card(&self, v: VarId) -> usize {
        self.variables[v.0].card()
    }

    pub fn cards(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.card()).collect()
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, v: VarId) -> &Cpt {
        &self.cpts[v.0]
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.cpts[v.0].parents
    }

    pub fn children(&self, v: VarId) -> Vec<VarId> {
        self.cpts.iter().filter(|c| c.parents.contains(&v)).map(|c| c.child).collect()
    }

    /// Family of `v` under the current arcs: `{v} ∪ Pa(v)`, ascending.
    pub fn family(&self, v: VarId) -> Vec<VarId> {
        let mut fam: BTreeSet<VarId> = self.parents(v).iter().copied().collect();
        fam.insert(v);
        fam.into_iter().collect()
    }

    /// Directed arcs `(parent, child)`.
    pub fn arcs(&self) -> Vec<(VarId, VarId)> {
        self.cpts.iter().flat_map(|c| c.parents.iter().map(move |p| (*p, c.child))).collect()
    }

    pub fn scope_of(&self, vars: &[VarId]) -> Scope {
        Scope::new(vars.iter().map(|v| (*v, self.card(*v)))).expect("distinct variables")
    }

    pub fn evidence(&self) -> &[LikelihoodFinding] {
        &self.evidence
    }

    pub fn cut_set(&self) -> &[VarId] {
        &self.cut
    }

    pub fn without_evidence(&self) -> BeliefNetwork {
        BeliefNetwork { evidence: Vec::new(), ..self.clone() }
    }

    pub fn with_evidence(&self, evidence: Vec<LikelihoodFinding>) -> Result<BeliefNetwork> {
        let mut net = self.without_evidence();
        for f in evidence {
            net = net.add_finding(f)?;
        }
        Ok(net)
    }

    /// Appends a finding. Findings accumulate; several on one variable multiply.
    pub fn add_finding(&self, finding: LikelihoodFinding) -> Result<BeliefNetwork> {
        for (v, c) in finding.scope().vars().iter().zip(finding.scope().cards()) {
            if v.0 >= self.len() {
                return Err(Error::UnknownVariable(v.to_string()));
            }
            if self.card(*v) != *c {
                return Err(Error::InvalidFinding(format!(
                    "variable {v} has {} states but the finding uses {c}",
                    self.card(*v)
                )));
            }
        }
        let mut net = self.clone();
        net.evidence.push(finding);
        Ok(net)
    }

    /// Exact observation as an indicator likelihood.
    pub fn observe(&self, v: VarId, state: &str) -> Result<BeliefNetwork> {
        let var = self.variables.get(v.0).ok_or_else(|| Error::UnknownVariable(v.to_string()))?;
        let s = var.state_index(state).ok_or_else(|| Error::UnknownState {
            var: var.name.clone(),
            state: state.to_string(),
        })?;
        self.observe_index(v, s)
    }

    pub fn observe_index(&self, v: VarId, state: usize) -> Result<BeliefNetwork> {
        if v.0 >= self.len() {
            return Err(Error::UnknownVariable(v.to_string()));
        }
        let t = Table::indicator(v, self.card(v), state)?;
        self.add_finding(LikelihoodFinding::new(t)?)
    }

    /// Undirected graph of the current arcs.
    pub fn skeleton(&self) -> UndirectedGraph {
        UndirectedGraph::from_edges(self.len(), self.arcs())
    }

    /// Undirected arcs plus links between every pair of co-parents.
    pub fn moral_graph(&self) -> UndirectedGraph {
        let mut g = self.skeleton();
        for c in &self.cpts {
            for (i, a) in c.parents.iter().enumerate() {
                for b in &c.parents[i + 1..] {
                    g.add_edge(*a, *b);
                }
            }
        }
        g
    }

    /// Removes every `k ∈ cut` from the parent lists of its children. CPT
    /// tables are left untouched; the removed parents are remembered so that
    /// validation and tree construction still see the full table scopes.
    pub fn cut_outgoing_arcs(&self, cut: &[VarId]) -> BeliefNetwork {
        let mut net = self.clone();
        for c in &mut net.cpts {
            c.parents.retain(|p| !cut.contains(p));
        }
        let mut all: BTreeSet<VarId> = net.cut.iter().copied().collect();
        all.extend(cut.iter().copied());
        net.cut = all.into_iter().collect();
        net
    }

    /// True iff the undirected skeleton is a forest.
    pub fn is_singly_connected(&self) -> bool {
        self.skeleton().is_forest()
    }

    /// Variables in topological order, or the cycle that prevents one.
    pub fn topological_order(&self) -> std::result::Result<Vec<VarId>, Vec<VarId>> {
        let n = self.len();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color = vec![0u8; n];
        let mut order = Vec::with_capacity(n);
        let mut path: Vec<usize> = Vec::new();
        for root in 0..n {
            if color[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            color[root] = 1;
            path.push(root);
            while let Some(top) = stack.last_mut() {
                let (u, next) = *top;
                let parents = &self.cpts[u].parents;
                if next < parents.len() {
                    top.1 += 1;
                    let p = parents[next].0;
                    match color[p] {
                        0 => {
                            color[p] = 1;
                            path.push(p);
                            stack.push((p, 0));
                        }
                        1 => {
                            // path runs child -> parent; report the cycle along arc direction
                            let start = path.iter().position(|&x| x == p).unwrap();
                            let mut cycle = vec![VarId(p)];
                            cycle.extend(path[start + 1..].iter().rev().map(|&x| VarId(x)));
                            cycle.push(VarId(p));
                            return Err(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[u] = 2;
                    order.push(VarId(u));
                    path.pop();
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    /// Checks the prior model. Zero-probability evidence is not detected here.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut names = HashSet::new();
        for v in &self.variables {
            if !names.insert(v.name.as_str()) {
                violations.push(Violation::DuplicateName(v.name.clone()));
            }
            if v.states.is_empty() {
                violations.push(Violation::NoStates(v.id));
            }
            let mut labels = HashSet::new();
            for s in &v.states {
                if !labels.insert(s.as_str()) {
                    violations.push(Violation::DuplicateState { var: v.id, label: s.clone() });
                }
            }
        }
        if let Err(cycle) = self.topological_order() {
            violations.push(Violation::Cycle(cycle));
        }
        for c in &self.cpts {
            self.check_cpt(c, &mut violations);
        }
        ValidationReport { violations }
    }

    fn check_cpt(&self, c: &Cpt, out: &mut Vec<Violation>) {
        let scope = c.table.scope();
        let family = self.family(c.child);
        let mut uniq = BTreeSet::new();
        for p in &c.parents {
            if !uniq.insert(*p) || *p == c.child {
                out.push(Violation::BadCptLayout { child: c.child, detail: format!("parent {p} repeated") });
                return;
            }
        }
        if let Some(v) = family.iter().find(|v| !scope.contains(**v)) {
            out.push(Violation::BadCptLayout { child: c.child, detail: format!("table scope lacks {v}") });
            return;
        }
        if let Some(v) = scope.vars().iter().find(|v| !family.contains(v) && !self.cut.contains(v)) {
            out.push(Violation::BadCptLayout { child: c.child, detail: format!("table scope has extra variable {v}") });
            return;
        }
        for (v, card) in scope.vars().iter().zip(scope.cards()) {
            if v.0 >= self.len() || self.card(*v) != *card {
                out.push(Violation::BadCptLayout {
                    child: c.child,
                    detail: format!("variable {v} has cardinality {card} in the table"),
                });
                return;
            }
        }
        if let Some(&x) = c.table.values().iter().find(|x| **x > 1.0 + ROW_TOLERANCE) {
            out.push(Violation::OutOfRange { child: c.child, value: x });
        }
        let conditioning: Vec<VarId> = scope.vars().iter().copied().filter(|v| *v != c.child).collect();
        let sums = c.table.marginalize(&conditioning);
        for (i, s) in sums.values().iter().enumerate() {
            if (s - 1.0).abs() > ROW_TOLERANCE {
                let states = sums.scope().unravel(i);
                let config = sums.scope().vars().iter().copied().zip(states).collect();
                out.push(Violation::NotNormalized { child: c.child, config, sum: *s });
            }
        }
    }
}

/// Small builder for networks written in code.
#[derive(Default)]
pub struct NetworkBuilder {
    name: String,
    variables: Vec<Variable>,
    cpts: Vec<Option<Cpt>>,
}

impl NetworkBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetworkBuilder { name: name.into(), ..Default::default() }
    }

    pub fn variable(&mut self, name: &str, states: &[&str]) -> VarId {
        let id = VarId(self.variables.len());
        self.variables.push(Variable {
            id,
            name: name.to_string(),
            states: states.iter().map(|s| s.to_string()).collect(),
        });
        self.cpts.push(None);
        id
    }

    pub fn binary(&mut self, name: &str) -> VarId {
        self.variable(name, &["s0", "s1"])
    }

    /// Sets the CPT of `child`, values listed with the first parent slowest
    /// and the child fastest.
    pub fn cpt(&mut self, child: VarId, parents: &[VarId], values: &[f64]) -> Result<&mut Self> {
        let card = |v: VarId| self.variables[v.0].card();
        let ps: Vec<(VarId, usize)> = parents.iter().map(|p| (*p, card(*p))).collect();
        let cpt = Cpt::from_declared((child, card(child)), &ps, values)?;
        self.cpts[child.0] = Some(cpt);
        Ok(self)
    }

    pub fn build(self) -> Result<BeliefNetwork> {
        let mut cpts = Vec::with_capacity(self.cpts.len());
        for (i, c) in self.cpts.into_iter().enumerate() {
            cpts.push(c.ok_or_else(|| {
                Error::InvalidNetwork(format!("variable `{}` has no CPT", self.variables[i].name))
            })?);
        }
        BeliefNetwork::new(self.name, self.variables, cpts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{chest_clinic, node};

    #[test]
    fn single_node_validates() {
        let mut b = NetworkBuilder::new("one");
        let a = b.binary("a");
        b.cpt(a, &[], &[0.5, 0.5]).unwrap();
        assert!(b.build().unwrap().validate().is_ok());
    }

    #[test]
    fn unnormalized_row_is_reported() {
        let mut b = NetworkBuilder::new("bad");
        let a = b.binary("a");
        let c = b.binary("c");
        b.cpt(a, &[], &[0.5, 0.5]).unwrap();
        b.cpt(c, &[a], &[0.3, 0.7, 0.6, 0.6]).unwrap();
        let report = b.build().unwrap().validate();
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            Violation::NotNormalized { child, config, sum } => {
                assert_eq!(*child, c);
                assert_eq!(config, &vec![(a, 1)]);
                assert!((sum - 1.2).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_cycle_is_reported() {
        let mut b = NetworkBuilder::new("cyc");
        let a = b.binary("a");
        let c = b.binary("c");
        b.cpt(a, &[c], &[0.5, 0.5, 0.5, 0.5]).unwrap();
        b.cpt(c, &[a], &[0.5, 0.5, 0.5, 0.5]).unwrap();
        let report = b.build().unwrap().validate();
        let cycle = report
            .violations
            .iter()
            .find_map(|v| match v {
                Violation::Cycle(c) => Some(c.clone()),
                _ => None,
            })
            .expect("cycle violation");
        assert_eq!(cycle.first(), cycle.last());
        assert!(cycle.contains(&a) && cycle.contains(&c));
    }

    #[test]
    fn duplicate_names_and_states() {
        let mut b = NetworkBuilder::new("dup");
        let a = b.variable("x", &["on", "on"]);
        let c = b.variable("x", &["a", "b"]);
        b.cpt(a, &[], &[0.5, 0.5]).unwrap();
        b.cpt(c, &[], &[0.5, 0.5]).unwrap();
        let report = b.build().unwrap().validate();
        assert!(report.violations.contains(&Violation::DuplicateName("x".into())));
        assert!(report.violations.contains(&Violation::DuplicateState { var: a, label: "on".into() }));
    }

    #[test]
    fn chest_clinic_validates_and_rejects_perturbations() {
        let net = chest_clinic(7);
        assert!(net.validate().is_ok());
        for v in net.ids() {
            let cpt = net.cpt(v);
            for cell in 0..cpt.table.len() {
                let mut values = cpt.table.values().to_vec();
                values[cell] += 0.1;
                let table = Table::new(cpt.table.scope().clone(), values).unwrap();
                let mut cpts = net.cpts().to_vec();
                cpts[v.0].table = table;
                let bad = BeliefNetwork::new("p", net.variables().to_vec(), cpts).unwrap();
                assert!(!bad.validate().is_ok(), "perturbing {v} cell {cell} went unnoticed");
            }
        }
    }

    #[test]
    fn moral_graph_of_chest_clinic_adds_two_edges() {
        let net = chest_clinic(1);
        let moral = net.moral_graph();
        let skel = net.skeleton();
        let added: Vec<_> = moral.edges().into_iter().filter(|(a, b)| !skel.has_edge(*a, *b)).collect();
        assert_eq!(added, vec![(node(3), node(4)), (node(5), node(6))]);
    }

    #[test]
    fn moral_graph_small_cases() {
        let mut b = NetworkBuilder::new("chain");
        let a = b.binary("a");
        let m = b.binary("b");
        let c = b.binary("c");
        b.cpt(a, &[], &[0.5, 0.5]).unwrap();
        b.cpt(m, &[a], &[0.5, 0.5, 0.5, 0.5]).unwrap();
        b.cpt(c, &[m], &[0.5, 0.5, 0.5, 0.5]).unwrap();
        let chain = b.build().unwrap();
        assert_eq!(chain.moral_graph().edges(), vec![(a, m), (m, c)]);

        let mut b = NetworkBuilder::new("vee");
        let a = b.binary("a");
        let m = b.binary("b");
        let c = b.binary("c");
        b.cpt(a, &[], &[0.5, 0.5]).unwrap();
        b.cpt(m, &[], &[0.5, 0.5]).unwrap();
        b.cpt(c, &[a, m], &[0.5; 8]).unwrap();
        let vee = b.build().unwrap();
        assert_eq!(vee.moral_graph().edges(), vec![(a, m), (a, c), (m, c)]);
    }

    #[test]
    fn cutting_arcs() {
        let net = chest_clinic(3);
        assert!(!net.is_singly_connected());
        let cut = net.cut_outgoing_arcs(&[node(2)]);
        assert!(cut.is_singly_connected());
        assert!(cut.validate().is_ok());
        assert_eq!(net.cut_outgoing_arcs(&[]).arcs(), net.arcs());
        let all: Vec<VarId> = net.ids().collect();
        assert!(net.cut_outgoing_arcs(&all).arcs().is_empty());
        // the original is untouched
        assert_eq!(net.arcs().len(), 8);
    }

    #[test]
    fn findings_accumulate() {
        let net = chest_clinic(3);
        let net = net.observe(node(1), "s0").unwrap();
        assert_eq!(net.evidence()[0].table.values(), &[1.0, 0.0]);
        let lik = Table::new(net.scope_of(&[node(1)]), vec![0.3, 0.7]).unwrap();
        let net = net.add_finding(LikelihoodFinding::new(lik.clone()).unwrap()).unwrap();
        assert_eq!(net.evidence().len(), 2);
        assert_eq!(net.evidence()[1].table, lik);
        assert!(net.observe(node(1), "nope").is_err());
        assert!(net.observe(VarId(99), "s0").is_err());
    }

    #[test]
    fn declared_layout_round_trips() {
        let (a, b, c) = (VarId(0), VarId(1), VarId(2));
        // parents declared as (c, a): c slowest, then a, child b fastest
        let values: Vec<f64> = (0..12).map(|x| x as f64).collect();
        let cpt = Cpt::from_declared((b, 2), &[(c, 3), (a, 2)], &values).unwrap();
        assert_eq!(cpt.declared_values(), values);
        // ascending scope (a, b, c): cell (a=1, b=0, c=2) is declared index c*4 + a*2 + b
        assert_eq!(cpt.table.get(&[1, 0, 2]), 10.0);
    }
}
