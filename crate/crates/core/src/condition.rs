//! Global conditioning.
//!
//! A set of variables `K` is provisionally observed. Each instantiation
//! `x_K` yields a cluster tree with the master topology but without `K`;
//! those trees are independent problems, solved in parallel or one at a time,
//! and their posteriors are summed back onto the master scopes (or onto a
//! single query scope when memory is the constraint).
//!
//! Separation sets contained in `K` become empty after instantiation, which
//! splits a tree into islands. Each island is propagated on its own; its
//! total mass is the island scalar, and the product of the other islands'
//! scalars is the factor applied when its tables are accumulated.

#[cfg(feature = "parallel")]
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::network::BeliefNetwork;
use crate::propagate::{EngineState, Factor, FactorSource, Form};
use crate::tables::{Scope, Table, TableError, VarId};
use crate::treebuild::{cutset_cluster_tree, ensure_assigned, verify_cutset, ClusterTree};

/// One instantiation: `(variable, state)` pairs in ascending id order.
pub type Instantiation = Vec<(VarId, usize)>;

fn sorted_set(k: &[VarId]) -> Vec<VarId> {
    let mut k = k.to_vec();
    k.sort_unstable();
    k.dedup();
    k
}

pub fn instantiation_count(cards: &[usize], k: &[VarId]) -> u128 {
    sorted_set(k).iter().map(|v| cards[v.0] as u128).product()
}

/// All instantiations of `K`, row-major with the largest id varying fastest.
pub fn instantiations(cards: &[usize], k: &[VarId]) -> Vec<Instantiation> {
    let k = sorted_set(k);
    let n: usize = k.iter().map(|v| cards[v.0]).product();
    let mut out = Vec::with_capacity(n);
    let mut states = vec![0usize; k.len()];
    for _ in 0..n {
        out.push(k.iter().copied().zip(states.iter().copied()).collect());
        for p in (0..k.len()).rev() {
            states[p] += 1;
            if states[p] < cards[k[p].0] {
                break;
            }
            states[p] = 0;
        }
    }
    out
}

fn strip(tree: &ClusterTree, k: &[VarId]) -> ClusterTree {
    let clusters = tree.clusters().iter().map(|c| c.iter().copied().filter(|v| !k.contains(v)).collect()).collect();
    let stripped = ClusterTree::new(tree.cards().to_vec(), clusters, tree.arcs().to_vec());
    match tree.assignment() {
        Some(a) => stripped.with_assignment(a.clone()),
        None => stripped,
    }
}

fn slice_opt(t: &Option<Table>, x: &[(VarId, usize)]) -> Result<Option<Table>> {
    Ok(match t {
        Some(t) => Some(t.slice(x)?),
        None => None,
    })
}

/// Slices every table of an initialized master state at `x`. In the factored
/// form cached messages whose source side never saw `K` stay valid; in the
/// joint form the state is rebuilt from the sliced potentials.
pub fn instantiate_tree(master: &EngineState, x: &[(VarId, usize)]) -> Result<EngineState> {
    if x.is_empty() {
        return Ok(master.clone());
    }
    let k: Vec<VarId> = x.iter().map(|p| p.0).collect();
    let tree = strip(master.tree(), &k);
    let touched: Vec<usize> =
        (0..tree.len()).filter(|&i| master.tree().cluster(i).iter().any(|v| k.contains(v))).collect();
    let factors: Vec<Vec<Factor>> = master
        .factors
        .iter()
        .map(|fs| {
            fs.iter()
                .map(|f| Ok(Factor { table: f.table.slice(x)?, source: f.source }))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    if master.form() == Form::Joint {
        let mut state = EngineState::from_factors(tree, factors, Form::Joint)?;
        for &i in &touched {
            state.changed[i] = true;
        }
        return Ok(state);
    }
    let mut state = master.clone();
    state.scopes = (0..tree.len())
        .map(|i| Scope::new(tree.cluster(i).iter().map(|v| (*v, tree.cards()[v.0]))).expect("sorted"))
        .collect();
    state.tree = tree;
    state.factors = factors;
    state.psi = master.psi.iter().map(|t| t.slice(x)).collect::<Result<_, TableError>>()?;
    state.messages = master
        .messages
        .iter()
        .map(|[a, b]| Ok([slice_opt(a, x)?, slice_opt(b, x)?]))
        .collect::<Result<_>>()?;
    state.posterior = master.posterior.iter().map(|p| slice_opt(p, x)).collect::<Result<_>>()?;
    state.pending.clear();
    state.rebuild_topology();
    for &i in &touched {
        state.mark_changed(i);
    }
    Ok(state)
}

/// Instantiated state built straight from the network's CPTs and findings,
/// sliced at `x`, using the master tree's assignment. No master tables are
/// ever formed.
pub fn instantiate_from_network(
    net: &BeliefNetwork,
    master: &ClusterTree,
    x: &[(VarId, usize)],
    form: Form,
) -> Result<EngineState> {
    let k: Vec<VarId> = x.iter().map(|p| p.0).collect();
    let master = &ensure_assigned(net, master)?;
    let asg = master.assignment().expect("assigned");
    let mut factors = vec![Vec::new(); master.len()];
    for cpt in net.cpts() {
        let table = cpt.table.slice(x)?;
        factors[asg.cpts[cpt.child.0]].push(Factor { table, source: FactorSource::Cpt(cpt.child) });
    }
    for (id, f) in net.evidence().iter().enumerate() {
        let table = f.table.slice(x)?;
        factors[asg.findings[id]].push(Factor { table, source: FactorSource::Finding(id) });
    }
    EngineState::from_factors(strip(master, &k), factors, form)
}

/// Connected components under non-empty sepsets, plus the empty-sepset arcs
/// joining them (as island index pairs).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Islands {
    pub members: Vec<Vec<usize>>,
    pub arcs: Vec<(usize, usize)>,
}

impl Islands {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn find_islands(state: &EngineState) -> Islands {
    let mut members = vec![Vec::new(); state.component_count()];
    for i in 0..state.tree().len() {
        members[state.component_of(i)].push(i);
    }
    let arcs = state
        .tree()
        .arcs()
        .iter()
        .enumerate()
        .filter(|(k, _)| state.tree().sepset(*k).is_empty())
        .map(|(_, &(a, b))| (state.component_of(a), state.component_of(b)))
        .collect();
    Islands { members, arcs }
}

/// Collects at each island root and returns the island masses.
pub fn island_scalars(state: &mut EngineState) -> Result<Vec<f64>> {
    (0..state.component_count()).map(|c| state.component_mass(c)).collect()
}

/// For each island, the product of all other islands' scalars; computed
/// without division so that zero scalars are handled exactly.
pub fn island_factors(scalars: &[f64]) -> Vec<f64> {
    let n = scalars.len();
    let mut out = vec![1.0; n];
    let mut acc = 1.0;
    for i in 0..n {
        out[i] = acc;
        acc *= scalars[i];
    }
    acc = 1.0;
    for i in (0..n).rev() {
        out[i] *= acc;
        acc *= scalars[i];
    }
    out
}

pub fn zero_island_skip(scalars: &[f64]) -> bool {
    scalars.iter().any(|s| *s == 0.0)
}

/// Accumulated master-scope cluster and sepset tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Accumulators {
    pub clusters: Vec<Table>,
    pub sepsets: Vec<Table>,
}

impl Accumulators {
    pub fn zeros(master: &ClusterTree) -> Self {
        let scope = |vars: &[VarId]| Scope::new(vars.iter().map(|v| (*v, master.cards()[v.0]))).expect("sorted");
        let clusters = master.clusters().iter().map(|c| Table::filled(scope(c), 0.0)).collect();
        let sepsets = (0..master.arcs().len()).map(|k| Table::filled(scope(&master.sepset(k)), 0.0)).collect();
        Accumulators { clusters, sepsets }
    }

    #[cfg(feature = "parallel")]
    fn merge(mut self, other: &Accumulators) -> Self {
        for (a, b) in self.clusters.iter_mut().zip(&other.clusters) {
            a.scatter_add(&[], b, 1.0).expect("same scope");
        }
        for (a, b) in self.sepsets.iter_mut().zip(&other.sepsets) {
            a.scatter_add(&[], b, 1.0).expect("same scope");
        }
        self
    }

    pub fn payload_bytes(&self) -> usize {
        self.clusters.iter().chain(&self.sepsets).map(Table::payload_bytes).sum()
    }
}

/// Adds one propagated instantiation into the accumulators. Cluster and
/// sepset tables are both scaled by their island's factor.
pub fn recombine(acc: &mut Accumulators, x: &[(VarId, usize)], state: &mut EngineState, factors: &[f64]) -> Result<()> {
    for i in 0..state.tree().len() {
        let p = state.local_posterior(i)?;
        let f = factors[state.component_of(i)];
        acc.clusters[i].scatter_add(x, &p, f)?;
    }
    for k in 0..state.tree().arcs().len() {
        let (a, _) = state.tree().arcs()[k];
        let p = state.local_posterior(a)?;
        let sep: Vec<VarId> = state.tree().sepset(k);
        let f = factors[state.component_of(a)];
        acc.sepsets[k].scatter_add(x, &p.marginalize(&sep), f)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Rayon pool with the given number of workers (0: rayon's default).
    /// Falls back to sequential when built without the `parallel` feature.
    Workers(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Merge {
    /// Per-worker partial sums reduced at the end.
    Partials,
    /// One shared accumulator behind a mutex.
    Locked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GlobalOptions {
    pub form: Form,
    pub parallelism: Parallelism,
    pub merge: Merge,
    pub skip_zero_islands: bool,
}

impl Default for GlobalOptions {
    fn default() -> Self {
        GlobalOptions { form: Form::Factored, parallelism: Parallelism::Sequential, merge: Merge::Partials, skip_zero_islands: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub instantiations: usize,
    pub skipped: usize,
    /// Island count per instantiation, in enumeration order.
    pub islands: Vec<usize>,
    /// Serial mode: largest live table payload (one instantiated state plus
    /// the accumulator).
    pub peak_bytes: usize,
}

/// Master-tree posteriors accumulated over all instantiations.
#[derive(Clone, Debug)]
pub struct GlobalResult {
    pub tree: ClusterTree,
    pub acc: Accumulators,
    pub stats: RunStats,
}

fn normalized(t: Table) -> Result<Vec<f64>> {
    match t.normalize() {
        Ok((n, _)) => Ok(n.values().to_vec()),
        Err(TableError::ZeroSum) => Err(Error::ImpossibleEvidence),
        Err(e) => Err(e.into()),
    }
}

impl GlobalResult {
    pub fn cluster_posterior(&self, i: usize) -> &Table {
        &self.acc.clusters[i]
    }

    pub fn prob_evidence(&self) -> f64 {
        let i = (0..self.tree.len()).min_by_key(|&i| (self.tree.weight(i), i)).expect("non-empty tree");
        self.acc.clusters[i].sum_all()
    }

    pub fn query_marginal(&self, query: &[VarId]) -> Result<Table> {
        let i = self.tree.smallest_containing(query).ok_or_else(|| Error::QueryNotCoverable(query.to_vec()))?;
        Ok(self.acc.clusters[i].marginalize(query))
    }

    pub fn marginal(&self, v: VarId) -> Result<Vec<f64>> {
        normalized(self.query_marginal(&[v])?)
    }
}

struct Solved {
    islands: usize,
    skipped: bool,
}

/// A propagated instantiation ready to be accumulated, with its island factors.
struct Prepared {
    state: EngineState,
    factors: Vec<f64>,
}

fn prepare(
    net: &BeliefNetwork,
    master: &ClusterTree,
    x: &[(VarId, usize)],
    opts: &GlobalOptions,
) -> Result<(Solved, Option<Prepared>)> {
    let mut state = instantiate_from_network(net, master, x, opts.form)?;
    let scalars = island_scalars(&mut state)?;
    let islands = scalars.len();
    if opts.skip_zero_islands && zero_island_skip(&scalars) {
        return Ok((Solved { islands, skipped: true }, None));
    }
    state.propagate()?;
    Ok((Solved { islands, skipped: false }, Some(Prepared { state, factors: island_factors(&scalars) })))
}

fn solve_one(
    net: &BeliefNetwork,
    master: &ClusterTree,
    x: &[(VarId, usize)],
    opts: &GlobalOptions,
    acc: &mut Accumulators,
) -> Result<Solved> {
    let (solved, prepared) = prepare(net, master, x, opts)?;
    if let Some(mut p) = prepared {
        recombine(acc, x, &mut p.state, &p.factors)?;
    }
    Ok(solved)
}

/// Conditions on `K` and fills the master tree's cluster and sepset tables.
pub fn run_global(net: &BeliefNetwork, master: &ClusterTree, k: &[VarId], opts: &GlobalOptions) -> Result<GlobalResult> {
    let master = ensure_assigned(net, master)?;
    let xs = instantiations(net.cards().as_slice(), k);
    let (acc, solved) = match opts.parallelism {
        Parallelism::Sequential => run_sequential(net, &master, &xs, opts)?,
        Parallelism::Workers(w) => run_workers(net, &master, &xs, opts, w)?,
    };
    let stats = RunStats {
        instantiations: xs.len(),
        skipped: solved.iter().filter(|s| s.skipped).count(),
        islands: solved.iter().map(|s| s.islands).collect(),
        peak_bytes: 0,
    };
    Ok(GlobalResult { tree: master, acc, stats })
}

fn run_sequential(
    net: &BeliefNetwork,
    master: &ClusterTree,
    xs: &[Instantiation],
    opts: &GlobalOptions,
) -> Result<(Accumulators, Vec<Solved>)> {
    let mut acc = Accumulators::zeros(master);
    let solved = xs.iter().map(|x| solve_one(net, master, x, opts, &mut acc)).collect::<Result<_>>()?;
    Ok((acc, solved))
}

#[cfg(not(feature = "parallel"))]
fn run_workers(
    net: &BeliefNetwork,
    master: &ClusterTree,
    xs: &[Instantiation],
    opts: &GlobalOptions,
    _workers: usize,
) -> Result<(Accumulators, Vec<Solved>)> {
    run_sequential(net, master, xs, opts)
}

#[cfg(feature = "parallel")]
fn run_workers(
    net: &BeliefNetwork,
    master: &ClusterTree,
    xs: &[Instantiation],
    opts: &GlobalOptions,
    workers: usize,
) -> Result<(Accumulators, Vec<Solved>)> {
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidNetwork(format!("thread pool: {e}")))?;
    pool.install(|| match opts.merge {
        Merge::Partials => {
            let empty = || (Accumulators::zeros(master), Vec::new());
            let (total, mut solved) = xs
                .par_iter()
                .enumerate()
                .try_fold(empty, |(mut acc, mut out), (i, x)| {
                    out.push((i, solve_one(net, master, x, opts, &mut acc)?));
                    Ok::<_, Error>((acc, out))
                })
                .try_reduce(empty, |(a, mut sa), (b, sb)| {
                    sa.extend(sb);
                    Ok((a.merge(&b), sa))
                })?;
            solved.sort_by_key(|(i, _)| *i);
            Ok((total, solved.into_iter().map(|(_, s)| s).collect()))
        }
        Merge::Locked => {
            let shared = Mutex::new(Accumulators::zeros(master));
            let solved: Vec<Solved> = xs
                .par_iter()
                .map(|x| {
                    let (s, prepared) = prepare(net, master, x, opts)?;
                    if let Some(mut p) = prepared {
                        let mut acc = shared.lock().expect("accumulator lock");
                        recombine(&mut acc, x, &mut p.state, &p.factors)?;
                    }
                    Ok(s)
                })
                .collect::<Result<_>>()?;
            Ok((shared.into_inner().expect("accumulator lock"), solved))
        }
    })
}

/// Serial, memory-bounded conditioning: accumulates only `Pr{X_J, ε}` and
/// keeps at most one instantiated state alive.
pub fn run_serial(
    net: &BeliefNetwork,
    master: &ClusterTree,
    k: &[VarId],
    query: &[VarId],
    opts: &GlobalOptions,
) -> Result<(Table, RunStats)> {
    let k = sorted_set(k);
    let master = ensure_assigned(net, master)?;
    let inner: Vec<VarId> = query.iter().copied().filter(|v| !k.contains(v)).collect();
    if strip(&master, &k).smallest_containing(&inner).is_none() {
        return Err(Error::QueryNotCoverable(query.to_vec()));
    }
    let mut acc = Table::filled(net.scope_of(query), 0.0);
    let mut stats = RunStats::default();
    for x in instantiations(&net.cards(), &k) {
        stats.instantiations += 1;
        let mut state = instantiate_from_network(net, &master, &x, opts.form)?;
        let scalars = island_scalars(&mut state)?;
        stats.islands.push(scalars.len());
        if opts.skip_zero_islands && zero_island_skip(&scalars) {
            stats.skipped += 1;
            stats.peak_bytes = stats.peak_bytes.max(state.table_bytes() + acc.payload_bytes());
            continue;
        }
        let q = state.query_marginal(&inner)?;
        stats.peak_bytes = stats.peak_bytes.max(state.table_bytes() + acc.payload_bytes());
        acc.scatter_add(&x, &q, 1.0)?;
    }
    Ok((acc, stats))
}

/// Loop-cutset conditioning: the cutset tree (polytree-shaped once `K` is
/// instantiated) run through global conditioning.
pub fn loop_cutset_infer(net: &BeliefNetwork, k: &[VarId], opts: &GlobalOptions) -> Result<GlobalResult> {
    if !verify_cutset(net, k) {
        return Err(Error::NotLoopCutset(k.to_vec()));
    }
    let tree = cutset_cluster_tree(net, k)?;
    run_global(net, &tree, k, opts)
}

/// Greedy loop cutset: repeatedly cut the variable whose outgoing arcs
/// remove the most independent cycles from the skeleton (ties: lowest id).
pub fn greedy_loop_cutset(net: &BeliefNetwork) -> Vec<VarId> {
    let mut k: Vec<VarId> = Vec::new();
    loop {
        let current = net.cut_outgoing_arcs(&k);
        if current.is_singly_connected() {
            k.sort_unstable();
            return k;
        }
        let rank = current.skeleton().cycle_rank();
        let best = net
            .ids()
            .filter(|v| !k.contains(v) && !current.children(*v).is_empty())
            .map(|v| {
                let mut trial = k.clone();
                trial.push(v);
                (rank - net.cut_outgoing_arcs(&trial).skeleton().cycle_rank(), v)
            })
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .expect("a loop implies some arc remains");
        k.push(best.1);
    }
}
