//! Brute-force ground truth by enumerating the full joint distribution.

use crate::error::{Error, Result};
use crate::network::BeliefNetwork;
use crate::tables::{Scope, Table, VarId};

pub const DEFAULT_CAP: usize = 1 << 24;

/// `Pr{X_N, e}`: product of every CPT and finding, cell by cell.
pub fn joint(net: &BeliefNetwork) -> Result<Table> {
    joint_with_cap(net, DEFAULT_CAP)
}

pub fn joint_with_cap(net: &BeliefNetwork, cap: usize) -> Result<Table> {
    let cells: u128 = net.cards().iter().map(|&c| c as u128).product();
    if cells > cap as u128 {
        return Err(Error::StateSpaceTooLarge { cells, cap });
    }
    let all: Vec<VarId> = net.ids().collect();
    let scope = net.scope_of(&all);
    let factors: Vec<&Table> =
        net.cpts().iter().map(|c| &c.table).chain(net.evidence().iter().map(|f| &f.table)).collect();
    // per factor: (variable index into the full assignment, stride)
    let layouts: Vec<Vec<(usize, usize)>> = factors
        .iter()
        .map(|t| t.scope().vars().iter().map(|v| v.0).zip(t.scope().strides()).collect())
        .collect();
    let n = cells as usize;
    let cards = scope.cards().to_vec();
    let mut states = vec![0usize; all.len()];
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = 1.0;
        for (t, layout) in factors.iter().zip(&layouts) {
            let idx: usize = layout.iter().map(|&(v, s)| states[v] * s).sum();
            p *= t.values()[idx];
        }
        values.push(p);
        for k in (0..states.len()).rev() {
            states[k] += 1;
            if states[k] < cards[k] {
                break;
            }
            states[k] = 0;
        }
    }
    Ok(Table::new(scope, values)?)
}

/// `Pr{X_J, e}` by summing the enumerated joint.
pub fn oracle_marginal(net: &BeliefNetwork, query: &[VarId]) -> Result<Table> {
    let joint = joint(net)?;
    let mut keep: Vec<VarId> = query.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let out_scope = net.scope_of(&keep);
    let out_strides = out_scope.strides();
    let pos: Vec<Option<usize>> = (0..net.len()).map(|v| out_scope.position(VarId(v))).collect();
    let mut values = vec![0.0; out_scope.size()];
    for (i, x) in joint.values().iter().enumerate() {
        let states = joint.scope().unravel(i);
        let idx: usize = states
            .iter()
            .enumerate()
            .filter_map(|(v, s)| pos[v].map(|p| s * out_strides[p]))
            .sum();
        values[idx] += x;
    }
    Ok(Table::new(out_scope, values)?)
}

/// Normalized single-variable posterior from the oracle.
pub fn oracle_posterior(net: &BeliefNetwork, v: VarId) -> Result<Vec<f64>> {
    let m = oracle_marginal(net, &[v])?;
    let (n, _) = m.normalize().map_err(|_| Error::ImpossibleEvidence)?;
    Ok(n.values().to_vec())
}

pub fn oracle_evidence(net: &BeliefNetwork) -> Result<f64> {
    Ok(joint(net)?.sum_all())
}

/// Second evaluation route: eliminate one variable at a time in id order.
pub fn elimination_marginal(net: &BeliefNetwork, query: &[VarId]) -> Result<Table> {
    let mut factors: Vec<Table> =
        net.cpts().iter().map(|c| c.table.clone()).chain(net.evidence().iter().map(|f| f.table.clone())).collect();
    for v in net.ids().filter(|v| !query.contains(v)) {
        let (with, without): (Vec<Table>, Vec<Table>) = factors.into_iter().partition(|t| t.scope().contains(v));
        factors = without;
        let mut prod = Table::scalar(1.0);
        for t in &with {
            prod = prod.multiply(t)?;
        }
        let keep: Vec<VarId> = prod.scope().vars().iter().copied().filter(|u| *u != v).collect();
        factors.push(prod.marginalize(&keep));
    }
    let mut prod = Table::ones(Scope::empty());
    for t in &factors {
        prod = prod.multiply(t)?;
    }
    prod.expand_to(&net.scope_of(query)).map_err(Into::into)
}
