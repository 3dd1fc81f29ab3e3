//! Seeded networks and evidence for tests, benchmarks and the CLI.
//!
//! The chest-clinic fixture has eight binary nodes numbered 1..=8 (ids 0..8)
//! with arcs 1→4, 2→3, 2→5, 3→6, 4→6, 6→7, 5→8, 6→8. CPT values are drawn
//! from a seeded generator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::network::{BeliefNetwork, LikelihoodFinding, NetworkBuilder};
use crate::tables::{Table, VarId};

pub const CHEST_CLINIC_ARCS: [(usize, usize); 8] =
    [(1, 4), (2, 3), (2, 5), (3, 6), (4, 6), (6, 7), (5, 8), (6, 8)];

/// Id of chest-clinic node `k` (1-based).
pub fn node(k: usize) -> VarId {
    VarId(k - 1)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn chest_clinic(seed: u64) -> BeliefNetwork {
    from_arcs("chest-clinic", 8, &CHEST_CLINIC_ARCS, &mut rng(seed))
}

/// Binary network named `1..=n` with the given 1-based arcs and random CPTs.
/// Parents are declared in the order their arcs are listed.
pub fn from_arcs(name: &str, n: usize, arcs: &[(usize, usize)], rng: &mut impl Rng) -> BeliefNetwork {
    let cards = vec![2; n];
    let parents: Vec<Vec<usize>> = (1..=n)
        .map(|c| arcs.iter().filter(|a| a.1 == c).map(|a| a.0 - 1).collect())
        .collect();
    build(name, &cards, &parents, rng)
}

fn build(name: &str, cards: &[usize], parents: &[Vec<usize>], rng: &mut impl Rng) -> BeliefNetwork {
    let mut b = NetworkBuilder::new(name);
    let ids: Vec<VarId> = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let states: Vec<String> = (0..c).map(|s| format!("s{s}")).collect();
            let refs: Vec<&str> = states.iter().map(String::as_str).collect();
            b.variable(&(i + 1).to_string(), &refs)
        })
        .collect();
    for (child, ps) in parents.iter().enumerate() {
        let rows: usize = ps.iter().map(|&p| cards[p]).product();
        let mut values = Vec::with_capacity(rows * cards[child]);
        for _ in 0..rows {
            values.extend(random_distribution(rng, cards[child]));
        }
        let pids: Vec<VarId> = ps.iter().map(|&p| ids[p]).collect();
        b.cpt(ids[child], &pids, &values).expect("consistent layout");
    }
    b.build().expect("complete network")
}

/// Strictly positive probability vector.
pub fn random_distribution(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

/// Random DAG over `n` binary nodes; each node draws up to `max_parents`
/// parents among earlier nodes.
pub fn random_network(rng: &mut impl Rng, n: usize, max_parents: usize) -> BeliefNetwork {
    random_network_with_cards(rng, &vec![2; n], max_parents)
}

pub fn random_network_with_cards(rng: &mut impl Rng, cards: &[usize], max_parents: usize) -> BeliefNetwork {
    let n = cards.len();
    let mut parents = Vec::with_capacity(n);
    for i in 0..n {
        let mut pool: Vec<usize> = (0..i).collect();
        pool.shuffle(rng);
        let k = rng.gen_range(0..=max_parents.min(i));
        let mut ps: Vec<usize> = pool.into_iter().take(k).collect();
        ps.sort_unstable();
        parents.push(ps);
    }
    build("random", cards, &parents, rng)
}

/// Random polytree: each node after the first links to one earlier node, in
/// a random direction.
pub fn random_polytree(rng: &mut impl Rng, n: usize) -> BeliefNetwork {
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        let j = rng.gen_range(0..i);
        if rng.gen_bool(0.5) {
            parents[i].push(j);
        } else {
            parents[j].push(i);
        }
    }
    // the skeleton is a tree, so no directed cycle can form
    for ps in &mut parents {
        ps.sort_unstable();
    }
    build("polytree", &vec![2; n], &parents, rng)
}

/// Random findings: a mix of exact observations and positive likelihoods on
/// single variables, occasionally a two-variable likelihood on a family.
pub fn random_evidence(rng: &mut impl Rng, net: &BeliefNetwork, count: usize) -> Vec<LikelihoodFinding> {
    let mut out = Vec::with_capacity(count);
    let mut observed = Vec::new();
    for _ in 0..count {
        let v = VarId(rng.gen_range(0..net.len()));
        let card = net.card(v);
        let mut kind = rng.gen_range(0..4);
        if kind == 0 && observed.contains(&v) {
            kind = 1;
        }
        let table = if kind == 0 {
            observed.push(v);
            Table::indicator(v, card, rng.gen_range(0..card)).unwrap()
        } else if kind == 3 && !net.parents(v).is_empty() {
            let p = net.parents(v)[0];
            let scope = net.scope_of(&[v, p]);
            let values = (0..scope.size()).map(|_| rng.gen_range(0.05..1.0)).collect();
            Table::new(scope, values).unwrap()
        } else {
            let values = (0..card).map(|_| rng.gen_range(0.05..1.0)).collect();
            Table::new(net.scope_of(&[v]), values).unwrap()
        };
        out.push(LikelihoodFinding::new(table).unwrap());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid_and_seeded() {
        assert_eq!(chest_clinic(5), chest_clinic(5));
        assert_ne!(chest_clinic(5), chest_clinic(6));
        let mut r = rng(11);
        for _ in 0..20 {
            assert!(random_network(&mut r, 10, 3).validate().is_ok());
            let p = random_polytree(&mut r, 9);
            assert!(p.validate().is_ok());
            assert!(p.is_singly_connected());
            assert_eq!(p.arcs().len(), 8);
        }
    }
}
