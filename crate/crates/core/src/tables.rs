//! Dense potential tables.
//!
//! Every numeric object the engine manipulates (cluster potentials, cluster
//! messages, posteriors, separator tables, update ratios) is a [`Table`]: a
//! dense vector of non-negative reals indexed row-major over an ascending
//! [`Scope`], with the largest variable id varying fastest.

use std::fmt;

use thiserror::Error;

/// Dense identifier of a variable, in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("variable {var} has cardinality {left} in one table and {right} in another")]
    CardinalityConflict { var: VarId, left: usize, right: usize },
    #[error("variable {0} appears twice in a scope")]
    DuplicateVariable(VarId),
    #[error("variable {0} has zero cardinality")]
    ZeroCardinality(VarId),
    #[error("table has {got} values but its scope requires {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("negative or non-finite entry {0}")]
    InvalidEntry(f64),
    #[error("denominator scope is not contained in numerator scope")]
    ScopeNotSubset,
    #[error("positive value divided by zero at cell {0}")]
    DivideByZero(usize),
    #[error("state {state} out of range for variable {var} with cardinality {card}")]
    StateOutOfRange { var: VarId, state: usize, card: usize },
    #[error("cannot normalize a table whose entries sum to zero")]
    ZeroSum,
}

/// Ordered set of variables with their cardinalities.
#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct Scope {
    vars: Vec<VarId>,
    cards: Vec<usize>,
}

impl Scope {
    pub fn empty() -> Self {
        Scope::default()
    }

    /// Builds a scope from `(variable, cardinality)` pairs in any order.
    pub fn new(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Result<Self, TableError> {
        let mut pairs: Vec<(VarId, usize)> = pairs.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(TableError::DuplicateVariable(w[0].0));
            }
        }
        if let Some(&(v, _)) = pairs.iter().find(|p| p.1 == 0) {
            return Err(TableError::ZeroCardinality(v));
        }
        Ok(Scope {
            vars: pairs.iter().map(|p| p.0).collect(),
            cards: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Number of cells of a table over this scope.
    pub fn size(&self) -> usize {
        self.cards.iter().product()
    }

    pub fn position(&self, v: VarId) -> Option<usize> {
        self.vars.binary_search(&v).ok()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.position(v).is_some()
    }

    pub fn card_of(&self, v: VarId) -> Option<usize> {
        self.position(v).map(|p| self.cards[p])
    }

    pub fn is_subset_of(&self, other: &Scope) -> bool {
        self.vars.iter().all(|v| other.contains(*v))
    }

    pub fn union(&self, other: &Scope) -> Result<Scope, TableError> {
        let mut vars = Vec::with_capacity(self.len() + other.len());
        let mut cards = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_left = j >= other.len() || (i < self.len() && self.vars[i] < other.vars[j]);
            let take_right = i >= self.len() || (j < other.len() && other.vars[j] < self.vars[i]);
            if take_left {
                vars.push(self.vars[i]);
                cards.push(self.cards[i]);
                i += 1;
            } else if take_right {
                vars.push(other.vars[j]);
                cards.push(other.cards[j]);
                j += 1;
            } else {
                if self.cards[i] != other.cards[j] {
                    return Err(TableError::CardinalityConflict {
                        var: self.vars[i],
                        left: self.cards[i],
                        right: other.cards[j],
                    });
                }
                vars.push(self.vars[i]);
                cards.push(self.cards[i]);
                i += 1;
                j += 1;
            }
        }
        Ok(Scope { vars, cards })
    }

    /// Keeps only the variables satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(VarId) -> bool) -> Scope {
        let mut out = Scope::empty();
        for (v, c) in self.vars.iter().zip(&self.cards) {
            if keep(*v) {
                out.vars.push(*v);
                out.cards.push(*c);
            }
        }
        out
    }

    pub fn intersect(&self, other: &Scope) -> Scope {
        self.filter(|v| other.contains(v))
    }

    /// Row-major strides of this scope's own variables.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![0; self.len()];
        let mut acc = 1;
        for k in (0..self.len()).rev() {
            strides[k] = acc;
            acc *= self.cards[k];
        }
        strides
    }

    /// For each variable of `self`, its stride inside a table over `inner`
    /// (zero when `inner` does not contain it). Walking `self` with these
    /// strides tracks the matching offset into `inner`.
    fn strides_in(&self, inner: &Scope) -> Vec<usize> {
        let own = inner.strides();
        self.vars
            .iter()
            .map(|v| inner.position(*v).map_or(0, |p| own[p]))
            .collect()
    }

    /// Decodes a linear index into per-variable states.
    pub fn unravel(&self, mut index: usize) -> Vec<usize> {
        let mut states = vec![0; self.len()];
        for k in (0..self.len()).rev() {
            states[k] = index % self.cards[k];
            index /= self.cards[k];
        }
        states
    }
}

/// Visits every cell of a table over `cards` in row-major order, tracking the
/// matching linear offsets into `N` other tables described by their strides.
fn walk<const N: usize>(cards: &[usize], strides: [&[usize]; N], mut f: impl FnMut([usize; N])) {
    let total: usize = cards.iter().product();
    let mut counters = vec![0usize; cards.len()];
    let mut offsets = [0usize; N];
    for _ in 0..total {
        f(offsets);
        for k in (0..cards.len()).rev() {
            counters[k] += 1;
            for (off, s) in offsets.iter_mut().zip(strides.iter()) {
                *off += s[k];
            }
            if counters[k] < cards[k] {
                break;
            }
            for (off, s) in offsets.iter_mut().zip(strides.iter()) {
                *off -= s[k] * cards[k];
            }
            counters[k] = 0;
        }
    }
}

/// Dense non-negative table over a [`Scope`].
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    scope: Scope,
    values: Vec<f64>,
}

impl Table {
    pub fn new(scope: Scope, values: Vec<f64>) -> Result<Self, TableError> {
        if values.len() != scope.size() {
            return Err(TableError::LengthMismatch { expected: scope.size(), got: values.len() });
        }
        if let Some(&bad) = values.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(TableError::InvalidEntry(bad));
        }
        Ok(Table { scope, values })
    }

    pub fn scalar(value: f64) -> Self {
        Table { scope: Scope::empty(), values: vec![value] }
    }

    pub fn filled(scope: Scope, value: f64) -> Self {
        let n = scope.size();
        Table { scope, values: vec![value; n] }
    }

    pub fn ones(scope: Scope) -> Self {
        Table::filled(scope, 1.0)
    }

    /// Indicator vector of `state` over a single variable.
    pub fn indicator(var: VarId, card: usize, state: usize) -> Result<Self, TableError> {
        if state >= card {
            return Err(TableError::StateOutOfRange { var, state, card });
        }
        let mut values = vec![0.0; card];
        values[state] = 1.0;
        Table::new(Scope::new([(var, card)])?, values)
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Bytes held by the value payload; used for memory accounting.
    pub fn payload_bytes(&self) -> usize {
        self.values.len() * std::mem::size_of::<f64>()
    }

    /// Value at a full assignment of this table's scope, given in scope order.
    pub fn get(&self, states: &[usize]) -> f64 {
        let idx = states
            .iter()
            .zip(self.scope.strides())
            .map(|(s, st)| s * st)
            .sum::<usize>();
        self.values[idx]
    }

    pub fn multiply(&self, other: &Table) -> Result<Table, TableError> {
        if other.scope.is_subset_of(&self.scope) {
            let mut out = self.clone();
            out.multiply_assign(other)?;
            return Ok(out);
        }
        let scope = self.scope.union(&other.scope)?;
        let sa = scope.strides_in(&self.scope);
        let sb = scope.strides_in(&other.scope);
        let mut values = Vec::with_capacity(scope.size());
        walk(scope.cards(), [&sa, &sb], |[ia, ib]| {
            values.push(self.values[ia] * other.values[ib]);
        });
        Ok(Table { scope, values })
    }

    /// In-place product with a table whose scope is contained in ours.
    pub fn multiply_assign(&mut self, other: &Table) -> Result<(), TableError> {
        if !other.scope.is_subset_of(&self.scope) {
            *self = self.multiply(other)?;
            return Ok(());
        }
        self.check_cards(other)?;
        let sb = self.scope.strides_in(&other.scope);
        let values = &mut self.values;
        let mut i = 0;
        walk(self.scope.cards(), [&sb], |[ib]| {
            values[i] *= other.values[ib];
            i += 1;
        });
        Ok(())
    }

    fn check_cards(&self, other: &Table) -> Result<(), TableError> {
        for (v, c) in other.scope.vars.iter().zip(&other.scope.cards) {
            if let Some(mine) = self.scope.card_of(*v) {
                if mine != *c {
                    return Err(TableError::CardinalityConflict { var: *v, left: mine, right: *c });
                }
            }
        }
        Ok(())
    }

    /// Sums out every variable not in `keep`. Variables of `keep` absent from
    /// the scope are ignored.
    pub fn marginalize(&self, keep: &[VarId]) -> Table {
        let scope = self.scope.filter(|v| keep.contains(&v));
        if scope.len() == self.scope.len() {
            return self.clone();
        }
        let into = self.scope.strides_in(&scope);
        let mut values = vec![0.0; scope.size()];
        let mut i = 0;
        walk(self.scope.cards(), [&into], |[r]| {
            values[r] += self.values[i];
            i += 1;
        });
        Table { scope, values }
    }

    /// Marginalizes onto another scope's variables.
    pub fn marginalize_to(&self, scope: &Scope) -> Table {
        self.marginalize(scope.vars())
    }

    /// Cell-wise `self / den` where `den`'s scope is contained in ours.
    /// `0 / 0` yields `0`; a positive value over zero is an error.
    pub fn divide(&self, den: &Table) -> Result<Table, TableError> {
        if !den.scope.is_subset_of(&self.scope) {
            return Err(TableError::ScopeNotSubset);
        }
        self.check_cards(den)?;
        let sd = self.scope.strides_in(&den.scope);
        let mut values = Vec::with_capacity(self.values.len());
        let mut err = None;
        let mut i = 0;
        walk(self.scope.cards(), [&sd], |[id]| {
            let (n, d) = (self.values[i], den.values[id]);
            let q = if d > 0.0 {
                n / d
            } else if n == 0.0 {
                0.0
            } else {
                err.get_or_insert(TableError::DivideByZero(i));
                0.0
            };
            values.push(q);
            i += 1;
        });
        match err {
            Some(e) => Err(e),
            None => Ok(Table { scope: self.scope.clone(), values }),
        }
    }

    /// Fixes the listed variables to the given states and drops them from the
    /// scope. Assignments to variables outside the scope are ignored.
    pub fn slice(&self, assignment: &[(VarId, usize)]) -> Result<Table, TableError> {
        let strides = self.scope.strides();
        let mut base = 0;
        let mut fixed = vec![false; self.scope.len()];
        for &(v, s) in assignment {
            if let Some(p) = self.scope.position(v) {
                let card = self.scope.cards[p];
                if s >= card {
                    return Err(TableError::StateOutOfRange { var: v, state: s, card });
                }
                if !fixed[p] {
                    base += s * strides[p];
                    fixed[p] = true;
                }
            }
        }
        if base == 0 && !fixed.iter().any(|f| *f) {
            return Ok(self.clone());
        }
        let scope = self.scope.filter(|v| !fixed[self.scope.position(v).unwrap()]);
        let inner: Vec<usize> = scope
            .vars
            .iter()
            .map(|v| strides[self.scope.position(*v).unwrap()])
            .collect();
        let mut values = Vec::with_capacity(scope.size());
        walk(scope.cards(), [&inner], |[o]| values.push(self.values[base + o]));
        Ok(Table { scope, values })
    }

    /// Adds `factor * src` into the cells of `self` whose coordinates on the
    /// `assignment` variables match; `src` must be over the remaining
    /// variables of our scope (or a subset, which is broadcast).
    pub fn scatter_add(
        &mut self,
        assignment: &[(VarId, usize)],
        src: &Table,
        factor: f64,
    ) -> Result<(), TableError> {
        let strides = self.scope.strides();
        let mut base = 0;
        let mut fixed = vec![false; self.scope.len()];
        for &(v, s) in assignment {
            if let Some(p) = self.scope.position(v) {
                let card = self.scope.cards[p];
                if s >= card {
                    return Err(TableError::StateOutOfRange { var: v, state: s, card });
                }
                if !fixed[p] {
                    base += s * strides[p];
                    fixed[p] = true;
                }
            }
        }
        let free = self.scope.filter(|v| !fixed[self.scope.position(v).unwrap()]);
        if !src.scope.is_subset_of(&free) {
            return Err(TableError::ScopeNotSubset);
        }
        self.check_cards(src)?;
        let dst: Vec<usize> =
            free.vars.iter().map(|v| strides[self.scope.position(*v).unwrap()]).collect();
        let from = free.strides_in(&src.scope);
        let values = &mut self.values;
        walk(free.cards(), [&dst, &from], |[d, s]| {
            values[base + d] += factor * src.values[s];
        });
        Ok(())
    }

    /// Broadcasts this table onto a superset scope.
    pub fn expand_to(&self, scope: &Scope) -> Result<Table, TableError> {
        if self.scope == *scope {
            return Ok(self.clone());
        }
        Table::ones(scope.clone()).multiply(self)
    }

    pub fn sum_all(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Returns the table scaled to sum to one, together with the original sum.
    pub fn normalize(&self) -> Result<(Table, f64), TableError> {
        let z = self.sum_all();
        if z <= 0.0 {
            return Err(TableError::ZeroSum);
        }
        let values = self.values.iter().map(|x| x / z).collect();
        Ok((Table { scope: self.scope.clone(), values }, z))
    }

    pub fn scale(&mut self, factor: f64) {
        for x in &mut self.values {
            *x *= factor;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> VarId {
        VarId(i)
    }

    fn table(vars: &[(usize, usize)], values: &[f64]) -> Table {
        let scope = Scope::new(vars.iter().map(|&(i, c)| (v(i), c))).unwrap();
        Table::new(scope, values.to_vec()).unwrap()
    }

    #[test]
    fn multiply_by_scalar_one_is_identity() {
        let a = table(&[(0, 2)], &[2.0, 3.0]);
        assert_eq!(a.multiply(&Table::scalar(1.0)).unwrap(), a);
        assert_eq!(Table::scalar(1.0).multiply(&a).unwrap(), a);
    }

    #[test]
    fn multiply_disjoint_is_outer_product() {
        let a = table(&[(0, 2)], &[1.0, 2.0]);
        let b = table(&[(1, 2)], &[3.0, 4.0]);
        let c = a.multiply(&b).unwrap();
        assert_eq!(c.scope().vars(), &[v(0), v(1)]);
        assert_eq!(c.values(), &[3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn multiply_rejects_cardinality_conflict() {
        let a = table(&[(0, 2)], &[1.0, 2.0]);
        let b = table(&[(0, 3)], &[1.0, 2.0, 3.0]);
        assert!(matches!(a.multiply(&b), Err(TableError::CardinalityConflict { .. })));
    }

    #[test]
    fn marginalize_cases() {
        let t = table(&[(0, 2), (1, 2)], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.marginalize(&[v(0), v(1)]), t);
        assert_eq!(t.marginalize(&[]).values(), &[10.0]);
        assert!(t.marginalize(&[]).scope().is_empty());
        assert_eq!(t.marginalize(&[v(0)]).values(), &[3.0, 7.0]);
        assert_eq!(t.marginalize(&[v(1)]).values(), &[4.0, 6.0]);
        // variables absent from the scope are ignored
        assert_eq!(t.marginalize(&[v(0), v(9)]).values(), &[3.0, 7.0]);
    }

    #[test]
    fn divide_cases() {
        let num = table(&[(0, 2)], &[2.0, 4.0]);
        assert_eq!(num.divide(&Table::scalar(2.0)).unwrap().values(), &[1.0, 2.0]);
        let num = table(&[(0, 2)], &[0.0, 4.0]);
        let den = table(&[(0, 2)], &[0.0, 2.0]);
        assert_eq!(num.divide(&den).unwrap().values(), &[0.0, 2.0]);
        let num = table(&[(0, 2)], &[1.0, 4.0]);
        assert!(matches!(num.divide(&den), Err(TableError::DivideByZero(0))));
        let other = table(&[(3, 2)], &[1.0, 1.0]);
        assert_eq!(num.divide(&other), Err(TableError::ScopeNotSubset));
    }

    #[test]
    fn slice_cases() {
        let t = table(&[(0, 2), (1, 2)], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.slice(&[]).unwrap(), t);
        let s = t.slice(&[(v(1), 1)]).unwrap();
        assert_eq!(s.scope().vars(), &[v(0)]);
        assert_eq!(s.values(), &[2.0, 4.0]);
        let s = t.slice(&[(v(0), 1)]).unwrap();
        assert_eq!(s.values(), &[3.0, 4.0]);
        assert!(matches!(t.slice(&[(v(0), 2)]), Err(TableError::StateOutOfRange { .. })));
        assert_eq!(t.slice(&[(v(0), 1), (v(1), 0)]).unwrap().values(), &[3.0]);
    }

    #[test]
    fn normalize_cases() {
        let (n, z) = table(&[(0, 2)], &[1.0, 3.0]).normalize().unwrap();
        assert_eq!(n.values(), &[0.25, 0.75]);
        assert_eq!(z, 4.0);
        let (n, z) = Table::scalar(1.0).normalize().unwrap();
        assert_eq!((n.values()[0], z), (1.0, 1.0));
        assert_eq!(table(&[(0, 2)], &[0.0, 0.0]).normalize(), Err(TableError::ZeroSum));
    }

    #[test]
    fn scatter_add_inverts_slice() {
        let t = table(&[(0, 2), (1, 3)], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut acc = Table::filled(t.scope().clone(), 0.0);
        for s in 0..3 {
            let part = t.slice(&[(v(1), s)]).unwrap();
            acc.scatter_add(&[(v(1), s)], &part, 1.0).unwrap();
        }
        assert_eq!(acc, t);
    }

    #[test]
    fn construction_rejects_bad_input() {
        let scope = Scope::new([(v(0), 2)]).unwrap();
        assert!(Table::new(scope.clone(), vec![1.0]).is_err());
        assert!(Table::new(scope, vec![1.0, -0.5]).is_err());
        assert!(Scope::new([(v(0), 2), (v(0), 2)]).is_err());
        assert!(Scope::new([(v(0), 0)]).is_err());
    }

    #[test]
    fn indicator_and_expand() {
        let ind = Table::indicator(v(2), 3, 1).unwrap();
        assert_eq!(ind.values(), &[0.0, 1.0, 0.0]);
        let big = Scope::new([(v(1), 2), (v(2), 3)]).unwrap();
        let e = ind.expand_to(&big).unwrap();
        assert_eq!(e.values(), &[0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
    }
}
