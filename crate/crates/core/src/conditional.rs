//! Conditional expectation operators `E^(I)` and iterated conditional
//! variances `Var^(I)` on an enumerated product space.
//!
//! `E^(I)` integrates out the coordinates in `I` and keeps the others fixed.
//! The iterated variance is defined recursively by peeling the smallest index
//! `i` off `I`:
//!
//! ```text
//! Var^(i) f      = E^(i) (f - E^(i) f)^2
//! Var^(i ∪ J) f  = E^(i) Var^(J) f - Var^(J) E^(i) f
//! ```
//!
//! An independent closed form obtained by unrolling the recursion is
//! `Var^(I) f = sum_{J ⊆ I} (-1)^{|J|} E^(I \ J) (E^(J) f)^2`; both are
//! exposed so one can check the other.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::model::{tabulate, FieldTable, ProductSpace, Statistic};

/// Largest `n` the exact engine accepts.
pub const MAX_EXACT_COORDS: usize = 20;

/// Negative iterated-variance values above `-CLAMP_RELATIVE * scale` are
/// rounding noise and clamp to zero; anything lower is a consistency error.
pub const CLAMP_RELATIVE: f64 = 1e-10;

/// Memoized `E^(I) base` and `Var^(I) E^(M) base` tables.
///
/// Entries are filled lazily. Two threads may race to compute the same
/// entry; both produce identical tables and the first insert wins.
#[derive(Debug)]
pub struct CondExpCache {
    base: Arc<FieldTable>,
    scale: f64,
    expectations: RwLock<HashMap<IndexSet, Arc<FieldTable>>>,
    variances: RwLock<HashMap<(IndexSet, IndexSet), Arc<FieldTable>>>,
}

impl CondExpCache {
    pub fn new(base: FieldTable) -> Result<Self> {
        let n = base.space().n();
        if n > MAX_EXACT_COORDS {
            return Err(Error::TooManyCoordinates {
                n,
                max: MAX_EXACT_COORDS,
            });
        }
        let scale = base.second_moment().max(1.0);
        let base = Arc::new(base);
        let mut expectations = HashMap::new();
        expectations.insert(IndexSet::EMPTY, Arc::clone(&base));
        Ok(CondExpCache {
            base,
            scale,
            expectations: RwLock::new(expectations),
            variances: RwLock::new(HashMap::new()),
        })
    }

    pub fn from_statistic(stat: &Statistic, space: &Arc<ProductSpace>) -> Result<Self> {
        Self::new(tabulate(stat, space)?)
    }

    pub fn base(&self) -> &FieldTable {
        &self.base
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        self.base.space()
    }

    pub fn n(&self) -> usize {
        self.space().n()
    }

    /// `max(1, E base^2)`, the reference magnitude for every tolerance.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Clamping threshold for iterated variances.
    pub fn epsilon(&self) -> f64 {
        CLAMP_RELATIVE * self.scale
    }

    fn check_range(&self, set: IndexSet) -> Result<()> {
        let n = self.n();
        match set.difference(IndexSet::full(n)).first() {
            Some(index) => Err(Error::IndexOutOfRange { index, n }),
            None => Ok(()),
        }
    }

    /// `E^(set) base`.
    pub fn cond_expect(&self, set: IndexSet) -> Result<Arc<FieldTable>> {
        self.check_range(set)?;
        Ok(self.cond_expect_unchecked(set))
    }

    fn cond_expect_unchecked(&self, set: IndexSet) -> Arc<FieldTable> {
        if let Some(t) = self.expectations.read().expect("cache lock").get(&set) {
            return Arc::clone(t);
        }
        let top = set.last().expect("empty set is always cached");
        let parent = self.cond_expect_unchecked(set.without(top));
        let table = Arc::new(parent.integrate_coord(top));
        let mut guard = self.expectations.write().expect("cache lock");
        Arc::clone(guard.entry(set).or_insert(table))
    }

    /// `E[base | X_0, .., X_{i-1}]`: conditions on the first `i` coordinates.
    /// `i = 0` gives the constant mean and `i = n` gives `base` itself.
    pub fn prefix_expect(&self, i: usize) -> Result<Arc<FieldTable>> {
        let n = self.n();
        if i > n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        self.cond_expect(IndexSet::prefix(i).complement(n))
    }

    /// `Var^(set) base` by the recursion, clamped at zero.
    pub fn iterated_variance(&self, set: IndexSet) -> Result<FieldTable> {
        self.iterated_variance_of(set, IndexSet::EMPTY)
    }

    /// `Var^(set) (E^(outer) base)` by the recursion, clamped at zero.
    pub fn iterated_variance_of(&self, set: IndexSet, outer: IndexSet) -> Result<FieldTable> {
        Ok(clamp(&*self.raw_variance(set, outer)?))
    }

    /// `E[Var^(set) (E^(outer) base)]` from the unclamped recursion table.
    pub fn expected_iterated_variance(&self, set: IndexSet, outer: IndexSet) -> Result<f64> {
        Ok(self.raw_variance(set, outer)?.expectation())
    }

    /// Unclamped recursion result, validated against `-epsilon`.
    pub fn raw_variance(&self, set: IndexSet, outer: IndexSet) -> Result<Arc<FieldTable>> {
        if set.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        self.check_range(set)?;
        self.check_range(outer)?;
        self.raw_variance_unchecked(set, outer)
    }

    fn raw_variance_unchecked(&self, set: IndexSet, outer: IndexSet) -> Result<Arc<FieldTable>> {
        let key = (set, outer);
        if let Some(t) = self.variances.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(t));
        }
        let first = set.first().expect("nonempty");
        let rest = set.without(first);
        let table = if rest.is_empty() {
            let f = self.cond_expect_unchecked(outer);
            let mean = self.cond_expect_unchecked(outer.with(first));
            f.zip_with(&mean, |a, b| (a - b) * (a - b))
                .integrate_coord(first)
        } else {
            let inner = self.raw_variance_unchecked(rest, outer)?;
            let shifted = self.raw_variance_unchecked(rest, outer.with(first))?;
            inner
                .integrate_coord(first)
                .zip_with(&shifted, |a, b| a - b)
        };
        self.validate(&table, set)?;
        let table = Arc::new(table);
        let mut guard = self.variances.write().expect("cache lock");
        Ok(Arc::clone(guard.entry(key).or_insert(table)))
    }

    /// `Var^(set) base` by inclusion-exclusion, clamped at zero.
    pub fn iterated_variance_ie(&self, set: IndexSet) -> Result<FieldTable> {
        self.iterated_variance_ie_of(set, IndexSet::EMPTY)
    }

    /// `Var^(set) (E^(outer) base)` by inclusion-exclusion over `J ⊆ set`,
    /// without touching the recursion memo.
    pub fn iterated_variance_ie_of(&self, set: IndexSet, outer: IndexSet) -> Result<FieldTable> {
        if set.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        self.check_range(set)?;
        self.check_range(outer)?;
        let mut acc = vec![0.0; self.base.len()];
        for sub in set.subsets() {
            let sign = if sub.len() % 2 == 0 { 1.0 } else { -1.0 };
            let squared = self
                .cond_expect_unchecked(sub.union(outer))
                .map(|v| v * v)
                .integrate(set.difference(sub));
            for (a, v) in acc.iter_mut().zip(squared.values()) {
                *a += sign * v;
            }
        }
        let constant = set.union(outer);
        let table = FieldTable::with_constant_coords(Arc::clone(self.space()), acc, constant)?;
        self.validate(&table, set)?;
        Ok(clamp(&table))
    }

    /// Runs the recursion on `base` peeling indices in the given order, with
    /// no memoization. For checking that the order does not matter.
    pub fn iterated_variance_ordered(&self, order: &[usize]) -> Result<FieldTable> {
        let set = IndexSet::from_indices(order.iter().copied(), self.n())?;
        if set.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        let table = ordered_variance(&self.base, order);
        self.validate(&table, set)?;
        Ok(clamp(&table))
    }

    fn validate(&self, table: &FieldTable, set: IndexSet) -> Result<()> {
        let min = table.min();
        if min < -self.epsilon() {
            return Err(Error::Consistency(format!(
                "iterated variance over {set} reaches {min:e}, below -{:e}",
                self.epsilon()
            )));
        }
        Ok(())
    }
}

fn ordered_variance(f: &FieldTable, order: &[usize]) -> FieldTable {
    match order {
        [] => unreachable!("checked nonempty"),
        [i] => {
            let mean = f.integrate_coord(*i);
            f.zip_with(&mean, |a, b| (a - b) * (a - b)).integrate_coord(*i)
        }
        [first, rest @ ..] => {
            let inner = ordered_variance(f, rest).integrate_coord(*first);
            let shifted = ordered_variance(&f.integrate_coord(*first), rest);
            inner.zip_with(&shifted, |a, b| a - b)
        }
    }
}

fn clamp(table: &FieldTable) -> FieldTable {
    table.map(|v| v.max(0.0))
}
