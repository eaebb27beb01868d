use std::sync::Arc;

use super::space::advance;
use super::{ProductSpace, Statistic};
use crate::combinatorics::pairwise_sum;
use crate::error::{Error, Result};
use crate::index_set::IndexSet;

/// A real value per joint outcome, aligned with the space's enumeration.
///
/// `constant_coords` records coordinates along which the values are known not
/// to vary; it is always a subset of the true set of such coordinates.
#[derive(Clone, Debug)]
pub struct FieldTable {
    space: Arc<ProductSpace>,
    values: Vec<f64>,
    constant_coords: IndexSet,
}

impl FieldTable {
    pub fn new(space: Arc<ProductSpace>, values: Vec<f64>) -> Result<Self> {
        Self::with_constant_coords(space, values, IndexSet::EMPTY)
    }

    pub fn with_constant_coords(
        space: Arc<ProductSpace>,
        values: Vec<f64>,
        constant_coords: IndexSet,
    ) -> Result<Self> {
        let len = space.ensure_enumerable()?;
        if values.len() != len {
            return Err(Error::InvalidStatistic(format!(
                "table has {} values but the space has {len} outcomes",
                values.len()
            )));
        }
        if !constant_coords.is_subset(IndexSet::full(space.n())) {
            return Err(Error::IndexOutOfRange {
                index: constant_coords.last().unwrap_or(0),
                n: space.n(),
            });
        }
        Ok(FieldTable {
            space,
            values,
            constant_coords,
        })
    }

    pub fn constant(space: Arc<ProductSpace>, c: f64) -> Result<Self> {
        let len = space.ensure_enumerable()?;
        let all = IndexSet::full(space.n());
        Self::with_constant_coords(space, vec![c; len], all)
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn constant_coords(&self) -> IndexSet {
        self.constant_coords
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn expectation(&self) -> f64 {
        weighted_sum(self.space.weights(), &self.values, |v| v)
    }

    pub fn second_moment(&self) -> f64 {
        weighted_sum(self.space.weights(), &self.values, |v| v * v)
    }

    /// Two-pass variance: the mean is subtracted before squaring.
    pub fn variance(&self) -> f64 {
        let mean = self.expectation();
        weighted_sum(self.space.weights(), &self.values, |v| (v - mean) * (v - mean))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Applies `E^(i)`: averages over coordinate `i` with its marginal law,
    /// keeping the full layout (the result is replicated along `i`).
    pub fn integrate_coord(&self, i: usize) -> FieldTable {
        if self.constant_coords.contains(i) {
            return self.clone();
        }
        let stride = self.space.stride(i);
        let probs = self.space.dist(i).probs();
        let block = stride * probs.len();
        let mut out = vec![0.0; self.values.len()];
        for start in (0..self.values.len()).step_by(block) {
            for base in start..start + stride {
                let acc: f64 = probs
                    .iter()
                    .enumerate()
                    .map(|(v, p)| p * self.values[base + v * stride])
                    .sum();
                for v in 0..probs.len() {
                    out[base + v * stride] = acc;
                }
            }
        }
        FieldTable {
            space: Arc::clone(&self.space),
            values: out,
            constant_coords: self.constant_coords.with(i),
        }
    }

    /// Applies `E^(set)`, integrating coordinates in ascending order.
    pub fn integrate(&self, set: IndexSet) -> FieldTable {
        let mut pending = set.difference(self.constant_coords).iter();
        match pending.next() {
            None => FieldTable {
                constant_coords: self.constant_coords.union(set),
                ..self.clone()
            },
            Some(first) => {
                let mut acc = self.integrate_coord(first);
                for i in pending {
                    acc = acc.integrate_coord(i);
                }
                acc.constant_coords = acc.constant_coords.union(set);
                acc
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FieldTable {
        FieldTable {
            space: Arc::clone(&self.space),
            values: self.values.iter().map(|&v| f(v)).collect(),
            constant_coords: self.constant_coords,
        }
    }

    /// Pointwise combination; the result is known constant only where both
    /// inputs are.
    pub fn zip_with(&self, other: &FieldTable, f: impl Fn(f64, f64) -> f64) -> FieldTable {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space) || self.len() == other.len());
        FieldTable {
            space: Arc::clone(&self.space),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            constant_coords: self.constant_coords.intersection(other.constant_coords),
        }
    }

    pub fn max_abs_diff(&self, other: &FieldTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Checks by enumeration that changing coordinate `i` alone moves no value
    /// by more than `tol`.
    pub fn is_constant_along(&self, i: usize, tol: f64) -> bool {
        let stride = self.space.stride(i);
        let radix = self.space.radix(i);
        self.values.iter().enumerate().all(|(idx, &v)| {
            let digit = (idx / stride) % radix;
            let base = idx - digit * stride;
            (v - self.values[base]).abs() <= tol
        })
    }

    /// The table as an explicit table-kind statistic.
    pub fn to_statistic(&self) -> Statistic {
        Statistic::Table {
            values: self.values.clone(),
        }
    }
}

fn weighted_sum(weights: &[f64], values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let terms: Vec<f64> = weights.iter().zip(values).map(|(w, &v)| w * f(v)).collect();
    pairwise_sum(&terms)
}

/// Evaluates `stat` at every joint outcome.
pub fn tabulate(stat: &Statistic, space: &Arc<ProductSpace>) -> Result<FieldTable> {
    let len = space.ensure_enumerable()?;
    let eval = stat.compile(space)?;
    let mut values = Vec::with_capacity(len);
    let mut digits = vec![0usize; space.n()];
    loop {
        values.push(eval.eval(&digits));
        if !advance(&mut digits, |i| space.radix(i)) {
            break;
        }
    }
    FieldTable::new(Arc::clone(space), values)
}

pub fn expectation(f: &FieldTable) -> f64 {
    f.expectation()
}

pub fn variance(f: &FieldTable) -> f64 {
    f.variance()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiscreteDistribution, Monomial};

    fn rad(n: usize) -> Arc<ProductSpace> {
        Arc::new(ProductSpace::new(vec![DiscreteDistribution::rademacher(); n]).unwrap())
    }

    fn product2() -> Statistic {
        Statistic::Poly {
            terms: vec![Monomial {
                coef: 1.0,
                powers: vec![1, 1],
            }],
        }
    }

    #[test]
    fn rad2_fixtures() {
        let space = rad(2);
        let prod = tabulate(&product2(), &space).unwrap();
        assert_eq!(prod.values(), &[1.0, -1.0, -1.0, 1.0]);
        assert_eq!(prod.expectation(), 0.0);
        assert_eq!(prod.variance(), 1.0);
        assert_eq!(prod.constant_coords(), IndexSet::EMPTY);

        let sum = tabulate(&Statistic::Sum { weights: None }, &space).unwrap();
        assert_eq!(sum.values(), &[-2.0, 0.0, 0.0, 2.0]);
        assert_eq!(sum.expectation(), 0.0);
        assert_eq!(sum.variance(), 2.0);
    }

    #[test]
    fn constant_statistic() {
        let t = tabulate(&Statistic::constant(2.5), &rad(3)).unwrap();
        assert!(t.values().iter().all(|&v| v == 2.5));
        assert_eq!(t.expectation(), 2.5);
        assert_eq!(t.variance(), 0.0);
    }

    #[test]
    fn table_roundtrip() {
        let space = rad(3);
        let t = tabulate(&Statistic::Max, &space).unwrap();
        let again = tabulate(&t.to_statistic(), &space).unwrap();
        assert_eq!(t.values(), again.values());
    }

    #[test]
    fn variance_survives_large_offsets() {
        let space = rad(1);
        let t = FieldTable::new(space, vec![1e9 - 1.0, 1e9 + 1.0]).unwrap();
        assert_eq!(t.variance(), 1.0);
    }

    #[test]
    fn integrate_marks_constant_coords() {
        let space = rad(2);
        let sum = tabulate(&Statistic::Sum { weights: None }, &space).unwrap();
        let e1 = sum.integrate_coord(1);
        assert_eq!(e1.values(), &[-1.0, 1.0, -1.0, 1.0]);
        assert!(e1.constant_coords().contains(1));
        assert!(e1.is_constant_along(1, 0.0));
        assert!(!e1.is_constant_along(0, 0.0));
        let all = sum.integrate(IndexSet::full(2));
        assert!(all.values().iter().all(|&v| v == 0.0));
    }
}
