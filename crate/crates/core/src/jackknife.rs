//! Iterated jackknife expectations.
//!
//! For `1 <= k <= n` and sorted `k`-subsets `I`:
//!
//! ```text
//! E J_k = k! sum_I E Var^(I) S
//! E K_k = k! sum_I E Var^(I) E^(complement of I) S
//! E R_k =    sum_I E Var^(I) E^({0, .., min I - 1}) S
//! ```
//!
//! Subset sums run in increasing bitmask order and reduce with
//! [`pairwise_sum`], so results are reproducible bit for bit.

use serde::{Deserialize, Serialize};

use crate::combinatorics::{factorial, falling_factorial, pairwise_sum};
use crate::conditional::CondExpCache;
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::model::space::advance;
use crate::model::{ProductSpace, Statistic, DEFAULT_OUTCOME_CAP};

/// `E J_k`, `E K_k` and `E R_k` for `k = 1..=n` (stored at index `k - 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JackknifeSpectrum {
    pub n: usize,
    pub ej: Vec<f64>,
    pub ek: Vec<f64>,
    pub er: Vec<f64>,
}

impl JackknifeSpectrum {
    pub fn compute(cache: &CondExpCache) -> Result<Self> {
        let n = cache.n();
        let collect = |f: fn(&CondExpCache, usize) -> Result<f64>| -> Result<Vec<f64>> {
            (1..=n).map(|k| f(cache, k)).collect()
        };
        Ok(JackknifeSpectrum {
            n,
            ej: collect(expected_j)?,
            ek: collect(expected_k)?,
            er: collect(expected_r)?,
        })
    }

    /// `E J_k`, taken as 0 outside `1..=n`.
    pub fn j(&self, k: usize) -> f64 {
        get(&self.ej, k)
    }

    /// `E K_k`, taken as 0 outside `1..=n`.
    pub fn k(&self, k: usize) -> f64 {
        get(&self.ek, k)
    }

    /// `E R_k`, taken as 0 outside `1..=n`.
    pub fn r(&self, k: usize) -> f64 {
        get(&self.er, k)
    }
}

fn get(xs: &[f64], k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        xs.get(k - 1).copied().unwrap_or(0.0)
    }
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    Ok(())
}

fn subset_sum(cache: &CondExpCache, k: usize, outer: impl Fn(IndexSet) -> IndexSet) -> Result<f64> {
    let n = cache.n();
    check_order(n, k)?;
    let terms = IndexSet::all_of_size(n, k)
        .map(|s| cache.expected_iterated_variance(s, outer(s)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

/// `E J_k`.
pub fn expected_j(cache: &CondExpCache, k: usize) -> Result<f64> {
    Ok(factorial(k) as f64 * subset_sum(cache, k, |_| IndexSet::EMPTY)?)
}

/// `E K_k`: the iterated variance over `I` of `S` averaged over every
/// coordinate outside `I`.
pub fn expected_k(cache: &CondExpCache, k: usize) -> Result<f64> {
    let n = cache.n();
    Ok(factorial(k) as f64 * subset_sum(cache, k, |s| s.complement(n))?)
}

/// `E R_k`, computed from its definition rather than by recursion.
pub fn expected_r(cache: &CondExpCache, k: usize) -> Result<f64> {
    subset_sum(cache, k, |s| IndexSet::prefix(s.first().expect("k >= 1")))
}

/// `n (n-1) .. (n-k+1) E Var^(0..k-1) S`, which equals `E J_k` when `S` is
/// symmetric and the coordinates are iid.
pub fn symmetric_collapse(cache: &CondExpCache, k: usize) -> Result<f64> {
    let n = cache.n();
    check_order(n, k)?;
    let head = IndexSet::prefix(k);
    Ok(falling_factorial(n, k) as f64 * cache.expected_iterated_variance(head, IndexSet::EMPTY)?)
}

/// `E (Σ_{J ⊆ I} (-1)^{|J|} S_J)^2` by exact enumeration of the space
/// extended with one independent copy per index in `set`. `S_J` is `S` with
/// the coordinates in `J` replaced by their copies.
pub fn iterated_difference_moment(space: &ProductSpace, stat: &Statistic, set: IndexSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let n = space.n();
    if let Some(index) = set.difference(IndexSet::full(n)).first() {
        return Err(Error::IndexOutOfRange { index, n });
    }
    let coords: Vec<usize> = set.iter().collect();
    let extended = coords
        .iter()
        .try_fold(space.num_outcomes(), |acc, &i| acc.checked_mul(space.radix(i) as u128))
        .unwrap_or(u128::MAX);
    if extended > DEFAULT_OUTCOME_CAP {
        return Err(Error::OutcomeOverflow {
            count: extended,
            cap: DEFAULT_OUTCOME_CAP,
        });
    }
    let eval = stat.compile(space)?;
    let weights = space.weights();
    let m = coords.len();

    let mut base = vec![0usize; n];
    let mut work = vec![0usize; n];
    let mut per_outcome = Vec::with_capacity(space.len());
    for &w_base in weights {
        let mut copies = vec![0usize; m];
        let mut inner = Vec::new();
        loop {
            let w_copy: f64 = coords
                .iter()
                .zip(&copies)
                .map(|(&i, &c)| space.dist(i).probs()[c])
                .product();
            let mut diff = 0.0;
            for sub in 0u32..(1 << m) {
                work.copy_from_slice(&base);
                for (pos, &i) in coords.iter().enumerate() {
                    if sub & (1 << pos) != 0 {
                        work[i] = copies[pos];
                    }
                }
                let sign = if sub.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                diff += sign * eval.eval(&work);
            }
            inner.push(w_copy * diff * diff);
            if !advance(&mut copies, |pos| space.radix(coords[pos])) {
                break;
            }
        }
        per_outcome.push(w_base * pairwise_sum(&inner));
        advance(&mut base, |i| space.radix(i));
    }
    Ok(pairwise_sum(&per_outcome))
}

/// Relative tolerance for the internal pairwise-form check.
pub const CLASSICAL_TOLERANCE: f64 = 1e-12;

/// `Σ (S_i - S̄)^2` over observed values, cross-checked against
/// `(1/m) Σ_{i<j} (S_i - S_j)^2` where `m` is the number of values.
pub fn classical_jackknife(values: &[f64]) -> Result<f64> {
    let m = values.len();
    if m < 2 {
        return Err(Error::TooFewValues { needed: 2, got: m });
    }
    let (centered, pairwise) = classical_jackknife_forms(values);
    let max_abs = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = m as f64 * (4.0 * f64::EPSILON * max_abs).powi(2);
    let tol = (CLASSICAL_TOLERANCE * centered.abs().max(pairwise.abs())).max(floor);
    if (centered - pairwise).abs() > tol {
        return Err(Error::Consistency(format!(
            "jackknife forms disagree: centered {centered} vs pairwise {pairwise}"
        )));
    }
    Ok(centered)
}

/// Both sides of the classical identity, without checking them.
pub fn classical_jackknife_forms(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = pairwise_sum(values) / m;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let centered = pairwise_sum(&sq);
    let pairs: Vec<f64> = values
        .iter()
        .enumerate()
        .flat_map(|(i, a)| values[i + 1..].iter().map(move |b| (a - b) * (a - b)))
        .collect();
    (centered, pairwise_sum(&pairs) / m)
}
