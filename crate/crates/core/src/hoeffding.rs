//! Hoeffding (functional ANOVA) decomposition over independent coordinates.
//!
//! `S = E S + Σ_{I ≠ ∅} h_I`, with `h_I = Σ_{J ⊆ I} (-1)^{|I|-|J|} E[S | X_J]`.
//! Each `h_I` depends only on the coordinates in `I` and averages to zero
//! over any single one of them, which makes the components orthogonal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, factorial, pairwise_sum};
use crate::conditional::CondExpCache;
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::jackknife::JackknifeSpectrum;
use crate::model::FieldTable;

/// `h_I` by Möbius inversion of the conditional expectations `E[S | X_J]`.
pub fn component(cache: &CondExpCache, set: IndexSet) -> Result<FieldTable> {
    if set.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let n = cache.n();
    let outside = set.complement(n);
    // Range check happens inside cond_expect.
    cache.cond_expect(set)?;
    let mut acc = vec![0.0; cache.base().len()];
    for sub in set.subsets() {
        let sign = if (set.len() - sub.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
        let given = cache.cond_expect(sub.complement(n))?;
        for (a, v) in acc.iter_mut().zip(given.values()) {
            *a += sign * v;
        }
    }
    FieldTable::with_constant_coords(cache.space().clone(), acc, outside)
}

/// `Var f_d = Σ_{|I| = d} E h_I^2` for `d = 1..=n`.
pub fn degree_spectrum(cache: &CondExpCache) -> Result<Vec<f64>> {
    Ok(HoeffdingDecomposition::compute(cache)?.spectrum)
}

#[derive(Clone, Debug)]
pub struct HoeffdingDecomposition {
    pub mean: f64,
    pub components: BTreeMap<IndexSet, FieldTable>,
    pub spectrum: Vec<f64>,
}

impl HoeffdingDecomposition {
    pub fn compute(cache: &CondExpCache) -> Result<Self> {
        let n = cache.n();
        let components = IndexSet::all(n)
            .skip(1)
            .map(|s| component(cache, s).map(|h| (s, h)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let spectrum = (1..=n)
            .map(|d| {
                let terms: Vec<f64> = components
                    .iter()
                    .filter(|(s, _)| s.len() == d)
                    .map(|(_, h)| h.second_moment())
                    .collect();
                pairwise_sum(&terms)
            })
            .collect();
        Ok(HoeffdingDecomposition {
            mean: cache.base().expectation(),
            components,
            spectrum,
        })
    }

    /// `E S + Σ_I h_I`, which should reproduce `S`.
    pub fn reconstruct(&self) -> Option<FieldTable> {
        let first = self.components.values().next()?;
        let mut acc = vec![self.mean; first.len()];
        for h in self.components.values() {
            for (a, v) in acc.iter_mut().zip(h.values()) {
                *a += v;
            }
        }
        FieldTable::new(first.space().clone(), acc).ok()
    }

    /// Largest `|E^(i) h_I|` over all `I` and `i ∈ I`.
    pub fn degeneracy_residual(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|(s, h)| s.iter().map(move |i| h.integrate_coord(i).max_abs()))
            .fold(0.0, f64::max)
    }

    /// Largest change of any `h_I` along a coordinate outside `I`.
    pub fn support_residual(&self) -> f64 {
        self.components
            .iter()
            .map(|(s, h)| {
                let n = h.space().n();
                s.complement(n)
                    .iter()
                    .map(|i| along(h, i))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|E h_I h_J|` over distinct `I`, `J`.
    pub fn orthogonality_residual(&self) -> f64 {
        let items: Vec<_> = self.components.values().collect();
        let mut worst = 0.0f64;
        for (a, ha) in items.iter().enumerate() {
            for hb in &items[a + 1..] {
                worst = worst.max(ha.zip_with(hb, |x, y| x * y).expectation().abs());
            }
        }
        worst
    }

    /// `E (E^(outside I) S) - (E S + Σ_{J ⊆ I} h_J)`, maximised pointwise
    /// over every `I`.
    pub fn projection_residual(&self, cache: &CondExpCache) -> Result<f64> {
        let n = cache.n();
        let mut worst = 0.0f64;
        for set in IndexSet::all(n).skip(1) {
            let given = cache.cond_expect(set.complement(n))?;
            let mut acc = vec![self.mean; given.len()];
            for sub in set.subsets().skip(1) {
                for (a, v) in acc.iter_mut().zip(self.components[&sub].values()) {
                    *a += v;
                }
            }
            let diff = given
                .values()
                .iter()
                .zip(&acc)
                .fold(0.0f64, |m, (g, a)| m.max((g - a).abs()));
            worst = worst.max(diff);
        }
        Ok(worst)
    }

    /// `E Var^(I) S - Σ_{J ⊇ I} E h_J^2`, maximised over every nonempty `I`.
    pub fn superset_residual(&self, cache: &CondExpCache) -> Result<f64> {
        let mut worst = 0.0f64;
        for &set in self.components.keys() {
            let direct = cache.expected_iterated_variance(set, IndexSet::EMPTY)?;
            let terms: Vec<f64> = self
                .components
                .iter()
                .filter(|(s, _)| set.is_subset(**s))
                .map(|(_, h)| h.second_moment())
                .collect();
            worst = worst.max((direct - pairwise_sum(&terms)).abs());
        }
        Ok(worst)
    }
}

fn along(h: &FieldTable, i: usize) -> f64 {
    let space = h.space();
    let stride = space.stride(i);
    let radix = space.radix(i);
    h.values()
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let digit = (idx / stride) % radix;
            (v - h.values()[idx - digit * stride]).abs()
        })
        .fold(0.0, f64::max)
}

/// Residuals of the three spectrum/jackknife correspondences, each maximised
/// over `k`:
///
/// - `E J_k / k! = Σ_{j >= k} C(j, k) Var f_j`
/// - `E K_k / k! = Var f_k`
/// - `E J_k = Σ_{j >= k} E K_j / (j - k)!`
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralResiduals {
    pub j_from_spectrum: f64,
    pub k_from_spectrum: f64,
    pub j_from_k: f64,
}

impl SpectralResiduals {
    pub fn max(&self) -> f64 {
        self.j_from_spectrum.max(self.k_from_spectrum).max(self.j_from_k)
    }

    pub fn passes(&self, scale: f64) -> bool {
        self.max() <= 1e-9 * scale
    }
}

pub fn spectral_check(spectrum: &[f64], jack: &JackknifeSpectrum) -> SpectralResiduals {
    let n = jack.n;
    let var_f = |d: usize| spectrum.get(d - 1).copied().unwrap_or(0.0);
    let mut out = SpectralResiduals::default();
    for k in 1..=n {
        let kf = factorial(k) as f64;
        let from_spectrum: f64 = (k..=n).map(|j| binomial(j, k) as f64 * var_f(j)).sum();
        out.j_from_spectrum = out.j_from_spectrum.max((jack.j(k) / kf - from_spectrum).abs());
        out.k_from_spectrum = out.k_from_spectrum.max((jack.k(k) / kf - var_f(k)).abs());
        let from_k: f64 = (k..=n).map(|j| jack.k(j) / factorial(j - k) as f64).sum();
        out.j_from_k = out.j_from_k.max((jack.j(k) - from_k).abs());
    }
    out
}
