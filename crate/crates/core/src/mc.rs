//! Monte Carlo estimators of `E J_k`, `E K_k` and the variance brackets for
//! spaces too large to enumerate.
//!
//! # Randomness
//!
//! Every draw comes from ChaCha8 keyed by SplitMix64 applied to
//! `(seed, estimator tag, purpose)`, with the ChaCha stream number set to the
//! sample index. Outer draws, copies, subset choices and inner completions
//! therefore use disjoint streams, and sample `s` sees the same numbers no
//! matter which worker or block computes it.
//!
//! # Combining
//!
//! Per-sample contributions `c_0 .. c_{N-1}` are collected in sample order
//! and reduced with [`pairwise_sum`]: `mean = Σ c_s / N` and
//! `std_error = sqrt(Σ (c_s - mean)^2 / ((N - 1) N))`. Splitting the index
//! range into blocks and concatenating their contribution vectors yields the
//! same estimate bit for bit.

use std::ops::Range;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial_f64, factorial_f64, pairwise_sum};
use crate::error::{Error, Result};
use crate::jackknife::classical_jackknife;
use crate::model::{Evaluator, ProductSpace, Statistic};

/// Largest order `k` the estimators accept; each sample costs `2^k`
/// evaluations per subset.
pub const MAX_MC_ORDER: usize = 20;

/// Enumerate all `k`-subsets per sample when there are at most this many.
pub const ENUMERATE_LIMIT: f64 = 64.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetMode {
    /// Enumerate when `C(n, k) <= 64`, sample otherwise.
    #[default]
    Auto,
    Enumerate,
    Sample,
}

fn default_outer() -> usize {
    10_000
}

fn default_inner() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub seed: u64,
    #[serde(default = "default_outer")]
    pub outer_samples: usize,
    #[serde(default = "default_inner")]
    pub inner_pairs: usize,
    /// Orders to report; empty means `1..=min(n, 4)`.
    #[serde(default)]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub subset_mode: SubsetMode,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 0,
            outer_samples: default_outer(),
            inner_pairs: default_inner(),
            ks: Vec::new(),
            subset_mode: SubsetMode::Auto,
        }
    }
}

impl McConfig {
    pub fn with_seed(seed: u64) -> Self {
        McConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_samples < 2 {
            return Err(Error::InvalidMcConfig(format!(
                "outer_samples must be at least 2, got {}",
                self.outer_samples
            )));
        }
        if self.inner_pairs < 1 {
            return Err(Error::InvalidMcConfig("inner_pairs must be at least 1".into()));
        }
        Ok(())
    }

    /// Orders to estimate for a space with `n` coordinates.
    pub fn orders(&self, n: usize) -> Vec<usize> {
        if self.ks.is_empty() {
            (1..=n.min(4)).collect()
        } else {
            self.ks.clone()
        }
    }

    fn enumerate(&self, n: usize, k: usize) -> bool {
        match self.subset_mode {
            SubsetMode::Enumerate => true,
            SubsetMode::Sample => false,
            SubsetMode::Auto => binomial_f64(n, k) <= ENUMERATE_LIMIT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Set when the point estimate of a non-negative quantity is negative.
    pub negative: bool,
}

impl McEstimate {
    pub fn from_contributions(contribs: &[f64]) -> Self {
        let n = contribs.len();
        let mean = pairwise_sum(contribs) / n as f64;
        let sq: Vec<f64> = contribs.iter().map(|c| (c - mean) * (c - mean)).collect();
        let std_error = if n > 1 {
            (pairwise_sum(&sq) / ((n - 1) as f64 * n as f64)).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean,
            std_error,
            samples: n,
            negative: mean < 0.0,
        }
    }

    /// True when `target` lies within `sigmas` standard errors of the mean.
    pub fn covers(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.std_error
    }
}

#[derive(Clone, Copy, Debug)]
#[repr(u64)]
enum Purpose {
    Outer = 1,
    Copies = 2,
    Subset = 3,
    Completion = 4,
    Reference = 5,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, tag: u64, purpose: Purpose, sample: u64) -> ChaCha8Rng {
    let mut state = seed;
    let a = splitmix64(&mut state);
    let mut state = a ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let b = splitmix64(&mut state);
    let mut state = b ^ (purpose as u64).wrapping_mul(0x8CB9_2BA7_2F3D_8DD7);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(sample);
    rng
}

const TAG_J: u64 = 0x4A << 32;
const TAG_K: u64 = 0x4B << 32;
const TAG_BIAS: u64 = 0x42 << 32;
const TAG_DRAW: u64 = 0x44 << 32;

/// Fills `out` with support indices drawn from the product law by
/// per-coordinate inverse-CDF sampling.
pub fn fill_outcome<R: Rng + ?Sized>(space: &ProductSpace, rng: &mut R, out: &mut [usize]) {
    for (slot, d) in out.iter_mut().zip(space.dists()) {
        *slot = if d.len() == 1 { 0 } else { d.inverse_cdf(rng.gen::<f64>()) };
    }
}

/// Draw number `draw` of the stream identified by `seed`, as support indices.
pub fn sample_outcome(space: &ProductSpace, seed: u64, draw: u64) -> Vec<usize> {
    let mut rng = stream(seed, TAG_DRAW, Purpose::Outer, draw);
    let mut out = vec![0; space.n()];
    fill_outcome(space, &mut rng, &mut out);
    out
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    if k > MAX_MC_ORDER {
        return Err(Error::InvalidMcConfig(format!(
            "order {k} exceeds the Monte Carlo limit of {MAX_MC_ORDER}"
        )));
    }
    Ok(())
}

/// Advances a sorted `k`-combination of `0..n` in lexicographic order.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    for pos in (0..k).rev() {
        if comb[pos] < n - k + pos {
            comb[pos] += 1;
            for next in pos + 1..k {
                comb[next] = comb[next - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn for_each_subset(
    n: usize,
    k: usize,
    enumerate: bool,
    rng: &mut ChaCha8Rng,
    mut f: impl FnMut(&[usize]),
) {
    if enumerate {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            f(&comb);
            if !next_combination(&mut comb, n) {
                break;
            }
        }
    } else {
        let mut comb = sample_indices(rng, n, k).into_vec();
        comb.sort_unstable();
        f(&comb);
    }
}

/// `Σ_{J ⊆ coords} (-1)^{|J|} S(x with J taken from y)`.
fn iterated_difference(eval: &Evaluator, x: &[usize], y: &[usize], coords: &[usize], work: &mut [usize]) -> f64 {
    let k = coords.len();
    let mut acc = 0.0;
    for sub in 0u32..(1 << k) {
        work.copy_from_slice(x);
        for (pos, &i) in coords.iter().enumerate() {
            if sub & (1 << pos) != 0 {
                work[i] = y[i];
            }
        }
        let sign = if sub.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * eval.eval(work);
    }
    acc
}

struct Scratch {
    x: Vec<usize>,
    y: Vec<usize>,
    work: Vec<usize>,
    completions: Vec<(Vec<usize>, Vec<usize>)>,
}

impl Scratch {
    fn new(n: usize, pairs: usize) -> Self {
        Scratch {
            x: vec![0; n],
            y: vec![0; n],
            work: vec![0; n],
            completions: vec![(vec![0; n], vec![0; n]); pairs],
        }
    }
}

fn collect(
    range: Range<u64>,
    n: usize,
    pairs: usize,
    f: impl Fn(u64, &mut Scratch) -> Result<f64> + Sync,
) -> Result<Vec<f64>> {
    range
        .into_par_iter()
        .map_init(|| Scratch::new(n, pairs), |scratch, s| f(s, scratch))
        .collect()
}

/// Per-sample contributions to the `E J_k` estimate for samples in `range`.
pub fn ej_contributions(
    space: &ProductSpace,
    stat: &Statistic,
    k: usize,
    cfg: &McConfig,
    range: Range<u64>,
) -> Result<Vec<f64>> {
    let n = space.n();
    check_order(n, k)?;
    cfg.validate()?;
    let eval = stat.compile(space)?;
    let enumerate = cfg.enumerate(n, k);
    let weight = factorial_f64(k) / (1u64 << k) as f64
        * if enumerate { 1.0 } else { binomial_f64(n, k) };
    let tag = TAG_J | k as u64;
    collect(range, n, 0, |s, sc| {
        fill_outcome(space, &mut stream(cfg.seed, tag, Purpose::Outer, s), &mut sc.x);
        fill_outcome(space, &mut stream(cfg.seed, tag, Purpose::Copies, s), &mut sc.y);
        let mut subset_rng = stream(cfg.seed, tag, Purpose::Subset, s);
        let mut total = 0.0;
        let Scratch { x, y, work, .. } = sc;
        for_each_subset(n, k, enumerate, &mut subset_rng, |coords| {
            let d = iterated_difference(&eval, x, y, coords, work);
            total += d * d;
        });
        Ok(weight * total)
    })
}

/// Unbiased estimate of `E J_k` from squared iterated differences.
pub fn estimate_ej(space: &ProductSpace, stat: &Statistic, k: usize, cfg: &McConfig) -> Result<McEstimate> {
    let c = ej_contributions(space, stat, k, cfg, 0..cfg.outer_samples as u64)?;
    Ok(McEstimate::from_contributions(&c))
}

/// Per-sample contributions to the `E K_k` estimate for samples in `range`.
///
/// For a subset `I`, `E Var^(I) E[S | X_I] = Σ_{L ⊆ I} (-1)^{|I|-|L|}
/// E[(E[S | X_L])^2]`, and each squared conditional mean is estimated without
/// bias by `S(x_L, y) S(x_L, y')` with `y`, `y'` independent completions of
/// the coordinates outside `L`. The `L = ∅` term is the product of two
/// independent draws of `S`, unbiased for `(E S)^2`.
pub fn ek_contributions(
    space: &ProductSpace,
    stat: &Statistic,
    k: usize,
    cfg: &McConfig,
    range: Range<u64>,
) -> Result<Vec<f64>> {
    let n = space.n();
    check_order(n, k)?;
    cfg.validate()?;
    let eval = stat.compile(space)?;
    let enumerate = cfg.enumerate(n, k);
    let weight = factorial_f64(k) * if enumerate { 1.0 } else { binomial_f64(n, k) };
    let pairs = cfg.inner_pairs;
    let tag = TAG_K | k as u64;
    collect(range, n, pairs, |s, sc| {
        fill_outcome(space, &mut stream(cfg.seed, tag, Purpose::Outer, s), &mut sc.x);
        let mut completion_rng = stream(cfg.seed, tag, Purpose::Completion, s);
        for (a, b) in sc.completions.iter_mut() {
            fill_outcome(space, &mut completion_rng, a);
            fill_outcome(space, &mut completion_rng, b);
        }
        let mut subset_rng = stream(cfg.seed, tag, Purpose::Subset, s);
        let mut total = 0.0;
        let Scratch { x, work, completions, .. } = sc;
        for_each_subset(n, k, enumerate, &mut subset_rng, |coords| {
            let mut est = 0.0;
            for sub in 0u32..(1 << k) {
                let sign = if (k as u32 - sub.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
                let mut prod = 0.0;
                for (a, b) in completions.iter() {
                    work.copy_from_slice(a);
                    for (pos, &i) in coords.iter().enumerate() {
                        if sub & (1 << pos) != 0 {
                            work[i] = x[i];
                        }
                    }
                    let sa = eval.eval(work);
                    work.copy_from_slice(b);
                    for (pos, &i) in coords.iter().enumerate() {
                        if sub & (1 << pos) != 0 {
                            work[i] = x[i];
                        }
                    }
                    prod += sa * eval.eval(work);
                }
                est += sign * prod / pairs as f64;
            }
            total += est;
        });
        Ok(weight * total)
    })
}

/// Unbiased estimate of `E K_k`. May come out negative on finite samples;
/// the `negative` flag is set in that case and the value is left unclamped.
pub fn estimate_ek(space: &ProductSpace, stat: &Statistic, k: usize, cfg: &McConfig) -> Result<McEstimate> {
    let c = ek_contributions(space, stat, k, cfg, 0..cfg.outer_samples as u64)?;
    Ok(McEstimate::from_contributions(&c))
}

/// A point estimate with a propagated standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McValue {
    pub mean: f64,
    pub std_error: f64,
}

impl McValue {
    pub fn covers(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.std_error
    }
}

fn combine(terms: &[(f64, McEstimate)]) -> McValue {
    McValue {
        mean: terms.iter().map(|(c, e)| c * e.mean).sum(),
        std_error: terms
            .iter()
            .map(|(c, e)| (c * e.std_error).powi(2))
            .sum::<f64>()
            .sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McBracket {
    pub p: usize,
    #[serde(rename = "lower_J")]
    pub lower_j: McValue,
    #[serde(rename = "lower_JK")]
    pub lower_jk: McValue,
    #[serde(rename = "upper_JK")]
    pub upper_jk: McValue,
    #[serde(rename = "upper_J")]
    pub upper_j: McValue,
}

/// Bracket at depth `p` from independent estimates of each `E J_k` and
/// `E K_k`; standard errors add in quadrature.
pub fn estimate_bracket(space: &ProductSpace, stat: &Statistic, p: usize, cfg: &McConfig) -> Result<McBracket> {
    let n = space.n();
    let max = n / 2;
    if p == 0 || p > max {
        return Err(Error::DepthOutOfRange { p, max });
    }
    let signed = |k: usize| -> Result<(f64, McEstimate)> {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        Ok((sign / factorial_f64(k), estimate_ej(space, stat, k, cfg)?))
    };
    let odd: Vec<_> = (1..2 * p).map(signed).collect::<Result<_>>()?;
    let mut even = odd.clone();
    even.push(signed(2 * p)?);

    let upper_j = combine(&odd);
    let lower_j = combine(&even);
    let mut upper_terms = odd;
    upper_terms.push((-1.0 / factorial_f64(2 * p), estimate_ek(space, stat, 2 * p, cfg)?));
    let mut lower_terms = even;
    if 2 * p < n {
        lower_terms.push((1.0 / factorial_f64(2 * p + 1), estimate_ek(space, stat, 2 * p + 1, cfg)?));
    }
    Ok(McBracket {
        p,
        lower_j,
        lower_jk: combine(&lower_terms),
        upper_jk: combine(&upper_terms),
        upper_j,
    })
}

/// Estimates the upward bias `E J_1 - Var S` of the classical jackknife for a
/// symmetric statistic of iid coordinates.
///
/// Each sample draws `x` and one extra value `x̃`, forms `S_i` with `x_i`
/// replaced by `x̃` and `S_{n+1} = S(x)`, and contributes
/// `Σ (S_i - S̄)^2 - (S(x) - S(w))^2 / 2` for an independent draw `w`.
pub fn efron_stein_bias(space: &ProductSpace, stat: &Statistic, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    if let Some(i) = space.first_differing_coordinate() {
        return Err(Error::NotIdenticallyDistributed(i));
    }
    let n = space.n();
    let eval = stat.compile(space)?;
    let law = space.dist(0);
    let contribs = collect(0..cfg.outer_samples as u64, n, 1, |s, sc| {
        fill_outcome(space, &mut stream(cfg.seed, TAG_BIAS, Purpose::Outer, s), &mut sc.x);
        let extra = law.inverse_cdf(stream(cfg.seed, TAG_BIAS, Purpose::Copies, s).gen::<f64>());
        fill_outcome(space, &mut stream(cfg.seed, TAG_BIAS, Purpose::Reference, s), &mut sc.y);
        let mut values = Vec::with_capacity(n + 1);
        for i in 0..n {
            sc.work.copy_from_slice(&sc.x);
            sc.work[i] = extra;
            values.push(eval.eval(&sc.work));
        }
        let s_full = eval.eval(&sc.x);
        values.push(s_full);
        let j1 = classical_jackknife(&values)?;
        let d = s_full - eval.eval(&sc.y);
        Ok(j1 - d * d / 2.0)
    })?;
    Ok(McEstimate::from_contributions(&contribs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub k: usize,
    #[serde(flatten)]
    pub estimate: McEstimate,
}

/// Monte Carlo section of a run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub config: McConfig,
    #[serde(rename = "EJ")]
    pub ej: Vec<OrderEstimate>,
    #[serde(rename = "EK")]
    pub ek: Vec<OrderEstimate>,
    pub brackets: Vec<McBracket>,
}

impl McReport {
    /// Estimates every configured order and the brackets at `depths`. With
    /// `depths = None`, every `p` whose orders stay within the configured
    /// ones is included.
    pub fn run(space: &ProductSpace, stat: &Statistic, cfg: &McConfig, depths: Option<&[usize]>) -> Result<Self> {
        cfg.validate()?;
        let n = space.n();
        let orders = cfg.orders(n);
        let per_order = |f: fn(&ProductSpace, &Statistic, usize, &McConfig) -> Result<McEstimate>| {
            orders
                .iter()
                .map(|&k| Ok(OrderEstimate { k, estimate: f(space, stat, k, cfg)? }))
                .collect::<Result<Vec<_>>>()
        };
        let ej = per_order(estimate_ej)?;
        let ek = per_order(estimate_ek)?;
        let top = orders.iter().copied().max().unwrap_or(0);
        let default_depths: Vec<usize> = (1..=n / 2).filter(|p| 2 * p <= top).collect();
        let brackets = depths
            .unwrap_or(&default_depths)
            .iter()
            .map(|&p| estimate_bracket(space, stat, p, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(McReport {
            config: cfg.clone(),
            ej,
            ek,
            brackets,
        })
    }
}
