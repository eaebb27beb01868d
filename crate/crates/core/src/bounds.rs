//! Two-sided variance brackets from alternating partial sums of `E J_k / k!`,
//! the exact variance identities, and the lowest-degree bound.

use serde::{Deserialize, Serialize};

use crate::combinatorics::factorial;
use crate::conditional::CondExpCache;
use crate::error::{Error, Result};
use crate::hoeffding::{spectral_check, HoeffdingDecomposition, SpectralResiduals};
use crate::jackknife::JackknifeSpectrum;

/// Identities are checked at `IDENTITY_TOLERANCE * scale`.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;
/// Inequalities may be violated by at most `INEQUALITY_TOLERANCE * scale`.
pub const INEQUALITY_TOLERANCE: f64 = 1e-10;
/// Spectrum entries below `ZERO_SNAP * scale` are reported as 0.
pub const ZERO_SNAP: f64 = 1e-12;

/// Partial-sum bracket at depth `p`.
///
/// `lower_j` and `upper_j` truncate `Σ (-1)^{k+1} E J_k / k!` after `2p` and
/// `2p - 1` terms. The `jk` variants tighten them with `+E K_{2p+1}/(2p+1)!`
/// and `-E K_{2p}/(2p)!`, where `K_{n+1}` is taken as 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub p: usize,
    #[serde(rename = "lower_J")]
    pub lower_j: f64,
    #[serde(rename = "lower_JK")]
    pub lower_jk: f64,
    #[serde(rename = "upper_JK")]
    pub upper_jk: f64,
    #[serde(rename = "upper_J")]
    pub upper_j: f64,
}

impl Bracket {
    /// How far `var` falls outside the chain
    /// `lower_j <= lower_jk <= var <= upper_jk <= upper_j` (0 when inside).
    pub fn violation(&self, var: f64) -> f64 {
        let chain = [self.lower_j, self.lower_jk, var, self.upper_jk, self.upper_j];
        chain.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max)
    }
}

fn alternating(jack: &JackknifeSpectrum, terms: usize) -> f64 {
    (1..=terms)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * jack.j(k) / factorial(k) as f64
        })
        .sum()
}

pub fn max_depth(n: usize) -> usize {
    n / 2
}

pub fn partial_sum_bracket(jack: &JackknifeSpectrum, p: usize) -> Result<Bracket> {
    let max = max_depth(jack.n);
    if p == 0 || p > max {
        return Err(Error::DepthOutOfRange { p, max });
    }
    let lower_j = alternating(jack, 2 * p);
    let upper_j = alternating(jack, 2 * p - 1);
    let lower_jk = lower_j + jack.k(2 * p + 1) / factorial(2 * p + 1) as f64;
    let upper_jk = upper_j - jack.k(2 * p) / factorial(2 * p) as f64;
    Ok(Bracket {
        p,
        lower_j,
        lower_jk,
        upper_jk,
        upper_j,
    })
}

/// The two short chains that hold for every `n`:
/// `0 <= E K_1 <= Var S <= E J_1` and
/// `0 <= E K_2 / 2 <= E J_1 - Var S <= E J_2 / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseChain {
    pub ek1: f64,
    pub var: f64,
    pub ej1: f64,
    pub half_ek2: f64,
    pub bias: f64,
    pub half_ej2: f64,
}

impl BaseChain {
    pub fn new(var: f64, jack: &JackknifeSpectrum) -> Self {
        BaseChain {
            ek1: jack.k(1),
            var,
            ej1: jack.j(1),
            half_ek2: jack.k(2) / 2.0,
            bias: jack.j(1) - var,
            half_ej2: jack.j(2) / 2.0,
        }
    }

    pub fn violation(&self) -> f64 {
        let first = [0.0, self.ek1, self.var, self.ej1];
        let second = [0.0, self.half_ek2, self.bias, self.half_ej2];
        first
            .windows(2)
            .chain(second.windows(2))
            .map(|w| (w[0] - w[1]).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Residuals of the exact variance identities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VarianceIdentities {
    /// `Var S - Σ_k (-1)^{k+1} E J_k / k!`
    pub alternating_j: f64,
    /// `Var S - (E J_1 - Σ_{k>=2} (k-1) E K_k / k!)`
    pub j1_minus_k: f64,
    /// `Var S - Σ_k E K_k / k!`
    pub k_sum: f64,
}

impl VarianceIdentities {
    pub fn max(&self) -> f64 {
        self.alternating_j.abs().max(self.j1_minus_k.abs()).max(self.k_sum.abs())
    }
}

pub fn variance_identities(var: f64, jack: &JackknifeSpectrum) -> VarianceIdentities {
    let n = jack.n;
    let kf = |k: usize| factorial(k) as f64;
    let j1_minus_k = jack.j(1) - (2..=n).map(|k| (k - 1) as f64 * jack.k(k) / kf(k)).sum::<f64>();
    let k_sum: f64 = (1..=n).map(|k| jack.k(k) / kf(k)).sum();
    VarianceIdentities {
        alternating_j: var - alternating(jack, n),
        j1_minus_k: var - j1_minus_k,
        k_sum: var - k_sum,
    }
}

/// Largest residual of `E R_1 = Var S`, `E R_k = E J_{k-1}/(k-1)! - E R_{k-1}`
/// for `2 <= k <= n`, and `n! E R_n = E J_n`.
pub fn proof_recursion_check(var: f64, jack: &JackknifeSpectrum) -> f64 {
    let n = jack.n;
    let start = (jack.r(1) - var).abs();
    let chain = (2..=n)
        .map(|k| (jack.r(k) - (jack.j(k - 1) / factorial(k - 1) as f64 - jack.r(k - 1))).abs())
        .fold(0.0, f64::max);
    let end = (factorial(n) as f64 * jack.r(n) - jack.j(n)).abs();
    start.max(chain).max(end)
}

/// Bound for statistics whose spectrum vanishes below degree `d`:
/// `E K_d / d! <= Var S <= E J_d / d!`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBound {
    pub d: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Finds the lowest degree `d` with non-negligible `Var f_d` and checks the
/// bound. `None` for constant statistics.
pub fn degree_bound(
    var: f64,
    spectrum: &[f64],
    jack: &JackknifeSpectrum,
    scale: f64,
) -> Result<Option<DegreeBound>> {
    let Some(pos) = spectrum.iter().position(|&v| v > ZERO_SNAP * scale) else {
        return Ok(None);
    };
    let d = pos + 1;
    let df = factorial(d) as f64;
    let bound = DegreeBound {
        d,
        lower: jack.k(d) / df,
        upper: jack.j(d) / df,
    };
    let tol = INEQUALITY_TOLERANCE * scale;
    if bound.lower > var + tol || var > bound.upper + tol {
        return Err(Error::Consistency(format!(
            "degree-{d} bound violated: {} <= {var} <= {} fails",
            bound.lower, bound.upper
        )));
    }
    Ok(Some(bound))
}

/// Every identity residual reported for an exact run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    #[serde(flatten)]
    pub variance: VarianceIdentities,
    #[serde(flatten)]
    pub spectral: SpectralResiduals,
    pub r_recursion: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.variance.max().max(self.spectral.max()).max(self.r_recursion)
    }
}

/// Exact-engine summary of one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n: usize,
    pub scale: f64,
    pub mean: f64,
    pub var_exact: f64,
    #[serde(rename = "EJ")]
    pub ej: Vec<f64>,
    #[serde(rename = "EJ_raw")]
    pub ej_raw: Vec<f64>,
    #[serde(rename = "EK")]
    pub ek: Vec<f64>,
    #[serde(rename = "EK_raw")]
    pub ek_raw: Vec<f64>,
    #[serde(rename = "ER")]
    pub er: Vec<f64>,
    #[serde(rename = "ER_raw")]
    pub er_raw: Vec<f64>,
    pub spectrum: Vec<f64>,
    pub spectrum_raw: Vec<f64>,
    pub brackets: Vec<Bracket>,
    pub p0_chain: BaseChain,
    pub identity_residuals: IdentityResiduals,
    pub degree_bound: Option<DegreeBound>,
}

impl BoundsReport {
    /// Runs the exact engine. `depths` selects bracket depths; `None` means
    /// every `p` in `1..=n/2`.
    pub fn exact(cache: &CondExpCache, depths: Option<&[usize]>) -> Result<Self> {
        let jack = JackknifeSpectrum::compute(cache)?;
        let hoeffding = HoeffdingDecomposition::compute(cache)?;
        Self::assemble(cache, &jack, &hoeffding.spectrum, depths)
    }

    pub fn assemble(
        cache: &CondExpCache,
        jack: &JackknifeSpectrum,
        spectrum: &[f64],
        depths: Option<&[usize]>,
    ) -> Result<Self> {
        let n = cache.n();
        let scale = cache.scale();
        let var = cache.base().variance();
        let all: Vec<usize> = (1..=max_depth(n)).collect();
        let brackets = depths
            .unwrap_or(&all)
            .iter()
            .map(|&p| partial_sum_bracket(jack, p))
            .collect::<Result<Vec<_>>>()?;
        let clamp = |xs: &[f64]| xs.iter().map(|v| v.max(0.0)).collect::<Vec<_>>();
        let snapped = spectrum
            .iter()
            .map(|&v| if v.abs() < ZERO_SNAP * scale { 0.0 } else { v.max(0.0) })
            .collect();
        Ok(BoundsReport {
            n,
            scale,
            mean: cache.base().expectation(),
            var_exact: var,
            ej: clamp(&jack.ej),
            ej_raw: jack.ej.clone(),
            ek: clamp(&jack.ek),
            ek_raw: jack.ek.clone(),
            er: clamp(&jack.er),
            er_raw: jack.er.clone(),
            spectrum: snapped,
            spectrum_raw: spectrum.to_vec(),
            brackets,
            p0_chain: BaseChain::new(var, jack),
            identity_residuals: IdentityResiduals {
                variance: variance_identities(var, jack),
                spectral: spectral_check(spectrum, jack),
                r_recursion: proof_recursion_check(var, jack),
            },
            degree_bound: degree_bound(var, spectrum, jack, scale)?,
        })
    }

    /// Largest violation of any bracket chain or base chain.
    pub fn inequality_violation(&self) -> f64 {
        self.brackets
            .iter()
            .map(|b| b.violation(self.var_exact))
            .fold(self.p0_chain.violation(), f64::max)
    }

    pub fn identities_hold(&self) -> bool {
        self.identity_residuals.max() <= IDENTITY_TOLERANCE * self.scale
    }

    pub fn inequalities_hold(&self) -> bool {
        self.inequality_violation() <= INEQUALITY_TOLERANCE * self.scale
    }
}
