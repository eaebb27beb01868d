use crate::error::{Error, Result};

/// Allowed deviation of the probability total from 1 before renormalizing.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// A finite discrete law: `probs[j]` is the mass at `support[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates and renormalizes once so the probabilities sum to exactly 1
    /// in floating point (up to the rounding of the final division).
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        if support.len() != probs.len() {
            return Err(Error::LengthMismatch {
                support: support.len(),
                probs: probs.len(),
            });
        }
        if let Some(&v) = support.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSupport(v));
        }
        if let Some(&p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidProbability(p));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::ProbabilitySum {
                sum: total,
                tolerance: PROBABILITY_TOLERANCE,
            });
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // Inverse-CDF sampling must always land on a support point.
        if let Some(last) = cdf.last_mut() {
            *last = f64::INFINITY;
        }
        Ok(DiscreteDistribution {
            support,
            probs,
            cdf,
        })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::new(vec![value], vec![1.0])
    }

    pub fn uniform(support: Vec<f64>) -> Result<Self> {
        let m = support.len();
        if m == 0 {
            return Err(Error::EmptySupport);
        }
        Self::new(support, vec![1.0 / m as f64; m])
    }

    /// Uniform on `{-1, +1}`.
    pub fn rademacher() -> Self {
        Self::new(vec![-1.0, 1.0], vec![0.5, 0.5]).expect("valid law")
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.probs).map(|(x, p)| x * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * (x - m) * (x - m))
            .sum()
    }

    /// Support index selected by a uniform draw `u` in `[0, 1)`.
    pub fn inverse_cdf(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u)
    }
}
