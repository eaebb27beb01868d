use std::sync::OnceLock;

use super::DiscreteDistribution;
use crate::error::{Error, Result};

/// Default cap on the number of joint outcomes of an enumerable space.
pub const DEFAULT_OUTCOME_CAP: u128 = 1 << 24;

/// Independent coordinates `X_0, .., X_{n-1}` with the product law.
#[derive(Debug)]
pub struct ProductSpace {
    dists: Vec<DiscreteDistribution>,
    strides: Vec<usize>,
    outcomes: u128,
    weights: OnceLock<Vec<f64>>,
}

impl ProductSpace {
    /// A space whose outcome count is at most [`DEFAULT_OUTCOME_CAP`].
    pub fn new(dists: Vec<DiscreteDistribution>) -> Result<Self> {
        Self::with_cap(dists, DEFAULT_OUTCOME_CAP)
    }

    /// Like [`ProductSpace::new`] with a caller-chosen outcome cap. Spaces
    /// above [`DEFAULT_OUTCOME_CAP`] can still be sampled but not tabulated.
    pub fn with_cap(dists: Vec<DiscreteDistribution>, cap: u128) -> Result<Self> {
        if dists.is_empty() {
            return Err(Error::NoCoordinates);
        }
        let outcomes = dists
            .iter()
            .try_fold(1u128, |acc, d| acc.checked_mul(d.len() as u128))
            .unwrap_or(u128::MAX);
        if outcomes > cap {
            return Err(Error::OutcomeOverflow {
                count: outcomes,
                cap,
            });
        }
        let mut strides = Vec::with_capacity(dists.len());
        let mut stride = 1usize;
        for d in &dists {
            strides.push(stride);
            stride = stride.saturating_mul(d.len());
        }
        Ok(ProductSpace {
            dists,
            strides,
            outcomes,
            weights: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.dists.len()
    }

    pub fn dists(&self) -> &[DiscreteDistribution] {
        &self.dists
    }

    pub fn dist(&self, i: usize) -> &DiscreteDistribution {
        &self.dists[i]
    }

    pub fn radix(&self, i: usize) -> usize {
        self.dists[i].len()
    }

    pub fn stride(&self, i: usize) -> usize {
        self.strides[i]
    }

    /// Joint outcome count (saturating).
    pub fn num_outcomes(&self) -> u128 {
        self.outcomes
    }

    /// Errors unless the space is small enough to tabulate.
    pub fn ensure_enumerable(&self) -> Result<usize> {
        if self.outcomes > DEFAULT_OUTCOME_CAP {
            return Err(Error::OutcomeOverflow {
                count: self.outcomes,
                cap: DEFAULT_OUTCOME_CAP,
            });
        }
        Ok(self.outcomes as usize)
    }

    /// Number of joint outcomes. Only meaningful for enumerable spaces.
    pub fn len(&self) -> usize {
        usize::try_from(self.outcomes).unwrap_or(usize::MAX)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Joint probability of every outcome, in enumeration order.
    ///
    /// Panics if the space is not enumerable.
    pub fn weights(&self) -> &[f64] {
        self.weights.get_or_init(|| {
            let len = self.ensure_enumerable().expect("space is not enumerable");
            let mut w = vec![1.0; len];
            for (i, d) in self.dists.iter().enumerate() {
                let stride = self.strides[i];
                let radix = d.len();
                for (idx, slot) in w.iter_mut().enumerate() {
                    *slot *= d.probs()[(idx / stride) % radix];
                }
            }
            w
        })
    }

    /// Support index of coordinate `i` in outcome `outcome`.
    pub fn digit(&self, outcome: usize, i: usize) -> usize {
        (outcome / self.strides[i]) % self.dists[i].len()
    }

    /// Support indices of every coordinate of `outcome`.
    pub fn decode(&self, outcome: usize) -> Vec<usize> {
        (0..self.n()).map(|i| self.digit(outcome, i)).collect()
    }

    /// Outcome index for per-coordinate support indices.
    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.n());
        digits
            .iter()
            .zip(&self.strides)
            .map(|(d, s)| d * s)
            .sum()
    }

    /// Support values of `outcome`.
    pub fn values(&self, outcome: usize) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.dists[i].support()[self.digit(outcome, i)])
            .collect()
    }

    /// True when every coordinate has the same law.
    pub fn is_identically_distributed(&self) -> bool {
        self.first_differing_coordinate().is_none()
    }

    pub(crate) fn first_differing_coordinate(&self) -> Option<usize> {
        let first = &self.dists[0];
        self.dists.iter().position(|d| d != first)
    }
}

/// Advances mixed-radix `digits` (coordinate 0 fastest). Returns false after
/// wrapping past the last outcome.
pub(crate) fn advance(digits: &mut [usize], radices: impl Fn(usize) -> usize) -> bool {
    for (i, d) in digits.iter_mut().enumerate() {
        *d += 1;
        if *d < radices(i) {
            return true;
        }
        *d = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rademacher_coordinates() {
        let s = ProductSpace::new(vec![DiscreteDistribution::rademacher(); 2]).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.weights(), &[0.25; 4]);
        assert_eq!(s.values(1), vec![1.0, -1.0]);
        assert_eq!(s.values(2), vec![-1.0, 1.0]);
    }

    #[test]
    fn point_mass_space_has_single_outcome() {
        let s = ProductSpace::new(vec![DiscreteDistribution::point_mass(3.0).unwrap()]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.weights(), &[1.0]);
        assert_eq!(s.values(0), vec![3.0]);
    }

    #[test]
    fn cap_is_enforced() {
        let err = ProductSpace::new(vec![DiscreteDistribution::rademacher(); 25]).unwrap_err();
        assert!(matches!(
            err,
            Error::OutcomeOverflow {
                count: 33_554_432,
                ..
            }
        ));
        assert!(ProductSpace::new(vec![DiscreteDistribution::rademacher(); 24]).is_ok());
        assert!(matches!(ProductSpace::new(vec![]), Err(Error::NoCoordinates)));
    }

    #[test]
    fn large_spaces_can_be_built_for_sampling() {
        let s = ProductSpace::with_cap(vec![DiscreteDistribution::rademacher(); 200], u128::MAX)
            .unwrap();
        assert_eq!(s.num_outcomes(), u128::MAX);
        assert!(s.ensure_enumerable().is_err());
    }

    #[test]
    fn encode_decode_agree() {
        let d3 = DiscreteDistribution::uniform(vec![0.0, 1.0, 2.0]).unwrap();
        let s = ProductSpace::new(vec![d3, DiscreteDistribution::rademacher(), DiscreteDistribution::uniform(vec![5.0; 4]).unwrap()]).unwrap();
        let mut digits = vec![0; 3];
        let mut idx = 0;
        loop {
            assert_eq!(s.encode(&digits), idx);
            assert_eq!(s.decode(idx), digits);
            idx += 1;
            if !advance(&mut digits, |i| s.radix(i)) {
                break;
            }
        }
        assert_eq!(idx, s.len());
    }
}
