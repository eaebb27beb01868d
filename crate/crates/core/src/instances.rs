//! Random problem instances for the property battery and self-check.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DiscreteDistribution, FieldTable, ProductSpace};

/// Shape of randomly generated instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub min_n: usize,
    pub max_n: usize,
    pub min_support: usize,
    pub max_support: usize,
    /// Every probability is at least this large.
    pub min_prob: f64,
    /// Table values are drawn uniformly from `[-value_bound, value_bound]`.
    pub value_bound: f64,
    /// Chance that a coordinate collapses to a point mass.
    pub point_mass_rate: f64,
    /// Chance that the whole statistic is constant.
    pub constant_rate: f64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            min_n: 1,
            max_n: 5,
            min_support: 2,
            max_support: 4,
            min_prob: 0.05,
            value_bound: 1.0,
            point_mass_rate: 0.0,
            constant_rate: 0.0,
        }
    }
}

/// A product space with an explicit table statistic.
#[derive(Clone, Debug)]
pub struct Instance {
    pub dists: Vec<DiscreteDistribution>,
    pub values: Vec<f64>,
}

impl Instance {
    pub fn space(&self) -> Result<Arc<ProductSpace>> {
        Ok(Arc::new(ProductSpace::new(self.dists.clone())?))
    }

    pub fn table(&self) -> Result<FieldTable> {
        FieldTable::new(self.space()?, self.values.clone())
    }
}

pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, size: usize, min_prob: f64) -> DiscreteDistribution {
    let mut support: Vec<f64> = (0..size).map(|_| rng.gen_range(-2.0..2.0)).collect();
    support.sort_by(f64::total_cmp);
    let raw: Vec<f64> = (0..size).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let free = 1.0 - min_prob * size as f64;
    let mut probs: Vec<f64> = raw.iter().map(|r| min_prob + free * r / total).collect();
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= s);
    DiscreteDistribution::new(support, probs).expect("generated law is valid")
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, params: &InstanceParams) -> Instance {
    let n = rng.gen_range(params.min_n..=params.max_n);
    let dists: Vec<DiscreteDistribution> = (0..n)
        .map(|_| {
            if rng.gen_bool(params.point_mass_rate) {
                DiscreteDistribution::point_mass(rng.gen_range(-2.0..2.0)).expect("finite")
            } else {
                let m = rng.gen_range(params.min_support..=params.max_support);
                random_distribution(rng, m, params.min_prob)
            }
        })
        .collect();
    let len: usize = dists.iter().map(DiscreteDistribution::len).product();
    let b = params.value_bound;
    let values = if rng.gen_bool(params.constant_rate) {
        vec![rng.gen_range(-b..=b); len]
    } else {
        (0..len).map(|_| rng.gen_range(-b..=b)).collect()
    };
    Instance { dists, values }
}

/// A permutation-invariant table on `n` iid coordinates: the value depends
/// only on the multiset of support indices.
pub fn random_symmetric_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    support: usize,
    min_prob: f64,
) -> Instance {
    let dist = random_distribution(rng, support, min_prob);
    let dists = vec![dist; n];
    let space = ProductSpace::new(dists.clone()).expect("small space");
    let mut by_multiset: HashMap<Vec<usize>, f64> = HashMap::new();
    let values = (0..space.len())
        .map(|idx| {
            let mut key = space.decode(idx);
            key.sort_unstable();
            *by_multiset.entry(key).or_insert_with(|| rng.gen_range(-1.0..=1.0))
        })
        .collect();
    Instance { dists, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = InstanceParams::default();
        for _ in 0..100 {
            let inst = random_instance(&mut rng, &p);
            assert!((1..=5).contains(&inst.dists.len()));
            for d in &inst.dists {
                assert!((2..=4).contains(&d.len()));
                assert!(d.probs().iter().all(|&q| q >= 0.05 - 1e-15));
            }
            assert!(inst.values.iter().all(|v| v.abs() <= 1.0));
            assert!(inst.table().is_ok());
        }
    }

    #[test]
    fn symmetric_instance_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inst = random_symmetric_instance(&mut rng, 3, 3, 0.05);
        let space = inst.space().unwrap();
        for idx in 0..space.len() {
            let mut d = space.decode(idx);
            d.reverse();
            assert_eq!(inst.values[idx], inst.values[space.encode(&d)]);
            d.swap(0, 1);
            assert_eq!(inst.values[idx], inst.values[space.encode(&d)]);
        }
    }
}
