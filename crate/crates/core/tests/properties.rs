use std::sync::Arc;

use ijack::bounds::{max_depth, partial_sum_bracket};
use ijack::{CondExpCache, DiscreteDistribution, FieldTable, IndexSet, JackknifeSpectrum, ProductSpace};
use proptest::prelude::*;

fn law() -> impl Strategy<Value = DiscreteDistribution> {
    (2usize..=3).prop_flat_map(|m| {
        (
            prop::collection::vec(-3.0f64..3.0, m),
            prop::collection::vec(0.05f64..1.0, m),
        )
            .prop_map(|(support, raw)| {
                let total: f64 = raw.iter().sum();
                let probs = raw.iter().map(|p| p / total).collect();
                DiscreteDistribution::new(support, probs).unwrap()
            })
    })
}

fn instance() -> impl Strategy<Value = (Vec<DiscreteDistribution>, Vec<f64>)> {
    prop::collection::vec(law(), 1..=4).prop_flat_map(|dists| {
        let len: usize = dists.iter().map(DiscreteDistribution::len).product();
        (Just(dists), prop::collection::vec(-1.0f64..1.0, len))
    })
}

fn cache(dists: Vec<DiscreteDistribution>, values: Vec<f64>) -> CondExpCache {
    let space = Arc::new(ProductSpace::new(dists).unwrap());
    CondExpCache::new(FieldTable::new(space, values).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iterated_variances_are_nonnegative((dists, values) in instance()) {
        let c = cache(dists, values);
        for set in IndexSet::all(c.n()).skip(1) {
            prop_assert!(c.iterated_variance(set).unwrap().min() >= 0.0);
        }
    }

    #[test]
    fn affine_maps_scale_the_spectrum((dists, values) in instance(), a in -3.0f64..3.0, b in -5.0f64..5.0) {
        let base = JackknifeSpectrum::compute(&cache(dists.clone(), values.clone())).unwrap();
        let moved = JackknifeSpectrum::compute(&cache(dists, values.iter().map(|v| a * v + b).collect())).unwrap();
        for k in 1..=base.n {
            prop_assert!((moved.j(k) - a * a * base.j(k)).abs() <= 1e-9 * (1.0 + base.j(k)) * 25.0);
            prop_assert!((moved.k(k) - a * a * base.k(k)).abs() <= 1e-9 * (1.0 + base.k(k)) * 25.0);
        }
    }

    #[test]
    fn brackets_are_nested((dists, values) in instance()) {
        let c = cache(dists, values);
        let jack = JackknifeSpectrum::compute(&c).unwrap();
        let tol = 1e-10 * c.scale();
        let mut prev: Option<(f64, f64)> = None;
        for p in 1..=max_depth(c.n()) {
            let b = partial_sum_bracket(&jack, p).unwrap();
            if let Some((lo, hi)) = prev {
                prop_assert!(b.lower_j >= lo - tol && b.upper_j <= hi + tol);
            }
            prev = Some((b.lower_j, b.upper_j));
        }
    }

    #[test]
    fn table_statistic_round_trips((dists, values) in instance()) {
        let space = Arc::new(ProductSpace::new(dists).unwrap());
        let table = FieldTable::new(space.clone(), values).unwrap();
        let again = ijack::tabulate(&table.to_statistic(), &space).unwrap();
        prop_assert_eq!(table.values(), again.values());
    }
}
