mod common;

use std::sync::Arc;

use approx::assert_abs_diff_eq;
use ijack::instances::{random_instance, InstanceParams};
use ijack::{BoundsReport, CondExpCache, FieldTable, HoeffdingDecomposition, IndexSet, JackknifeSpectrum, ProductSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::Brute;

fn cache(dists: &[ijack::DiscreteDistribution], values: &[f64]) -> CondExpCache {
    let space = Arc::new(ProductSpace::new(dists.to_vec()).unwrap());
    CondExpCache::new(FieldTable::new(space, values.to_vec()).unwrap()).unwrap()
}

#[test]
fn cache_matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let params = InstanceParams { max_n: 4, ..Default::default() };
    for _ in 0..40 {
        let inst = random_instance(&mut rng, &params);
        let brute = Brute::new(&inst.dists);
        let c = cache(&inst.dists, &inst.values);
        let n = c.n();
        for mask in 1u32..1 << n {
            let set = IndexSet::from_bits(mask);
            let coords: Vec<usize> = set.iter().collect();
            let lib = c.iterated_variance(set).unwrap();
            let reference = brute.iterated_variance(&inst.values, &coords);
            for (a, b) in lib.values().iter().zip(&reference) {
                assert_abs_diff_eq!(*a, b.max(0.0), epsilon = 1e-12);
            }
            let integrated = c.cond_expect(set).unwrap();
            for (a, b) in integrated.values().iter().zip(brute.integrate(&inst.values, &coords)) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
        let jack = JackknifeSpectrum::compute(&c).unwrap();
        let spectrum = HoeffdingDecomposition::compute(&c).unwrap().spectrum;
        let reference = brute.spectrum(&inst.values);
        for k in 1..=n {
            assert_abs_diff_eq!(jack.j(k), brute.ej(&inst.values, k), epsilon = 1e-11);
            assert_abs_diff_eq!(jack.k(k), brute.ek(&inst.values, k), epsilon = 1e-11);
            assert_abs_diff_eq!(spectrum[k - 1], reference[k - 1], epsilon = 1e-12);
        }
        assert_abs_diff_eq!(c.base().variance(), brute.variance(&inst.values), epsilon = 1e-12);
    }
}

#[test]
fn fixtures_match_hand_values() {
    let cases = [
        (common::rad2_prod(), 1.0, vec![2.0, 2.0], vec![0.0, 2.0], vec![0.0, 1.0]),
        (common::rad2_sum(), 2.0, vec![2.0, 0.0], vec![2.0, 0.0], vec![2.0, 0.0]),
        (common::rad3_u2(), 3.0, vec![6.0, 6.0, 0.0], vec![0.0, 6.0, 0.0], vec![0.0, 3.0, 0.0]),
    ];
    for ((dists, values), var, ej, ek, spectrum) in cases {
        let brute = Brute::new(&dists);
        let report = BoundsReport::exact(&cache(&dists, &values), None).unwrap();
        assert_abs_diff_eq!(report.var_exact, var, epsilon = 1e-12);
        assert_abs_diff_eq!(brute.variance(&values), var, epsilon = 1e-12);
        for k in 0..ej.len() {
            assert_abs_diff_eq!(report.ej[k], ej[k], epsilon = 1e-12);
            assert_abs_diff_eq!(report.ek[k], ek[k], epsilon = 1e-12);
            assert_abs_diff_eq!(report.spectrum[k], spectrum[k], epsilon = 1e-12);
            assert_abs_diff_eq!(brute.ej(&values, k + 1), ej[k], epsilon = 1e-12);
            assert_abs_diff_eq!(brute.ek(&values, k + 1), ek[k], epsilon = 1e-12);
        }
    }
}

#[test]
fn u2_degree_bound_is_attained() {
    let (dists, values) = common::rad3_u2();
    let report = BoundsReport::exact(&cache(&dists, &values), None).unwrap();
    let bound = report.degree_bound.unwrap();
    assert_eq!(bound.d, 2);
    assert_abs_diff_eq!(bound.upper, 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(bound.lower, 3.0, epsilon = 1e-12);
}
