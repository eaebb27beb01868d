//! Randomized identity battery.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::InstanceConfig;
use super::report::to_json;
use crate::bounds::{BoundsReport, IDENTITY_TOLERANCE, INEQUALITY_TOLERANCE};
use crate::combinatorics::factorial_f64;
use crate::conditional::CondExpCache;
use crate::error::Result;
use crate::hoeffding::HoeffdingDecomposition;
use crate::index_set::IndexSet;
use crate::instances::{random_instance, Instance, InstanceParams};
use crate::jackknife::{iterated_difference_moment, JackknifeSpectrum};
use crate::model::{FieldTable, ProductSpace};

/// Extended spaces larger than this skip the iterated-difference check.
pub const DIFFERENCE_CHECK_CAP: u128 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Identity,
    Inequality,
}

impl Kind {
    pub fn tolerance(self) -> f64 {
        match self {
            Kind::Identity => IDENTITY_TOLERANCE,
            Kind::Inequality => INEQUALITY_TOLERANCE,
        }
    }
}

pub const CHECKS: [(&str, Kind); 17] = [
    ("alternating_j", Kind::Identity),
    ("j1_minus_k", Kind::Identity),
    ("k_sum", Kind::Identity),
    ("j_from_spectrum", Kind::Identity),
    ("k_from_spectrum", Kind::Identity),
    ("j_from_k", Kind::Identity),
    ("two_index_split", Kind::Identity),
    ("iterated_difference", Kind::Identity),
    ("r_recursion", Kind::Identity),
    ("reconstruction", Kind::Identity),
    ("degeneracy", Kind::Identity),
    ("orthogonality", Kind::Identity),
    ("recursion_vs_ie", Kind::Identity),
    ("superset_sum", Kind::Identity),
    ("symmetric_order", Kind::Identity),
    ("brackets", Kind::Inequality),
    ("base_chain", Kind::Inequality),
];

/// Residuals of one instance, each divided by `max(1, E S^2)`, in the order
/// of [`CHECKS`].
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceResiduals(pub [f64; CHECKS.len()]);

impl InstanceResiduals {
    /// First check whose residual exceeds its tolerance.
    pub fn first_failure(&self) -> Option<(&'static str, f64)> {
        CHECKS
            .iter()
            .zip(self.0)
            .find(|((_, kind), r)| r.is_nan() || *r > kind.tolerance())
            .map(|((name, _), r)| (*name, r))
    }

    pub fn get(&self, name: &str) -> f64 {
        let pos = CHECKS.iter().position(|(n, _)| *n == name).expect("known check");
        self.0[pos]
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    /// Flips the sign pattern of the alternating series, so the battery can be
    /// shown to catch a broken identity.
    #[doc(hidden)]
    pub fault_injection: bool,
}

fn max_diff(a: &FieldTable, b: &FieldTable) -> f64 {
    a.max_abs_diff(b)
}

/// Evaluates every check on one statistic.
pub fn check_instance(cache: &CondExpCache, opts: Options) -> Result<InstanceResiduals> {
    let n = cache.n();
    let space = cache.space();
    let scale = cache.scale();
    let jack = JackknifeSpectrum::compute(cache)?;
    let hoeffding = HoeffdingDecomposition::compute(cache)?;
    let report = BoundsReport::assemble(cache, &jack, &hoeffding.spectrum, None)?;
    let var = report.var_exact;
    let ids = report.identity_residuals;

    let flip = if opts.fault_injection { -1.0 } else { 1.0 };
    let alternating: f64 = (1..=n)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -flip };
            sign * jack.j(k) / factorial_f64(k)
        })
        .sum();

    let mut two_index = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let pair = IndexSet::singleton(i).with(j);
            let mean = cache.cond_expect(pair)?;
            let spread = cache
                .base()
                .zip_with(&mean, |a, b| (a - b) * (a - b))
                .integrate(pair);
            let vi = cache.iterated_variance_of(IndexSet::singleton(i), IndexSet::singleton(j))?;
            let vj = cache.iterated_variance_of(IndexSet::singleton(j), IndexSet::singleton(i))?;
            let rhs = spread.zip_with(&vi, |a, b| a - b).zip_with(&vj, |a, b| a - b);
            two_index = two_index.max(max_diff(&cache.iterated_variance(pair)?, &rhs));
        }
    }

    let stat = cache.base().to_statistic();
    let mut difference = 0.0f64;
    for set in IndexSet::all(n).skip(1) {
        let extended = set
            .iter()
            .fold(space.num_outcomes(), |acc, i| acc.saturating_mul(space.radix(i) as u128));
        if extended > DIFFERENCE_CHECK_CAP {
            continue;
        }
        let moment = iterated_difference_moment(space, &stat, set)?;
        let direct = cache.expected_iterated_variance(set, IndexSet::EMPTY)?;
        difference = difference.max((moment / (1u64 << set.len()) as f64 - direct).abs());
    }

    let reconstruction = match hoeffding.reconstruct() {
        Some(t) => max_diff(&t, cache.base()),
        None => cache.base().map(|v| v - hoeffding.mean).max_abs(),
    };

    let mut recursion_vs_ie = 0.0f64;
    let mut order = 0.0f64;
    for set in IndexSet::all(n).skip(1) {
        let rec = cache.iterated_variance(set)?;
        recursion_vs_ie = recursion_vs_ie.max(max_diff(&rec, &cache.iterated_variance_ie(set)?));
        let mut reversed: Vec<usize> = set.iter().collect();
        reversed.reverse();
        order = order.max(max_diff(&rec, &cache.iterated_variance_ordered(&reversed)?));
    }

    let raw = [
        (var - alternating).abs(),
        ids.variance.j1_minus_k.abs(),
        ids.variance.k_sum.abs(),
        ids.spectral.j_from_spectrum,
        ids.spectral.k_from_spectrum,
        ids.spectral.j_from_k,
        two_index,
        difference,
        ids.r_recursion,
        reconstruction,
        hoeffding.degeneracy_residual(),
        hoeffding.orthogonality_residual(),
        recursion_vs_ie,
        hoeffding.superset_residual(cache)?,
        order,
        report.brackets.iter().map(|b| b.violation(var)).fold(0.0, f64::max),
        report.p0_chain.violation(),
    ];
    Ok(InstanceResiduals(raw.map(|r| r / scale)))
}

pub fn check_table(table: FieldTable, opts: Options) -> Result<InstanceResiduals> {
    check_instance(&CondExpCache::new(table)?, opts)
}

/// Generator used by the self-check: the acceptance shape plus occasional
/// point masses and constant statistics.
pub fn selfcheck_params() -> InstanceParams {
    InstanceParams {
        point_mass_rate: 0.1,
        constant_rate: 0.05,
        ..InstanceParams::default()
    }
}

#[derive(Clone, Debug)]
pub struct Failure {
    pub instance: usize,
    pub check: String,
    pub residual: f64,
    pub replay: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Summary {
    pub instances: usize,
    pub seed: u64,
    pub max: [f64; CHECKS.len()],
    pub failure: Option<Failure>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn max_identity_residual(&self) -> f64 {
        CHECKS
            .iter()
            .zip(self.max)
            .filter(|((_, k), _)| *k == Kind::Identity)
            .map(|(_, r)| r)
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20} {:>12} {:>10}  status", "check", "max resid", "tolerance")?;
        for ((name, kind), r) in CHECKS.iter().zip(self.max) {
            let status = if r <= kind.tolerance() { "ok" } else { "FAIL" };
            writeln!(f, "{name:<20} {r:>12.3e} {:>10.0e}  {status}", kind.tolerance())?;
        }
        write!(f, "{} instances, seed {}", self.instances, self.seed)?;
        if let Some(fail) = &self.failure {
            write!(
                f,
                "\nfirst failure: instance {} ({} = {:.3e})",
                fail.instance, fail.check, fail.residual
            )?;
            if let Some(p) = &fail.replay {
                write!(f, ", replay config written to {}", p.display())?;
            }
        }
        Ok(())
    }
}

fn replay_path(dir: &Path, seed: u64, index: usize) -> PathBuf {
    dir.join(format!("selfcheck-failure-seed{seed}-instance{index}.json"))
}

fn write_replay(dir: &Path, seed: u64, index: usize, inst: &Instance) -> Option<PathBuf> {
    let path = replay_path(dir, seed, index);
    let cfg = InstanceConfig::exact_table(&inst.dists, inst.values.clone());
    std::fs::write(&path, to_json(&cfg)).ok().map(|_| path)
}

/// Runs the battery on `instances` random statistics. Stops at the first
/// failing instance and writes it to `replay_dir` as a run configuration.
pub fn selfcheck(instances: usize, seed: u64, replay_dir: &Path, opts: Options) -> Summary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = selfcheck_params();
    let mut max = [0.0f64; CHECKS.len()];
    let mut failure = None;
    for index in 0..instances {
        let inst = random_instance(&mut rng, &params);
        let outcome = inst
            .table()
            .and_then(|t| check_table(t, opts));
        let (check, residual) = match outcome {
            Ok(res) => {
                for (m, r) in max.iter_mut().zip(&res.0) {
                    *m = if r.is_nan() { f64::NAN } else { m.max(*r) };
                }
                match res.first_failure() {
                    None => continue,
                    Some((name, r)) => (name.to_string(), r),
                }
            }
            Err(e) => (format!("error: {e}"), f64::NAN),
        };
        failure = Some(Failure {
            instance: index,
            check,
            residual,
            replay: write_replay(replay_dir, seed, index, &inst),
        });
        break;
    }
    Summary {
        instances,
        seed,
        max,
        failure,
    }
}

/// Runs the battery on the statistic of a configuration file.
pub fn check_config(cfg: &InstanceConfig) -> Result<InstanceResiduals> {
    let space = Arc::new(ProductSpace::new(cfg.laws()?)?);
    let cache = CondExpCache::from_statistic(&cfg.statistic, &space)?;
    check_instance(&cache, Options::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_battery_passes() {
        let dir = std::env::temp_dir();
        let s = selfcheck(25, 7, &dir, Options::default());
        assert!(s.passed(), "{s}");
        assert!(s.max_identity_residual() <= 1e-9);
    }

    #[test]
    fn injected_fault_is_caught() {
        let dir = tempfile::tempdir().unwrap();
        let s = selfcheck(25, 7, dir.path(), Options { fault_injection: true });
        let fail = s.failure.expect("sign flip must be detected");
        assert_eq!(fail.check, "alternating_j");
        let replay = fail.replay.expect("replay written");
        let cfg = InstanceConfig::parse(&std::fs::read_to_string(replay).unwrap()).unwrap();
        assert!(check_config(&cfg).unwrap().first_failure().is_none());
    }
}
