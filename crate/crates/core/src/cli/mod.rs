//! Command-line front end: configuration, report encoding, the run driver and
//! the self-check battery.

pub mod config;
pub mod report;
pub mod selfcheck;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::bounds::BoundsReport;
use crate::conditional::CondExpCache;
use crate::error::Error;
use crate::mc::McReport;
use crate::model::ProductSpace;

pub use config::{ConfigError, Engine, InstanceConfig, OutputFormat};
pub use report::{format_g17, parse_report, to_csv, to_json, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CHECK: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {error}", path.display())]
    Config { path: PathBuf, error: ConfigError },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Engine(#[from] Error),

    #[error("identity check failed: {0}")]
    Check(String),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(e) if e.is_consistency() => EXIT_CHECK,
            CliError::Check(_) => EXIT_CHECK,
            _ => EXIT_INPUT,
        }
    }
}

/// Command-line overrides applied on top of a configuration.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub engine: Option<Engine>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Runs the configured engines. When the engine override adds Monte Carlo
/// to a config without an `mc` section, default settings are used.
pub fn execute(cfg: &InstanceConfig, opts: &RunOptions) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let engine = opts.engine.unwrap_or(cfg.engine);
    let laws = cfg.laws()?;
    let n = laws.len();
    let depths = cfg.bounds.p_values.depths();

    let exact = if engine.includes_exact() {
        let space = Arc::new(ProductSpace::new(laws.clone())?);
        let cache = CondExpCache::from_statistic(&cfg.statistic, &space)?;
        let report = BoundsReport::exact(&cache, depths)?;
        if !report.identities_hold() {
            return Err(CliError::Check(format!(
                "largest identity residual {:e} exceeds tolerance at scale {}",
                report.identity_residuals.max(),
                report.scale
            )));
        }
        if !report.inequalities_hold() {
            return Err(CliError::Check(format!(
                "bracket violation {:e} at scale {}",
                report.inequality_violation(),
                report.scale
            )));
        }
        Some(report)
    } else {
        None
    };

    let mc = if engine.includes_mc() {
        let mut mc_cfg = cfg.mc.clone().unwrap_or_default();
        if let Some(seed) = opts.seed {
            mc_cfg.seed = seed;
        }
        let space = ProductSpace::with_cap(laws, u128::MAX)?;
        Some(McReport::run(&space, &cfg.statistic, &mc_cfg, depths)?)
    } else {
        None
    };

    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        engine,
        seed: mc.as_ref().map(|m| m.config.seed),
        wall_time_s: start.elapsed().as_secs_f64(),
        n,
        exact,
        mc,
    })
}

/// Text to write and where; `None` means standard output.
pub type Output = (Option<PathBuf>, String);

/// Renders a report in the configured formats. With both formats and a file
/// path, the CSV goes next to the JSON with a `.csv` extension.
pub fn render(report: &RunReport, format: OutputFormat, path: Option<&Path>) -> Result<Vec<Output>, CliError> {
    let json = || to_json(report);
    Ok(match (format, path) {
        (OutputFormat::Json, p) => vec![(p.map(Path::to_path_buf), json())],
        (OutputFormat::Csv, p) => vec![(p.map(Path::to_path_buf), to_csv(report)?)],
        (OutputFormat::Both, Some(p)) => vec![
            (Some(p.to_path_buf()), json()),
            (Some(p.with_extension("csv")), to_csv(report)?),
        ],
        (OutputFormat::Both, None) => vec![(None, json()), (None, to_csv(report)?)],
    })
}

/// Loads, runs and writes one configuration.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<(RunReport, Vec<Output>), CliError> {
    let cfg = InstanceConfig::from_path(config_path)?;
    let report = execute(&cfg, opts)?;
    let path = opts.out.as_deref().or(cfg.output.path.as_deref());
    let outputs = render(&report, cfg.output.format, path)?;
    for (target, text) in &outputs {
        if let Some(p) = target {
            std::fs::write(p, text).map_err(|source| CliError::Io {
                path: p.clone(),
                source,
            })?;
        }
    }
    Ok((report, outputs))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROD: &str = r#"{
  "distributions": [
    {"support": [-1, 1], "probs": [0.5, 0.5]},
    {"support": [-1, 1], "probs": [0.5, 0.5]}
  ],
  "statistic": {"kind": "poly", "params": {"terms": [{"coef": 1, "powers": [1, 1]}]}}
}"#;

    #[test]
    fn exact_report_round_trips() {
        let cfg = InstanceConfig::parse(PROD).unwrap();
        let report = execute(&cfg, &RunOptions::default()).unwrap();
        let exact = report.exact.as_ref().unwrap();
        assert_eq!(exact.var_exact, 1.0);
        assert_eq!(exact.ej, vec![2.0, 2.0]);
        assert_eq!(parse_report(&to_json(&report)).unwrap(), report);
    }

    #[test]
    fn mc_override_uses_defaults_and_seed() {
        let cfg = InstanceConfig::parse(PROD).unwrap();
        let opts = RunOptions {
            engine: Some(Engine::Both),
            seed: Some(42),
            out: None,
        };
        let report = execute(&cfg, &opts).unwrap();
        assert_eq!(report.seed, Some(42));
        let mc = report.mc.as_ref().unwrap();
        for (est, exact) in mc.ej.iter().zip([2.0, 2.0]) {
            assert!(est.estimate.covers(exact, 4.0), "{est:?}");
        }
        for (est, exact) in mc.ek.iter().zip([0.0, 2.0]) {
            assert!(est.estimate.covers(exact, 4.0), "{est:?}");
        }
        assert_eq!(parse_report(&to_json(&report)).unwrap(), report);
    }

    #[test]
    fn csv_has_fixed_columns() {
        let cfg = InstanceConfig::parse(PROD).unwrap();
        let report = execute(&cfg, &RunOptions::default()).unwrap();
        let text = to_csv(&report).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("p,lower_J,lower_JK,var,upper_JK,upper_J"));
        assert_eq!(lines.next(), Some("1,1,1,1,1,2"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Check("x".into()).exit_code(), EXIT_CHECK);
        assert_eq!(CliError::Engine(Error::Consistency("x".into())).exit_code(), EXIT_CHECK);
        assert_eq!(CliError::Engine(Error::NoCoordinates).exit_code(), EXIT_INPUT);
    }
}
