//! Instance configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::Error;
use crate::mc::McConfig;
use crate::model::{DiscreteDistribution, ProductSpace, Statistic};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Exact,
    Mc,
    Both,
}

impl Engine {
    pub fn includes_exact(self) -> bool {
        matches!(self, Engine::Exact | Engine::Both)
    }

    pub fn includes_mc(self) -> bool {
        matches!(self, Engine::Mc | Engine::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DistributionSpec {
    pub fn build(&self) -> crate::Result<DiscreteDistribution> {
        DiscreteDistribution::new(self.support.clone(), self.probs.clone())
    }
}

impl From<&DiscreteDistribution> for DistributionSpec {
    fn from(d: &DiscreteDistribution) -> Self {
        DistributionSpec {
            support: d.support().to_vec(),
            probs: d.probs().to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AllKeyword {
    All,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PValues {
    #[default]
    #[serde(with = "all_keyword")]
    All,
    List(Vec<usize>),
}

mod all_keyword {
    use super::AllKeyword;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        AllKeyword::All.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        AllKeyword::deserialize(d).map(|_| ())
    }
}

impl PValues {
    pub fn depths(&self) -> Option<&[usize]> {
        match self {
            PValues::All => None,
            PValues::List(ps) => Some(ps),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    #[serde(default)]
    pub p_values: PValues,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Both,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub distributions: Vec<DistributionSpec>,
    pub statistic: Statistic,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub bounds: BoundsSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A configuration problem anchored at a position in the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig<'a> {
    #[serde(borrow)]
    distributions: Vec<&'a RawValue>,
    #[serde(borrow)]
    statistic: &'a RawValue,
    #[serde(default)]
    engine: Engine,
    #[serde(default, borrow)]
    mc: Option<&'a RawValue>,
    #[serde(default)]
    bounds: BoundsSpec,
    #[serde(default)]
    output: OutputSpec,
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, column)
}

fn strip_location(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    match msg.rsplit_once(" at line ") {
        Some((head, _)) => head.to_string(),
        None => msg,
    }
}

struct Source<'a> {
    text: &'a str,
}

impl<'a> Source<'a> {
    fn offset_of(&self, raw: &RawValue) -> usize {
        raw.get().as_ptr() as usize - self.text.as_ptr() as usize
    }

    fn at(&self, raw: &RawValue, message: impl Into<String>) -> ConfigError {
        let (line, column) = position(self.text, self.offset_of(raw));
        ConfigError {
            line,
            column,
            message: message.into(),
        }
    }

    fn parse<T: serde::de::DeserializeOwned>(&self, raw: &RawValue, what: &str) -> Result<T, ConfigError> {
        serde_json::from_str(raw.get()).map_err(|e| {
            let (line0, col0) = position(self.text, self.offset_of(raw));
            let line = line0 + e.line().saturating_sub(1);
            let column = if e.line() <= 1 { col0 + e.column().saturating_sub(1) } else { e.column() };
            ConfigError {
                line,
                column,
                message: format!("{what}: {}", strip_location(&e)),
            }
        })
    }
}

impl InstanceConfig {
    /// Parses and validates a configuration. Every error carries the line and
    /// column of the offending value.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            line: e.line(),
            column: e.column(),
            message: strip_location(&e),
        })?;
        let src = Source { text };

        if raw.distributions.is_empty() {
            return Err(ConfigError {
                line: 1,
                column: 1,
                message: Error::NoCoordinates.to_string(),
            });
        }
        let mut distributions = Vec::with_capacity(raw.distributions.len());
        let mut laws = Vec::with_capacity(raw.distributions.len());
        for (index, item) in raw.distributions.iter().enumerate() {
            let spec: DistributionSpec = src.parse(item, &format!("distribution {index}"))?;
            let law = spec.build().map_err(|e| {
                let wrapped = Error::Distribution {
                    index,
                    source: Box::new(e),
                };
                src.at(item, wrapped.to_string())
            })?;
            distributions.push(spec);
            laws.push(law);
        }

        let statistic: Statistic = src.parse(raw.statistic, "statistic")?;
        let space = ProductSpace::with_cap(laws, u128::MAX).map_err(|e| src.at(raw.statistic, e.to_string()))?;
        statistic
            .compile(&space)
            .map_err(|e| src.at(raw.statistic, e.to_string()))?;

        let mc = match raw.mc {
            Some(item) => {
                if !raw.engine.includes_mc() {
                    return Err(src.at(item, "an mc section is only allowed when engine is mc or both"));
                }
                let cfg: McConfig = src.parse(item, "mc")?;
                cfg.validate().map_err(|e| src.at(item, e.to_string()))?;
                Some(cfg)
            }
            None if raw.engine.includes_mc() => {
                return Err(ConfigError {
                    line: 1,
                    column: 1,
                    message: "engine includes mc but the mc section is missing".into(),
                })
            }
            None => None,
        };

        Ok(InstanceConfig {
            distributions,
            statistic,
            engine: raw.engine,
            mc,
            bounds: raw.bounds,
            output: raw.output,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, super::CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| super::CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|error| super::CliError::Config {
            path: path.to_path_buf(),
            error,
        })
    }

    pub fn laws(&self) -> crate::Result<Vec<DiscreteDistribution>> {
        self.distributions
            .iter()
            .enumerate()
            .map(|(index, d)| {
                d.build().map_err(|e| Error::Distribution {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// Exact-engine configuration for a table statistic.
    pub fn exact_table(laws: &[DiscreteDistribution], values: Vec<f64>) -> Self {
        InstanceConfig {
            distributions: laws.iter().map(DistributionSpec::from).collect(),
            statistic: Statistic::Table { values },
            engine: Engine::Exact,
            mc: None,
            bounds: BoundsSpec::default(),
            output: OutputSpec::default(),
        }
    }
}
