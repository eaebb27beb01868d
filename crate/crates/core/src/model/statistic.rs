use serde::{Deserialize, Serialize};

use super::ProductSpace;
use crate::error::{Error, Result};

/// One term `coef * prod_i x_i^powers[i]` of a polynomial statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// A real-valued function of the joint outcome.
///
/// The builtin catalog is deliberately small; anything else is supplied as an
/// explicit table over the outcome enumeration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum Statistic {
    /// One value per joint outcome, in enumeration order.
    Table { values: Vec<f64> },
    /// `sum_i w_i x_i`; all weights 1 when omitted.
    Sum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// `max_i x_i`.
    Max,
    /// `sum_{i<j} g(x_i) g(x_j)`, with `g` given as `[value, g(value)]` pairs.
    Ustat2 { g: Vec<[f64; 2]> },
    /// Sum of monomials in the coordinate values.
    Poly { terms: Vec<Monomial> },
}

impl Statistic {
    pub fn constant(c: f64) -> Self {
        Statistic::Poly {
            terms: vec![Monomial {
                coef: c,
                powers: Vec::new(),
            }],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Statistic::Table { .. } => "table",
            Statistic::Sum { .. } => "sum",
            Statistic::Max => "max",
            Statistic::Ustat2 { .. } => "ustat2",
            Statistic::Poly { .. } => "poly",
        }
    }

    /// Checks the statistic against `space` and resolves it into a form that
    /// evaluates directly on per-coordinate support indices.
    pub fn compile(&self, space: &ProductSpace) -> Result<Evaluator> {
        let n = space.n();
        let supports: Vec<Vec<f64>> = space.dists().iter().map(|d| d.support().to_vec()).collect();
        let kind = match self {
            Statistic::Table { values } => {
                let len = space.ensure_enumerable()?;
                if values.len() != len {
                    return Err(Error::InvalidStatistic(format!(
                        "table has {} values but the space has {len} outcomes",
                        values.len()
                    )));
                }
                check_finite("table value", values)?;
                Compiled::Table {
                    values: values.clone(),
                    strides: (0..n).map(|i| space.stride(i)).collect(),
                }
            }
            Statistic::Sum { weights } => {
                let weights = match weights {
                    Some(w) if w.len() != n => {
                        return Err(Error::InvalidStatistic(format!(
                            "sum has {} weights for {n} coordinates",
                            w.len()
                        )))
                    }
                    Some(w) => w.clone(),
                    None => vec![1.0; n],
                };
                check_finite("sum weight", &weights)?;
                Compiled::Sum(weights)
            }
            Statistic::Max => Compiled::Max,
            Statistic::Ustat2 { g } => {
                let mut mapped = Vec::with_capacity(n);
                for (i, support) in supports.iter().enumerate() {
                    let row = support
                        .iter()
                        .map(|&x| {
                            g.iter().find(|pair| pair[0] == x).map(|pair| pair[1]).ok_or_else(|| {
                                Error::InvalidStatistic(format!(
                                    "ustat2 map has no entry for value {x} of coordinate {i}"
                                ))
                            })
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    check_finite("ustat2 value", &row)?;
                    mapped.push(row);
                }
                Compiled::Ustat2(mapped)
            }
            Statistic::Poly { terms } => {
                for (t, term) in terms.iter().enumerate() {
                    if !term.powers.is_empty() && term.powers.len() != n {
                        return Err(Error::InvalidStatistic(format!(
                            "poly term {t} has {} powers for {n} coordinates",
                            term.powers.len()
                        )));
                    }
                    if !term.coef.is_finite() {
                        return Err(Error::InvalidStatistic(format!(
                            "poly term {t} has a non-finite coefficient"
                        )));
                    }
                }
                Compiled::Poly(terms.clone())
            }
        };
        Ok(Evaluator { kind, supports })
    }
}

fn check_finite(what: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(Error::InvalidStatistic(format!("{what} {x} is not finite"))),
        None => Ok(()),
    }
}

#[derive(Clone, Debug)]
enum Compiled {
    Table { values: Vec<f64>, strides: Vec<usize> },
    Sum(Vec<f64>),
    Max,
    Ustat2(Vec<Vec<f64>>),
    Poly(Vec<Monomial>),
}

/// A statistic bound to a particular space.
#[derive(Clone, Debug)]
pub struct Evaluator {
    kind: Compiled,
    supports: Vec<Vec<f64>>,
}

impl Evaluator {
    /// Evaluates at the outcome whose coordinate `i` takes support index
    /// `digits[i]`.
    pub fn eval(&self, digits: &[usize]) -> f64 {
        let x = |i: usize| self.supports[i][digits[i]];
        match &self.kind {
            Compiled::Table { values, strides } => {
                let idx: usize = digits.iter().zip(strides).map(|(d, s)| d * s).sum();
                values[idx]
            }
            Compiled::Sum(w) => w.iter().enumerate().map(|(i, wi)| wi * x(i)).sum(),
            Compiled::Max => (0..digits.len()).map(x).fold(f64::NEG_INFINITY, f64::max),
            Compiled::Ustat2(g) => {
                let mut prefix = 0.0;
                let mut total = 0.0;
                for (i, row) in g.iter().enumerate() {
                    let gi = row[digits[i]];
                    total += prefix * gi;
                    prefix += gi;
                }
                total
            }
            Compiled::Poly(terms) => terms
                .iter()
                .map(|t| {
                    t.powers
                        .iter()
                        .enumerate()
                        .fold(t.coef, |acc, (i, &p)| acc * x(i).powi(p as i32))
                })
                .sum(),
        }
    }
}
