//! Brute-force reference implementation over explicit outcome tables. Shares
//! no code with the library beyond the distribution type.

#![allow(dead_code)]

use ijack::DiscreteDistribution;

pub struct Brute {
    pub radices: Vec<usize>,
    pub probs: Vec<Vec<f64>>,
    pub len: usize,
}

impl Brute {
    pub fn new(dists: &[DiscreteDistribution]) -> Self {
        let radices: Vec<usize> = dists.iter().map(|d| d.len()).collect();
        Brute {
            len: radices.iter().product(),
            probs: dists.iter().map(|d| d.probs().to_vec()).collect(),
            radices,
        }
    }

    pub fn n(&self) -> usize {
        self.radices.len()
    }

    pub fn digits(&self, mut idx: usize) -> Vec<usize> {
        self.radices
            .iter()
            .map(|&r| {
                let d = idx % r;
                idx /= r;
                d
            })
            .collect()
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.radices).rev().fold(0, |acc, (d, r)| acc * r + d)
    }

    pub fn weight(&self, digits: &[usize]) -> f64 {
        digits.iter().enumerate().map(|(i, &d)| self.probs[i][d]).product()
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        (0..self.len).map(|o| self.weight(&self.digits(o)) * f[o]).sum()
    }

    /// Integrates out the coordinates listed in `coords`.
    pub fn integrate(&self, f: &[f64], coords: &[usize]) -> Vec<f64> {
        let mut g = f.to_vec();
        for &i in coords {
            g = (0..self.len)
                .map(|o| {
                    let mut d = self.digits(o);
                    (0..self.radices[i])
                        .map(|v| {
                            d[i] = v;
                            self.probs[i][v] * g[self.index(&d)]
                        })
                        .sum()
                })
                .collect();
        }
        g
    }

    /// `Var^(coords) f`, peeling the last listed index first.
    pub fn iterated_variance(&self, f: &[f64], coords: &[usize]) -> Vec<f64> {
        let (&last, rest) = coords.split_last().expect("nonempty");
        if rest.is_empty() {
            let m = self.integrate(f, &[last]);
            let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
            return self
                .integrate(&sq, &[last])
                .iter()
                .zip(&m)
                .map(|(a, b)| a - b * b)
                .collect();
        }
        let inner = self.integrate(&self.iterated_variance(f, rest), &[last]);
        let shifted = self.iterated_variance(&self.integrate(f, &[last]), rest);
        inner.iter().zip(&shifted).map(|(a, b)| a - b).collect()
    }

    pub fn subsets_of_size(&self, k: usize) -> Vec<Vec<usize>> {
        (0u32..1 << self.n())
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..self.n()).filter(|i| m & (1 << i) != 0).collect())
            .collect()
    }

    fn complement(&self, set: &[usize]) -> Vec<usize> {
        (0..self.n()).filter(|i| !set.contains(i)).collect()
    }

    pub fn variance(&self, f: &[f64]) -> f64 {
        let m = self.mean(f);
        let c: Vec<f64> = f.iter().map(|v| (v - m) * (v - m)).collect();
        self.mean(&c)
    }

    pub fn ej(&self, f: &[f64], k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        fact * self
            .subsets_of_size(k)
            .iter()
            .map(|s| self.mean(&self.iterated_variance(f, s)))
            .sum::<f64>()
    }

    pub fn ek(&self, f: &[f64], k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        fact * self
            .subsets_of_size(k)
            .iter()
            .map(|s| {
                let g = self.integrate(f, &self.complement(s));
                self.mean(&self.iterated_variance(&g, s))
            })
            .sum::<f64>()
    }

    /// `Var f_d` from Hoeffding components built by Möbius inversion.
    pub fn spectrum(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for mask in 1u32..1 << n {
            let set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let mut h = vec![0.0; self.len];
            for sub in 0u32..1 << n {
                if sub & !mask != 0 {
                    continue;
                }
                let kept: Vec<usize> = (0..n).filter(|i| sub & (1 << i) != 0).collect();
                let sign = if (set.len() - kept.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
                let g = self.integrate(f, &self.complement(&kept));
                for (a, v) in h.iter_mut().zip(g) {
                    *a += sign * v;
                }
            }
            let sq: Vec<f64> = h.iter().map(|v| v * v).collect();
            out[set.len() - 1] += self.mean(&sq);
        }
        out
    }
}

pub fn rad2_prod() -> (Vec<DiscreteDistribution>, Vec<f64>) {
    (vec![DiscreteDistribution::rademacher(); 2], vec![1.0, -1.0, -1.0, 1.0])
}

pub fn rad2_sum() -> (Vec<DiscreteDistribution>, Vec<f64>) {
    (vec![DiscreteDistribution::rademacher(); 2], vec![-2.0, 0.0, 0.0, 2.0])
}

/// `Σ_{i<j} x_i x_j` on three Rademacher coordinates.
pub fn rad3_u2() -> (Vec<DiscreteDistribution>, Vec<f64>) {
    let x = [-1.0, 1.0];
    let mut values = Vec::new();
    for idx in 0..8usize {
        let v: Vec<f64> = (0..3).map(|i| x[(idx >> i) & 1]).collect();
        values.push(v[0] * v[1] + v[0] * v[2] + v[1] * v[2]);
    }
    (vec![DiscreteDistribution::rademacher(); 3], values)
}

pub const PROD_CONFIG: &str = r#"{
  "distributions": [
    {"support": [-1, 1], "probs": [0.5, 0.5]},
    {"support": [-1, 1], "probs": [0.5, 0.5]}
  ],
  "statistic": {"kind": "poly", "params": {"terms": [{"coef": 1, "powers": [1, 1]}]}}
}
"#;
