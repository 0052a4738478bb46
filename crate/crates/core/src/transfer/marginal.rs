use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Probabilities of every configuration of a site subset.
///
/// Configurations are stored in lexicographic order with the first site most
/// significant.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalTable {
    sites: Vec<usize>,
    n_states: usize,
    probs: Vec<f64>,
}

impl MarginalTable {
    pub fn new(sites: Vec<usize>, n_states: usize, probs: Vec<f64>) -> Result<Self> {
        if sites.is_empty() || sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset);
        }
        let expected = (n_states as u128).pow(sites.len() as u32);
        if probs.len() as u128 != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {expected} configurations",
                probs.len()
            )));
        }
        Ok(MarginalTable {
            sites,
            n_states,
            probs,
        })
    }

    pub(crate) fn decode(mut index: usize, n: usize, q: usize) -> Vec<usize> {
        let mut z = vec![0; q];
        for slot in z.iter_mut().rev() {
            *slot = index % n;
            index /= n;
        }
        z
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index_of(&self, config: &[usize]) -> Result<usize> {
        if config.len() != self.sites.len() {
            return Err(Error::LengthMismatch {
                expected: self.sites.len(),
                got: config.len(),
            });
        }
        config.iter().try_fold(0usize, |acc, &z| {
            if z >= self.n_states {
                Err(Error::StateOutOfRange {
                    state: z,
                    n_states: self.n_states,
                })
            } else {
                Ok(acc * self.n_states + z)
            }
        })
    }

    /// Probability of one configuration of the subset.
    pub fn get(&self, config: &[usize]) -> Result<f64> {
        Ok(self.probs[self.index_of(config)?])
    }

    /// `(configuration, probability)` pairs in table order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let q = self.sites.len();
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (Self::decode(i, self.n_states, q), p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Sums out every site not in `keep` (which must be a subset of the
    /// table's sites).
    pub fn marginalize(&self, keep: &[usize]) -> Result<MarginalTable> {
        let positions: Vec<usize> = keep
            .iter()
            .map(|s| {
                self.sites
                    .iter()
                    .position(|x| x == s)
                    .ok_or(Error::InvalidSubset)
            })
            .collect::<Result<_>>()?;
        let n = self.n_states;
        let mut out = vec![0.0; n.pow(keep.len() as u32)];
        for (z, p) in self.iter() {
            let idx = positions.iter().fold(0, |acc, &i| acc * n + z[i]);
            out[idx] += p;
        }
        MarginalTable::new(keep.to_vec(), n, out)
    }

    /// One row per configuration (labels, probability with 15 significant
    /// digits), then a `sum` row.
    pub fn to_csv(&self, label: impl Fn(usize) -> String) -> String {
        let mut out = String::new();
        for s in &self.sites {
            let _ = write!(out, "z{s},");
        }
        out.push_str("probability\n");
        for (z, p) in self.iter() {
            for state in z {
                let _ = write!(out, "{},", label(state));
            }
            let _ = writeln!(out, "{p:.14e}");
        }
        out.push_str("sum,");
        for _ in 1..self.sites.len() {
            out.push(',');
        }
        let _ = writeln!(out, "{:.14e}", self.total());
        out
    }
}
