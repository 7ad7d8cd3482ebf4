//! Seeded random networks for randomized checks.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, ROW_SUM_TOL};

const MIN_WEIGHT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomNetConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Probability of each extra edge (and of each self-loop).
    pub density: f64,
    /// Range of the row-sum deficit `1 - sum_j a_ij` (substochastic mode).
    pub slack: (f64, f64),
    pub seed: u64,
    pub require_strong_connectivity: bool,
    pub stochastic_mode: bool,
}

impl Default for RandomNetConfig {
    fn default() -> Self {
        RandomNetConfig {
            n_min: 4,
            n_max: 10,
            density: 0.3,
            slack: (0.01, 0.3),
            seed: 42,
            require_strong_connectivity: true,
            stochastic_mode: false,
        }
    }
}

impl RandomNetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max || self.n_max > 64 {
            return Err(Error::invalid(format!(
                "node range [{}, {}] must satisfy 1 <= n_min <= n_max <= 64",
                self.n_min, self.n_max
            )));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::invalid("density must lie in [0, 1]"));
        }
        let (lo, hi) = self.slack;
        if !(0.0 <= lo && lo <= hi && hi < 1.0) {
            return Err(Error::invalid("slack range must satisfy 0 <= lo <= hi < 1"));
        }
        if !self.stochastic_mode && hi <= ROW_SUM_TOL {
            return Err(Error::invalid("substochastic mode needs a positive slack"));
        }
        Ok(())
    }

    /// One network drawn from `rng`.
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Network> {
        self.validate()?;
        let n = rng.random_range(self.n_min..=self.n_max);
        let mut support = vec![vec![false; n]; n];
        if self.require_strong_connectivity && n > 1 {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            for k in 0..n {
                let (from, to) = (order[k], order[(k + 1) % n]);
                support[to][from] = true;
            }
        }
        for row in support.iter_mut() {
            for cell in row.iter_mut() {
                if rng.random_bool(self.density) {
                    *cell = true;
                }
            }
        }
        if self.stochastic_mode {
            let l = rng.random_range(0..n);
            support[l][l] = true;
            for (l, row) in support.iter_mut().enumerate() {
                if !row.iter().any(|&b| b) {
                    row[l] = true;
                }
            }
        }
        let mut rows = vec![vec![0.0; n]; n];
        let mut any_deficit = false;
        for (l, row) in rows.iter_mut().enumerate() {
            let raw: Vec<f64> = (0..n)
                .map(|j| {
                    if support[l][j] {
                        rng.random_range(MIN_WEIGHT..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let total: f64 = raw.iter().sum();
            if total == 0.0 {
                any_deficit = true;
                continue;
            }
            let target = if self.stochastic_mode {
                1.0
            } else {
                let (lo, hi) = self.slack;
                1.0 - if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                }
            };
            if target < 1.0 - ROW_SUM_TOL {
                any_deficit = true;
            }
            for (r, w) in row.iter_mut().zip(raw) {
                *r = w * target / total;
            }
            if self.stochastic_mode {
                // exact unit row sums
                let s: f64 = row.iter().sum();
                let last = (0..n).rev().find(|&j| row[j] > 0.0).unwrap_or(l);
                row[last] += 1.0 - s;
            }
        }
        if !self.stochastic_mode && !any_deficit {
            let scale = 1.0 - self.slack.1;
            for r in rows[0].iter_mut() {
                *r *= scale;
            }
        }
        Network::from_rows(rows)
    }

    /// `count` networks; network `k` depends only on the seed and `k`.
    pub fn generate_many(&self, count: usize) -> Result<Vec<Network>> {
        network_seeds(self.seed, count)
            .into_iter()
            .map(|seed| self.generate(&mut ChaCha8Rng::seed_from_u64(seed)))
            .collect()
    }
}

/// Per-case seeds derived from a master seed.
pub fn network_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| master.next_u64()).collect()
}
