//! Proposal mechanics: which point moves, and where to.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::design::DistanceCache;
use crate::domain::{affine_into, CovarianceMatrix, Domain};
use crate::error::{config_err, Result};

#[inline]
pub(crate) fn pair_weight(r: f64, gamma: f64) -> f64 {
    1.0 / (r + gamma)
}

/// Multinomial sampler over unordered pairs with weights `1 / (||x_i - x_j|| + gamma)`.
///
/// Holds the row sums `R_i = sum_{j != i} w_ij`. A pair is drawn by choosing a row with
/// probability `R_i / sum R` and then a column inside it with probability `w_ij / R_i`,
/// which gives each unordered pair probability `w_ij / D` with `D = sum_{i<j} w_ij`.
#[derive(Debug, Clone)]
pub struct PairSampler {
    gamma: f64,
    row_sums: Vec<f64>,
    total: f64,
    commits: usize,
}

impl PairSampler {
    pub fn new(cache: &DistanceCache, gamma: f64) -> Self {
        let mut s = Self { gamma, row_sums: vec![0.0; cache.len()], total: 0.0, commits: 0 };
        s.refresh(cache);
        s
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn refresh(&mut self, cache: &DistanceCache) {
        for i in 0..cache.len() {
            self.row_sums[i] = self.exact_row_sum(cache.row(i), i);
        }
        self.total = self.row_sums.iter().sum();
        self.commits = 0;
    }

    pub(crate) fn exact_row_sum(&self, row: &[f64], skip: usize) -> f64 {
        row.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &r)| pair_weight(r, self.gamma)).sum()
    }

    /// Row sums `R_i`; the pair-selection total `D` is half their sum.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn row_sum_total(&self) -> f64 {
        self.total
    }

    pub fn select<R: Rng + ?Sized>(&self, cache: &DistanceCache, rng: &mut R) -> (usize, usize) {
        let n = cache.len();
        let mut u = rng.random::<f64>() * self.total;
        let mut i = n - 1;
        for (idx, &r) in self.row_sums.iter().enumerate() {
            if u < r {
                i = idx;
                break;
            }
            u -= r;
        }
        let row = cache.row(i);
        // exact row sum so that the column draw is unaffected by drift in the stored sums
        let exact = self.exact_row_sum(row, i);
        let mut v = rng.random::<f64>() * exact;
        let mut j = if i == n - 1 { n - 2 } else { n - 1 };
        for (idx, &r) in row.iter().enumerate() {
            if idx == i {
                continue;
            }
            let w = pair_weight(r, self.gamma);
            if v < w {
                j = idx;
                break;
            }
            v -= w;
        }
        (i.min(j), i.max(j))
    }

    /// Call before `cache.commit_move(k, new_row)`.
    pub fn commit_move(&mut self, cache: &DistanceCache, k: usize, new_row: &[f64]) {
        let old_row = cache.row(k);
        let mut new_sum = 0.0;
        for j in 0..cache.len() {
            if j == k {
                continue;
            }
            let w_new = pair_weight(new_row[j], self.gamma);
            self.row_sums[j] += w_new - pair_weight(old_row[j], self.gamma);
            new_sum += w_new;
        }
        self.row_sums[k] = new_sum;
        self.total = self.row_sums.iter().sum();
        self.commits += 1;
    }

    /// Recomputes the sums from scratch every `N` commits to bound round-off drift.
    pub fn maybe_refresh(&mut self, cache: &DistanceCache) {
        if self.commits >= cache.len() {
            self.refresh(cache);
        }
    }
}

/// A pair drawn by [`select_pair`] together with the row-sum table it was drawn from.
#[derive(Debug, Clone)]
pub struct PairDraw {
    pub i: usize,
    pub j: usize,
    pub row_sums: Vec<f64>,
}

/// Draws a pair `(i, j)`, `i < j`, with probability proportional to `1 / (||x_i - x_j|| + gamma)`.
pub fn select_pair<R: Rng + ?Sized>(cache: &DistanceCache, gamma: f64, rng: &mut R) -> PairDraw {
    let sampler = PairSampler::new(cache, gamma);
    let (i, j) = sampler.select(cache, rng);
    PairDraw { i, j, row_sums: sampler.row_sums }
}

/// Picks one member of the pair with probability 1/2 each.
pub fn select_point<R: Rng + ?Sized>(pair: (usize, usize), rng: &mut R) -> usize {
    if rng.random::<bool>() {
        pair.0
    } else {
        pair.1
    }
}

/// Gaussian random walk with covariance `tau * Sigma`.
#[derive(Debug, Clone)]
pub struct RandomWalk {
    sigma: CovarianceMatrix,
    chol: DMatrix<f64>,
    z: Vec<f64>,
}

impl RandomWalk {
    pub fn new(sigma: &CovarianceMatrix) -> Self {
        Self { sigma: sigma.clone(), chol: sigma.cholesky_lower(), z: vec![0.0; sigma.dim()] }
    }

    pub fn sigma(&self) -> &CovarianceMatrix {
        &self.sigma
    }

    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Draw from `N(x, tau * Sigma)` with no domain constraint.
    pub fn propose_unconstrained<R: Rng + ?Sized>(&mut self, x: &[f64], tau: f64, rng: &mut R, out: &mut [f64]) {
        for v in self.z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        affine_into(x, &self.chol, tau.sqrt(), &self.z, out);
    }

    /// Exact draw from `N(x, tau * Sigma)` truncated to `domain`, by rejection.
    ///
    /// Returns the number of rejected draws when a member was found, or `None` when
    /// `max_rejects` draws all fell outside.
    pub fn propose_constrained<R: Rng + ?Sized>(
        &mut self,
        x: &[f64],
        tau: f64,
        domain: &Domain,
        max_rejects: usize,
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<Option<usize>> {
        if max_rejects == 0 {
            return Err(config_err("proposal_max_rejects must be >= 1"));
        }
        for attempt in 0..max_rejects {
            self.propose_unconstrained(x, tau, rng, out);
            if domain.contains(out)? {
                return Ok(Some(attempt));
            }
        }
        Ok(None)
    }
}
