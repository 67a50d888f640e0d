//! Acceptance rules of the three chains, in log space.
//!
//! With `U(X) = diam(E) - delta_X` only the difference `U(prop) - U(cur) = delta_cur - delta_prop`
//! enters, so the diameter is never evaluated. The Gaussian kernel is symmetric in its
//! two arguments, so the proposal-density ratio reduces to the ratio of truncation
//! masses and the ratio of point-selection weights.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::{maximin_distance, Design, DistanceCache};
use crate::domain::{box_gaussian_log_mass, CovarianceMatrix, Domain, FixedDrawMass, MassMethod};
use crate::error::{config_err, Result};

use super::proposal::PairSampler;

/// Largest off-diagonal correlation of an empirical covariance on a box that is still
/// treated as diagonal, so that the exact mass formula applies.
pub const DIAGONAL_CORRELATION_TOL: f64 = 0.05;

/// `-beta * (U(prop) - U(cur))`, with `0 * inf` read as 0.
#[inline]
pub fn energy_log_factor(beta: f64, delta_cur: f64, delta_prop: f64) -> f64 {
    let du = delta_cur - delta_prop;
    if du == 0.0 {
        0.0
    } else {
        -beta * du
    }
}

/// Constrained proposal with plain Metropolis acceptance: `log min(1, exp(-beta dU))`.
pub fn log_accept_ratio_a3(delta_cur: f64, delta_prop: f64, beta: f64) -> f64 {
    energy_log_factor(beta, delta_cur, delta_prop).min(0.0)
}

/// Probability that point `k` is the one moved: `sum_{j != k} (1/2) d_kj / D`.
pub fn selection_weight(design: &Design, k: usize, gamma: f64) -> Result<f64> {
    let cache = DistanceCache::new(design)?;
    let sampler = PairSampler::new(&cache, gamma);
    Ok(sampler.row_sums()[k] / sampler.row_sum_total())
}

/// How the truncation masses `G_{x, tau Sigma}` are evaluated for the constrained chain.
#[derive(Debug, Clone)]
pub enum MassModel {
    /// Exact product of interval probabilities (box domain, diagonal `Sigma`).
    ClosedForm { variances: Vec<f64> },
    /// Fixed bank of standard-normal draws pushed through `sqrt(tau) L`.
    MonteCarlo { bank: FixedDrawMass, chol: DMatrix<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassKind {
    ClosedForm,
    MonteCarlo,
}

impl MassModel {
    /// Picks the mass evaluation for `domain` and returns the covariance the random walk
    /// must use with it (the diagonal part when a near-diagonal box covariance is
    /// promoted to the exact formula).
    pub fn resolve(
        domain: &Domain,
        sigma: &CovarianceMatrix,
        requested: Option<MassMethod>,
        auto_samples: usize,
        seed: u64,
    ) -> Result<(Self, CovarianceMatrix)> {
        let near_diagonal = sigma.is_diagonal() || sigma.max_abs_correlation() <= DIAGONAL_CORRELATION_TOL;
        match requested {
            Some(MassMethod::ClosedForm) | None if domain.is_box() && near_diagonal => {
                let diag = if sigma.is_diagonal() { sigma.clone() } else { sigma.diagonal_part() };
                let variances = (0..diag.dim()).map(|k| diag.entries()[(k, k)]).collect();
                Ok((Self::ClosedForm { variances }, diag))
            }
            Some(MassMethod::ClosedForm) => Err(config_err(
                "closed-form mass needs a box domain and a (near-)diagonal covariance",
            )),
            None => {
                if auto_samples == 0 {
                    return Err(config_err("mass_mc_samples must be >= 1"));
                }
                Ok((Self::monte_carlo(domain, sigma, auto_samples, seed), sigma.clone()))
            }
            Some(MassMethod::MonteCarlo { samples }) => {
                if samples == 0 {
                    return Err(config_err("mass_mc_samples must be >= 1"));
                }
                Ok((Self::monte_carlo(domain, sigma, samples, seed), sigma.clone()))
            }
        }
    }

    fn monte_carlo(domain: &Domain, sigma: &CovarianceMatrix, samples: usize, seed: u64) -> Self {
        Self::MonteCarlo { bank: FixedDrawMass::new(domain.dim(), samples, seed), chol: sigma.cholesky_lower() }
    }

    pub fn kind(&self) -> MassKind {
        match self {
            Self::ClosedForm { .. } => MassKind::ClosedForm,
            Self::MonteCarlo { .. } => MassKind::MonteCarlo,
        }
    }

    /// `log G_{mean, tau Sigma}`.
    pub fn log_mass(&self, domain: &Domain, mean: &[f64], tau: f64) -> Result<f64> {
        match self {
            Self::ClosedForm { variances } => {
                let stds: Vec<f64> = variances.iter().map(|v| (tau * v).sqrt()).collect();
                Ok(box_gaussian_log_mass(domain.bbox(), mean, &stds))
            }
            Self::MonteCarlo { bank, chol } => Ok(bank.mass(domain, mean, chol, tau)?.ln()),
        }
    }
}

/// Combines the pieces of the constrained chain's Metropolis-Hastings ratio.
#[inline]
pub(crate) fn a1_log_ratio(
    beta: f64,
    delta_cur: f64,
    delta_prop: f64,
    log_mass_cur: f64,
    log_mass_prop: f64,
    weight_cur: f64,
    weight_prop: f64,
) -> f64 {
    let energy = energy_log_factor(beta, delta_cur, delta_prop);
    (energy + (log_mass_cur - log_mass_prop) + (weight_prop.ln() - weight_cur.ln())).min(0.0)
}

/// Log acceptance probability of the constrained chain with exact proposal-density ratio.
///
/// `cur` and `prop` differ only at index `k`, and both lie in the domain.
#[allow(clippy::too_many_arguments)]
pub fn log_accept_ratio_a1(
    cur: &Design,
    prop: &Design,
    k: usize,
    beta: f64,
    tau: f64,
    gamma: f64,
    domain: &Domain,
    mass: &MassModel,
) -> Result<f64> {
    let delta_cur = maximin_distance(cur)?;
    let delta_prop = maximin_distance(prop)?;
    let g_cur = mass.log_mass(domain, cur.point(k), tau)?;
    let g_prop = mass.log_mass(domain, prop.point(k), tau)?;
    let w_cur = selection_weight(cur, k, gamma)?;
    let w_prop = selection_weight(prop, k, gamma)?;
    Ok(a1_log_ratio(beta, delta_cur, delta_prop, g_cur, g_prop, w_cur, w_prop))
}

/// Log acceptance probability of the unconstrained chain, or `None` when the proposal
/// leaves the domain (immediate rejection).
pub fn log_accept_ratio_a2(
    cur: &Design,
    prop: &Design,
    k: usize,
    beta: f64,
    gamma: f64,
    domain: &Domain,
) -> Result<Option<f64>> {
    if !domain.outside_indices(prop.coords())?.is_empty() {
        return Ok(None);
    }
    let delta_cur = maximin_distance(cur)?;
    let delta_prop = maximin_distance(prop)?;
    let w_cur = selection_weight(cur, k, gamma)?;
    let w_prop = selection_weight(prop, k, gamma)?;
    let energy = energy_log_factor(beta, delta_cur, delta_prop);
    Ok(Some((energy + w_prop.ln() - w_cur.ln()).min(0.0)))
}
