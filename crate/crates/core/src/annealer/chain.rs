//! One annealing chain: current design, its distance cache and pair sampler, and the
//! best design seen so far.

use rand::Rng;
use serde::Serialize;

use crate::design::{Design, DistanceCache, MaximinScore};
use crate::domain::Domain;
use crate::error::Result;
use crate::rng::DesignRng;

use super::acceptance::{a1_log_ratio, energy_log_factor, log_accept_ratio_a3, MassModel};
use super::proposal::{select_point, PairSampler, RandomWalk};
use super::{Algorithm, AnnealerConfig};

/// What happened to the proposal of a single iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Accepted,
    Rejected,
    /// The unconstrained proposal fell outside the domain.
    OutsideDomain,
    /// `proposal_max_rejects` truncated draws all fell outside the domain.
    Exhausted,
    /// The proposal coincided with another design point.
    Coincident,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub beta: f64,
    pub tau: f64,
    pub accepted: bool,
    pub moved_index: usize,
    pub outcome: StepOutcome,
    pub proposal_rejections: usize,
    pub delta_current: f64,
    pub delta_best: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ChainStats {
    pub iterations: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub outside_domain: u64,
    pub exhausted: u64,
    pub coincident: u64,
    /// Truncated-proposal draws that fell outside the domain, summed over the run.
    pub proposal_rejections: u64,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.iterations == 0 {
            0.0
        } else {
            self.accepted as f64 / self.iterations as f64
        }
    }
}

pub struct Chain<'a> {
    config: &'a AnnealerConfig,
    domain: &'a Domain,
    mass: Option<MassModel>,
    walk: RandomWalk,
    current: Design,
    cache: DistanceCache,
    sampler: PairSampler,
    best: Design,
    best_score: MaximinScore,
    stats: ChainStats,
    rng: DesignRng,
    row: Vec<f64>,
    proposal: Vec<f64>,
}

impl<'a> Chain<'a> {
    pub(crate) fn new(
        config: &'a AnnealerConfig,
        domain: &'a Domain,
        initial: Design,
        walk: RandomWalk,
        mass: Option<MassModel>,
        rng: DesignRng,
    ) -> Result<Self> {
        let cache = DistanceCache::new(&initial)?;
        let sampler = PairSampler::new(&cache, config.gamma);
        let best_score = cache.score(config.tie_tol);
        Ok(Self {
            config,
            domain,
            mass,
            walk,
            best: initial.clone(),
            current: initial,
            cache,
            sampler,
            best_score,
            stats: ChainStats::default(),
            rng,
            row: Vec::new(),
            proposal: vec![0.0; domain.dim()],
        })
    }

    pub fn current(&self) -> &Design {
        &self.current
    }

    pub fn best(&self) -> &Design {
        &self.best
    }

    pub fn best_score(&self) -> MaximinScore {
        self.best_score
    }

    pub fn current_delta(&self) -> f64 {
        self.cache.min_distance()
    }

    pub fn stats(&self) -> ChainStats {
        self.stats
    }

    pub(crate) fn into_parts(self) -> (Design, MaximinScore, Design, ChainStats) {
        (self.best, self.best_score, self.current, self.stats)
    }

    pub fn set_verify(&mut self, verify: bool) {
        self.cache.set_verify(verify);
    }

    /// Runs iteration `n` (1-based).
    pub fn step(&mut self, n: u64) -> Result<TraceRecord> {
        let cfg = self.config;
        let beta = cfg.cooling.beta(n);
        let tau = cfg.variance.tau(n, cfg.iterations);
        let pair = self.sampler.select(&self.cache, &mut self.rng);
        let k = select_point(pair, &mut self.rng);

        let mut rejections = 0;
        let mut outcome = match cfg.algorithm {
            Algorithm::A1 | Algorithm::A3 => {
                match self.walk.propose_constrained(
                    self.current.point(k),
                    tau,
                    self.domain,
                    cfg.proposal_max_rejects,
                    &mut self.rng,
                    &mut self.proposal,
                )? {
                    Some(r) => {
                        rejections = r;
                        None
                    }
                    None => {
                        rejections = cfg.proposal_max_rejects;
                        Some(StepOutcome::Exhausted)
                    }
                }
            }
            Algorithm::A2 => {
                self.walk.propose_unconstrained(self.current.point(k), tau, &mut self.rng, &mut self.proposal);
                if self.domain.contains(&self.proposal)? {
                    None
                } else {
                    Some(StepOutcome::OutsideDomain)
                }
            }
        };

        if outcome.is_none() {
            DistanceCache::distances_from(&self.current, k, &self.proposal, &mut self.row);
            let delta_cur = self.cache.min_distance();
            let delta_prop = self.cache.min_after_move(k, &self.row);
            if delta_prop <= 0.0 {
                outcome = Some(StepOutcome::Coincident);
            } else {
                let log_ratio = self.log_ratio(k, beta, tau, delta_cur, delta_prop)?;
                let u: f64 = self.rng.random();
                if log_ratio >= 0.0 || u.ln() < log_ratio {
                    self.commit(k);
                    outcome = Some(StepOutcome::Accepted);
                } else {
                    outcome = Some(StepOutcome::Rejected);
                }
            }
        }
        let outcome = outcome.expect("outcome decided");

        let s = &mut self.stats;
        s.iterations += 1;
        s.proposal_rejections += rejections as u64;
        match outcome {
            StepOutcome::Accepted => s.accepted += 1,
            StepOutcome::Rejected => s.rejected += 1,
            StepOutcome::OutsideDomain => s.outside_domain += 1,
            StepOutcome::Exhausted => s.exhausted += 1,
            StepOutcome::Coincident => s.coincident += 1,
        }
        Ok(TraceRecord {
            iteration: n,
            beta,
            tau,
            accepted: outcome == StepOutcome::Accepted,
            moved_index: k,
            outcome,
            proposal_rejections: rejections,
            delta_current: self.cache.min_distance(),
            delta_best: self.best_score.delta,
        })
    }

    fn log_ratio(&self, k: usize, beta: f64, tau: f64, delta_cur: f64, delta_prop: f64) -> Result<f64> {
        let cfg = self.config;
        if cfg.algorithm == Algorithm::A3 {
            return Ok(log_accept_ratio_a3(delta_cur, delta_prop, beta));
        }
        let r_cur = self.sampler.exact_row_sum(self.cache.row(k), k);
        let r_prop = self.sampler.exact_row_sum(&self.row, k);
        let total = self.sampler.row_sum_total();
        let w_cur = r_cur / total;
        let w_prop = r_prop / (total - 2.0 * r_cur + 2.0 * r_prop);
        match cfg.algorithm {
            Algorithm::A1 => {
                let mass = self.mass.as_ref().expect("constrained chain has a mass model");
                let g_cur = mass.log_mass(self.domain, self.current.point(k), tau)?;
                let g_prop = mass.log_mass(self.domain, &self.proposal, tau)?;
                Ok(a1_log_ratio(beta, delta_cur, delta_prop, g_cur, g_prop, w_cur, w_prop))
            }
            _ => Ok((energy_log_factor(beta, delta_cur, delta_prop) + w_prop.ln() - w_cur.ln()).min(0.0)),
        }
    }

    fn commit(&mut self, k: usize) {
        self.sampler.commit_move(&self.cache, k, &self.row);
        self.cache.commit_move(k, &self.row);
        self.current.set_point(k, &self.proposal);
        self.sampler.maybe_refresh(&self.cache);
        let tol = self.config.tie_tol;
        if self.cache.min_distance() >= self.best_score.delta * (1.0 - tol) {
            let score = self.cache.score(tol);
            if score.beats(&self.best_score, tol) {
                self.best_score = score;
                self.best.clone_from(&self.current);
            }
        }
    }
}
