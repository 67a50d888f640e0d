//! Simulated annealing for maximin designs.
//!
//! Three chains share the same skeleton: draw a pair of points with weight
//! `1/(r_ij + gamma)`, pick one end, move it with a Gaussian random walk, accept by a
//! Metropolis rule on `U(X) = diam(E) - delta_X`.
//!
//! * [`Algorithm::A1`]: proposal truncated to the domain, Metropolis-Hastings ratio
//!   includes truncation masses and selection weights.
//! * [`Algorithm::A2`]: unconstrained proposal, out-of-domain moves are rejected.
//! * [`Algorithm::A3`]: truncated proposal with the plain Metropolis ratio.
//!
//! All chains return the best design visited, not the last one.

pub mod acceptance;
pub mod chain;
pub mod proposal;
pub mod schedule;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{maximin_distance, Design, MaximinScore, DEFAULT_TIE_TOL};
use crate::domain::{CovarianceMatrix, Domain, MassMethod, DEFAULT_JITTER_REL, DEFAULT_MASS_SAMPLES};
use crate::error::{config_err, Error, Result};
use crate::rng::{derive_seed, seeded};

pub use acceptance::{log_accept_ratio_a1, log_accept_ratio_a2, log_accept_ratio_a3, MassKind, MassModel};
pub use chain::{Chain, ChainStats, StepOutcome, TraceRecord};
pub use proposal::{select_pair, select_point, PairSampler, RandomWalk};
pub use schedule::{CoolingSchedule, VarianceKind, VarianceSchedule};

/// `gamma` as a fraction of the bounding-box diagonal.
pub const DEFAULT_GAMMA_REL: f64 = 1e-6;
pub const DEFAULT_T0_FRACTION: f64 = 0.5;
pub const DEFAULT_T0_REPLICATES: usize = 100;
pub const DEFAULT_FREEZE_FRACTION: f64 = 0.25;
/// `tau_min` as a fraction of `tau0`.
pub const DEFAULT_TAU_MIN_REL: f64 = 1e-4;
pub const DEFAULT_PROPOSAL_MAX_REJECTS: usize = 1000;
pub const DEFAULT_COVARIANCE_SAMPLES: usize = 10_000;
pub const DEFAULT_VOLUME_SAMPLES: usize = 100_000;

const INIT_TAG: u64 = 0x696e_6974;
const COV_TAG: u64 = 0x636f_76;
const MASS_TAG: u64 = 0x6d61_7373;
const VOLUME_TAG: u64 = 0x766f_6c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(alias = "a1", alias = "sa1")]
    A1,
    #[serde(alias = "a2", alias = "sa2")]
    A2,
    #[serde(alias = "a3", alias = "sa3")]
    A3,
}

impl Algorithm {
    pub fn constrained(self) -> bool {
        matches!(self, Self::A1 | Self::A3)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a1" | "sa1" => Ok(Self::A1),
            "a2" | "sa2" => Ok(Self::A2),
            "a3" | "sa3" => Ok(Self::A3),
            other => Err(config_err(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealerConfig {
    pub algorithm: Algorithm,
    pub n_points: usize,
    pub iterations: u64,
    pub gamma: f64,
    pub cooling: CoolingSchedule,
    pub variance: VarianceSchedule,
    /// Random-walk covariance; estimated from uniform draws on the domain when absent.
    #[serde(default)]
    pub sigma: Option<CovarianceMatrix>,
    pub seed: u64,
    /// Random stream of the chain; replicate `r` of a batch uses stream `r`.
    #[serde(default)]
    pub stream: u64,
    /// Mass evaluation for A1. `None` picks the closed form when legal, else Monte Carlo.
    #[serde(default)]
    pub mass: Option<MassMethod>,
    #[serde(default = "default_mass_samples")]
    pub mass_mc_samples: usize,
    #[serde(default = "default_max_rejects")]
    pub proposal_max_rejects: usize,
    /// Emit every `trace_thin`-th record (plus the last); 0 disables tracing.
    #[serde(default)]
    pub trace_thin: u64,
    #[serde(default = "default_covariance_samples")]
    pub covariance_samples: usize,
    #[serde(default = "default_tie_tol")]
    pub tie_tol: f64,
}

fn default_mass_samples() -> usize {
    DEFAULT_MASS_SAMPLES
}

fn default_max_rejects() -> usize {
    DEFAULT_PROPOSAL_MAX_REJECTS
}

fn default_covariance_samples() -> usize {
    DEFAULT_COVARIANCE_SAMPLES
}

fn default_tie_tol() -> f64 {
    DEFAULT_TIE_TOL
}

impl AnnealerConfig {
    /// Configuration with every tuning parameter set from the domain: `gamma` relative to
    /// the bbox diagonal, `T0` a fraction of the median uniform-design `delta`,
    /// `tau0 = Vol(E)/N^(1/d)`, square-root cooling and a variance frozen for the first
    /// quarter of the run.
    pub fn tuned(domain: &Domain, algorithm: Algorithm, n_points: usize, iterations: u64, seed: u64) -> Result<Self> {
        let mut t0_rng = seeded(derive_seed(seed, INIT_TAG ^ COV_TAG), 0);
        let t0 = default_t0(domain, n_points, DEFAULT_T0_REPLICATES, DEFAULT_T0_FRACTION, &mut t0_rng)?;
        let tau0 = default_tau0(domain, n_points)?;
        Ok(Self {
            algorithm,
            n_points,
            iterations,
            gamma: DEFAULT_GAMMA_REL * domain.bbox().diagonal(),
            cooling: CoolingSchedule::SqrtHeuristic { t0 },
            variance: VarianceSchedule {
                tau0,
                tau_min: tau0 * DEFAULT_TAU_MIN_REL,
                kind: VarianceKind::FrozenThenInvSqrt,
                freeze_fraction: DEFAULT_FREEZE_FRACTION,
            },
            sigma: None,
            seed,
            stream: 0,
            mass: None,
            mass_mc_samples: DEFAULT_MASS_SAMPLES,
            proposal_max_rejects: DEFAULT_PROPOSAL_MAX_REJECTS,
            trace_thin: 0,
            covariance_samples: DEFAULT_COVARIANCE_SAMPLES,
            tie_tol: DEFAULT_TIE_TOL,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(config_err(format!("annealing needs at least 2 points, got {}", self.n_points)));
        }
        if self.iterations < 1 {
            return Err(config_err("iterations must be >= 1"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(config_err(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.proposal_max_rejects == 0 {
            return Err(config_err("proposal_max_rejects must be >= 1"));
        }
        if !(self.tie_tol >= 0.0 && self.tie_tol < 1.0) {
            return Err(config_err(format!("tie_tol must lie in [0, 1), got {}", self.tie_tol)));
        }
        self.cooling.validate()?;
        self.variance.validate()
    }
}

/// `fraction` times the median maximin distance of `replicates` uniform designs of `n` points.
pub fn default_t0<R: rand::Rng + ?Sized>(
    domain: &Domain,
    n: usize,
    replicates: usize,
    fraction: f64,
    rng: &mut R,
) -> Result<f64> {
    if replicates == 0 {
        return Err(config_err("replicates must be >= 1"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(config_err(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let mut deltas = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let design = crate::baselines::uniform_design(domain, n, rng)?;
        deltas.push(maximin_distance(&design)?);
    }
    deltas.sort_by(f64::total_cmp);
    let mid = replicates / 2;
    let median = if replicates % 2 == 1 { deltas[mid] } else { 0.5 * (deltas[mid - 1] + deltas[mid]) };
    if median <= 0.0 {
        return Err(Error::Degenerate("median uniform-design delta is zero".into()));
    }
    Ok(fraction * median)
}

/// `Vol(E) / N^(1/d)`, with the analytic volume when known and a fixed-seed Monte Carlo
/// estimate otherwise.
pub fn default_tau0(domain: &Domain, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(config_err("n must be >= 1"));
    }
    let mut rng = seeded(VOLUME_TAG, 0);
    let volume = domain.estimate_volume(&mut rng, DEFAULT_VOLUME_SAMPLES)?;
    Ok(volume / (n as f64).powf(1.0 / domain.dim() as f64))
}

/// Receives thinned trace records while a chain runs.
pub trait TraceSink {
    fn record(&mut self, record: &TraceRecord) -> Result<()>;
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, record: &TraceRecord) -> Result<()> {
        self.push(*record);
        Ok(())
    }
}

/// Discards every record.
pub struct NoTrace;

impl TraceSink for NoTrace {
    fn record(&mut self, _: &TraceRecord) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub best: Design,
    pub score: MaximinScore,
    /// Last state of the chain, kept for diagnostics.
    pub last: Design,
    pub stats: ChainStats,
    /// Covariance actually used by the random walk.
    pub sigma: CovarianceMatrix,
    pub mass: Option<MassKind>,
}

/// Covariance of the walk and, for A1, the mass model, resolved from the configuration.
pub fn resolve_walk(config: &AnnealerConfig, domain: &Domain) -> Result<(CovarianceMatrix, Option<MassModel>)> {
    let sigma = match &config.sigma {
        Some(s) => {
            if s.dim() != domain.dim() {
                return Err(config_err(format!("sigma is {0}x{0}, domain has dimension {1}", s.dim(), domain.dim())));
            }
            s.clone()
        }
        None => {
            let mut rng = seeded(derive_seed(config.seed, COV_TAG), 0);
            domain.empirical_covariance(&mut rng, config.covariance_samples, DEFAULT_JITTER_REL)?
        }
    };
    if config.algorithm == Algorithm::A1 {
        let (mass, effective) = MassModel::resolve(
            domain,
            &sigma,
            config.mass,
            config.mass_mc_samples,
            derive_seed(config.seed, MASS_TAG),
        )?;
        Ok((effective, Some(mass)))
    } else {
        Ok((sigma, None))
    }
}

/// Draws the starting design uniformly on the domain.
pub fn initial_design(config: &AnnealerConfig, domain: &Domain) -> Result<Design> {
    let mut rng = seeded(derive_seed(config.seed, INIT_TAG), config.stream);
    crate::baselines::uniform_design(domain, config.n_points, &mut rng)
}

/// Runs one chain for `config.iterations` steps and returns the best design visited.
pub fn run(config: &AnnealerConfig, domain: &Domain, initial: Option<Design>, sink: &mut dyn TraceSink) -> Result<RunResult> {
    config.validate()?;
    let initial = match initial {
        Some(d) => {
            if d.dim() != domain.dim() {
                return Err(config_err(format!("initial design has dimension {}, domain {}", d.dim(), domain.dim())));
            }
            if d.len() != config.n_points {
                return Err(config_err(format!("initial design has {} points, config asks for {}", d.len(), config.n_points)));
            }
            d.validate_in(domain)?;
            d
        }
        None => initial_design(config, domain)?,
    };
    let (sigma, mass) = resolve_walk(config, domain)?;
    let mass_kind = mass.as_ref().map(MassModel::kind);
    let walk = RandomWalk::new(&sigma);
    let rng = seeded(config.seed, config.stream);
    let mut chain = Chain::new(config, domain, initial, walk, mass, rng)?;
    let thin = config.trace_thin;
    for n in 1..=config.iterations {
        let record = chain.step(n)?;
        if thin > 0 && (n % thin == 0 || n == config.iterations) {
            sink.record(&record)?;
        }
    }
    let (best, score, last, stats) = chain.into_parts();
    Ok(RunResult { best, score, last, stats, sigma, mass: mass_kind })
}

/// Runs `replicates` independent chains, replicate `r` on stream `r`, on a pool of
/// `threads` workers (0 = all cores). Results are in replicate order and do not depend
/// on the number of workers.
pub fn run_replicates(config: &AnnealerConfig, domain: &Domain, replicates: usize, threads: usize) -> Result<Vec<Result<RunResult>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| config_err(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut cfg = config.clone();
                cfg.stream = r as u64;
                run(&cfg, domain, None, &mut NoTrace)
            })
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::maximin_score;

    fn quick(domain: &Domain, algorithm: Algorithm, n: usize, iterations: u64, seed: u64) -> AnnealerConfig {
        AnnealerConfig::tuned(domain, algorithm, n, iterations, seed).unwrap()
    }

    #[test]
    fn tau0_examples() {
        let sq = Domain::unit_hypercube(2).unwrap();
        assert!((default_tau0(&sq, 100).unwrap() - 0.1).abs() < 1e-12);
        assert!((default_tau0(&Domain::triangle2d(), 100).unwrap() - 0.05).abs() < 1e-12);
        assert!((default_tau0(&sq, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn t0_fraction_and_single_replicate() {
        let sq = Domain::unit_hypercube(2).unwrap();
        let mut a = seeded(3, 0);
        let mut b = seeded(3, 0);
        let full = default_t0(&sq, 20, 1, 1.0, &mut a).unwrap();
        let design = crate::baselines::uniform_design(&sq, 20, &mut b).unwrap();
        assert_eq!(full, maximin_distance(&design).unwrap());
        let mut c = seeded(3, 0);
        assert!((default_t0(&sq, 20, 1, 0.5, &mut c).unwrap() - 0.5 * full).abs() < 1e-15);
        assert!(default_t0(&sq, 20, 0, 0.5, &mut c).is_err());
        assert!(default_t0(&sq, 20, 3, 1.5, &mut c).is_err());
    }

    #[test]
    fn single_iteration_keeps_the_better_design() {
        let sq = Domain::unit_hypercube(2).unwrap();
        for alg in [Algorithm::A1, Algorithm::A2, Algorithm::A3] {
            let cfg = quick(&sq, alg, 5, 1, 11);
            let init = initial_design(&cfg, &sq).unwrap();
            let s0 = maximin_score(&init, cfg.tie_tol).unwrap();
            let mut trace = Vec::new();
            let mut cfg1 = cfg.clone();
            cfg1.trace_thin = 1;
            let res = run(&cfg1, &sq, Some(init.clone()), &mut trace).unwrap();
            assert_eq!(trace.len(), 1);
            let last = maximin_score(&res.last, cfg.tie_tol).unwrap();
            let expect = if last.beats(&s0, cfg.tie_tol) { last } else { s0 };
            assert_eq!(res.score, expect);
            assert_eq!(maximin_score(&res.best, cfg.tie_tol).unwrap(), res.score);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let tri = Domain::triangle2d();
        for alg in [Algorithm::A1, Algorithm::A2, Algorithm::A3] {
            let mut cfg = quick(&tri, alg, 10, 2000, 5);
            cfg.trace_thin = 1;
            let mut t1 = Vec::new();
            let mut t2 = Vec::new();
            let a = run(&cfg, &tri, None, &mut t1).unwrap();
            let b = run(&cfg, &tri, None, &mut t2).unwrap();
            assert_eq!(a.best, b.best);
            assert_eq!(t1, t2);
        }
    }

    #[test]
    fn best_never_worsens_and_iterates_stay_inside() {
        let tri = Domain::triangle2d();
        for alg in [Algorithm::A1, Algorithm::A2, Algorithm::A3] {
            let cfg = quick(&tri, alg, 15, 3000, 2);
            let (sigma, mass) = resolve_walk(&cfg, &tri).unwrap();
            let init = initial_design(&cfg, &tri).unwrap();
            let mut chain = Chain::new(&cfg, &tri, init, RandomWalk::new(&sigma), mass, seeded(cfg.seed, 0)).unwrap();
            chain.set_verify(true);
            let mut prev = chain.best_score();
            for n in 1..=cfg.iterations {
                chain.step(n).unwrap();
                let cur = chain.best_score();
                assert!(!prev.beats(&cur, cfg.tie_tol));
                prev = cur;
            }
            chain.current().validate_in(&tri).unwrap();
            chain.best().validate_in(&tri).unwrap();
        }
    }

    #[test]
    fn wrong_initial_design_is_rejected() {
        let tri = Domain::triangle2d();
        let cfg = quick(&tri, Algorithm::A3, 3, 10, 1);
        let outside = Design::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9], vec![0.5, 0.2]], "t").unwrap();
        assert!(matches!(run(&cfg, &tri, Some(outside), &mut NoTrace), Err(Error::OutsideDomain { .. })));
        let short = Design::from_rows(&[vec![0.9, 0.1], vec![0.5, 0.2]], "t").unwrap();
        assert!(run(&cfg, &tri, Some(short), &mut NoTrace).is_err());
    }

    #[test]
    fn replicates_do_not_depend_on_thread_count() {
        let sq = Domain::unit_hypercube(2).unwrap();
        let cfg = quick(&sq, Algorithm::A3, 8, 500, 9);
        let one: Vec<_> = run_replicates(&cfg, &sq, 4, 1).unwrap().into_iter().map(|r| r.unwrap().best).collect();
        let many: Vec<_> = run_replicates(&cfg, &sq, 4, 3).unwrap().into_iter().map(|r| r.unwrap().best).collect();
        assert_eq!(one, many);
        assert_ne!(one[0], one[1]);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = quick(&Domain::triangle2d(), Algorithm::A1, 10, 100, 1);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: AnnealerConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
