use maximin_core::annealer::{self, Algorithm, AnnealerConfig, CoolingSchedule, TraceSink, VarianceKind};
use maximin_core::baselines::{self, MaximinLhsParams};
use maximin_core::design::{maximin_score, Design, MaximinScore};
use maximin_core::domain::{Domain, MassMethod};
use maximin_core::rng::{derive_seed, seeded};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::options::{CoolingArg, MassArg, Method, MethodOptions, VarianceArg};

pub const DEFAULT_ITERATIONS: u64 = 100_000;
pub const DEFAULT_SOBOL_MAX_DRAWS: u64 = 1_000_000;
const LHS_TUNE_TAG: u64 = 0x6c68_73;
const VOLUME_TAG: u64 = 0x766f_6c;

pub struct Generated {
    pub design: Design,
    /// `None` for single-point designs.
    pub score: Option<MaximinScore>,
    /// Resolved parameters of the generator.
    pub params: serde_json::Value,
}

pub fn annealer_config(
    algorithm: Algorithm,
    opts: &MethodOptions,
    domain: &Domain,
    n: usize,
    seed: u64,
    stream: u64,
) -> CliResult<AnnealerConfig> {
    let iterations = opts.iterations.unwrap_or(DEFAULT_ITERATIONS);
    let mut config = AnnealerConfig::tuned(domain, algorithm, n, iterations, seed)?;
    config.stream = stream;
    let t0 = opts.t0.unwrap_or_else(|| config.cooling.t0().expect("tuned cooling has a t0"));
    config.cooling = match opts.cooling.unwrap_or(CoolingArg::Sqrt) {
        CoolingArg::Log => CoolingSchedule::LogTheorem { t0 },
        CoolingArg::Sqrt => CoolingSchedule::SqrtHeuristic { t0 },
        CoolingArg::Constant => CoolingSchedule::Constant { t0 },
    };
    if let Some(tau0) = opts.tau0 {
        config.variance.tau_min = tau0 * annealer::DEFAULT_TAU_MIN_REL;
        config.variance.tau0 = tau0;
    }
    if let Some(tau_min) = opts.tau_min {
        config.variance.tau_min = tau_min;
    }
    if let Some(kind) = opts.variance {
        config.variance.kind = match kind {
            VarianceArg::InvSqrt => VarianceKind::InvSqrt,
            VarianceArg::Frozen => VarianceKind::FrozenThenInvSqrt,
            VarianceArg::Constant => VarianceKind::Constant,
        };
    }
    if let Some(f) = opts.freeze_fraction {
        config.variance.freeze_fraction = f;
    }
    if let Some(g) = opts.gamma {
        config.gamma = g;
    }
    if let Some(samples) = opts.mass_samples {
        config.mass_mc_samples = samples;
    }
    config.mass = match opts.mass {
        None => None,
        Some(MassArg::ClosedForm) => Some(MassMethod::ClosedForm),
        Some(MassArg::MonteCarlo) => Some(MassMethod::MonteCarlo { samples: config.mass_mc_samples }),
    };
    config.trace_thin = opts.trace_thin.unwrap_or(0);
    config.validate()?;
    Ok(config)
}

fn algorithm(method: Method) -> Option<Algorithm> {
    match method {
        Method::Sa1 => Some(Algorithm::A1),
        Method::Sa2 => Some(Algorithm::A2),
        Method::Sa3 => Some(Algorithm::A3),
        _ => None,
    }
}

fn lhs_params(opts: &MethodOptions, m: usize, d: usize, seed: u64) -> CliResult<Option<MaximinLhsParams>> {
    if opts.lhs_iterations == Some(0) {
        return Ok(None);
    }
    let mut params = MaximinLhsParams::tuned(m, d, &mut seeded(derive_seed(seed, LHS_TUNE_TAG), 0))?;
    if let Some(it) = opts.lhs_iterations {
        params.iterations = it;
    }
    if let Some(t0) = opts.lhs_t0 {
        params.t0 = t0;
    }
    Ok(Some(params))
}

fn require_box(domain: &Domain, method: Method) -> CliResult<()> {
    if domain.is_box() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{} needs a box domain; use truncated-lhs on {}", method.name(), domain.label())))
    }
}

/// Runs one replicate of `method`. Replicate `stream` of base seed `seed` is
/// reproducible on its own.
pub fn generate(
    method: Method,
    opts: &MethodOptions,
    domain: &Domain,
    n: usize,
    seed: u64,
    stream: u64,
    trace: &mut dyn TraceSink,
) -> CliResult<Generated> {
    if n == 0 {
        return Err(CliError::Usage("n must be >= 1".into()));
    }
    let d = domain.dim();
    let mut rng = seeded(seed, stream);
    let (design, params) = match method {
        Method::Sa1 | Method::Sa2 | Method::Sa3 => {
            let config = annealer_config(algorithm(method).unwrap(), opts, domain, n, seed, stream)?;
            let result = annealer::run(&config, domain, None, trace)?;
            let params = json!({"annealer": config, "stats": result.stats, "mass": result.mass, "sigma": result.sigma});
            (result.best, params)
        }
        Method::Uniform => (baselines::uniform_design(domain, n, &mut rng)?, json!({})),
        Method::Lhs | Method::LhsMaximin => {
            require_box(domain, method)?;
            let (unit, params) = if method == Method::LhsMaximin {
                let p = lhs_params(opts, n, d, seed)?.unwrap_or(MaximinLhsParams { iterations: 0, t0: 1.0 });
                (baselines::maximin_lhs(n, d, p, &mut rng)?, json!({"lhs_iterations": p.iterations, "lhs_t0": p.t0}))
            } else {
                (baselines::lhs(n, d, &mut rng)?, json!({}))
            };
            let mapped = unit.translate_from_unit_cube(domain.bbox())?;
            (Design::new(d, mapped.coords().to_vec(), domain.label())?, params)
        }
        Method::TruncatedLhs => {
            let m = match opts.hypercube_points {
                Some(m) => m,
                None => {
                    let volume = domain.estimate_volume(&mut seeded(VOLUME_TAG, 0), annealer::DEFAULT_VOLUME_SAMPLES)?;
                    (n as f64 * domain.bbox().volume() / volume).round() as usize
                }
            };
            let p = lhs_params(opts, m, d, seed)?;
            let t = baselines::truncated_lhs(domain, m, p, &mut rng)?;
            let params = json!({
                "hypercube_points": m,
                "lhs_iterations": p.map(|p| p.iterations),
                "lhs_t0": p.map(|p| p.t0),
            });
            (t.design, params)
        }
        Method::Sobol => {
            let skip = opts.sobol_skip.unwrap_or(0);
            let max_draws = opts.max_draws.unwrap_or(DEFAULT_SOBOL_MAX_DRAWS);
            (baselines::sobol_design(domain, n, skip, max_draws)?, json!({"sobol_skip": skip, "max_draws": max_draws}))
        }
    };
    let score = if design.len() >= 2 { Some(maximin_score(&design, maximin_core::design::DEFAULT_TIE_TOL)?) } else { None };
    Ok(Generated { design, score, params })
}
