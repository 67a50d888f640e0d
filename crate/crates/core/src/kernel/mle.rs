//! Maximum-likelihood kernel parameters by multi-start coordinate search.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{config_err, Error, Result};

use super::{factor_with_nugget, solve_system, KernelFamily, KernelSpec, TrendSpec, DEFAULT_NUGGET};

const MAX_STARTS: usize = 5;
/// Coordinate search stops once every step is below this fraction of its range.
const MIN_STEP_REL: f64 = 1e-6;

/// Profiled Gaussian-process log-likelihood, up to an additive constant:
/// `-(N/2) ln(sigma2) - (1/2) ln det(K + eta I)` with `sigma2 = r^T (K + eta I)^{-1} r / N`
/// and `r` the generalised-least-squares trend residual.
pub fn log_likelihood(design: &Design, values: &[f64], spec: &KernelSpec, trend: TrendSpec, nugget: f64) -> Result<f64> {
    spec.validate()?;
    if values.len() != design.len() {
        return Err(config_err(format!("{} values for {} design points", values.len(), design.len())));
    }
    let (chol, _) = factor_with_nugget(&spec.gram(design), nugget)?;
    let f = DVector::from_column_slice(values);
    let solve = solve_system(&chol, design, trend, &f)?;
    let n = design.len() as f64;
    let sigma2 = solve.quadratic / n;
    if !(sigma2 > 0.0) {
        return Err(Error::Degenerate("data are exactly explained by the trend; process variance is zero".into()));
    }
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * n * sigma2.ln() - 0.5 * log_det)
}

/// Search box for the kernel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleBounds {
    pub theta: (f64, f64),
    /// Ignored for the Gaussian family; a degenerate interval fixes `nu`.
    pub nu: (f64, f64),
}

impl Default for MleBounds {
    fn default() -> Self {
        Self { theta: (1e-2, 1e3), nu: (0.5, 2.0) }
    }
}

impl MleBounds {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.theta;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(config_err(format!("theta bounds must satisfy 0 < lo < hi, got {:?}", self.theta)));
        }
        let (lo, hi) = self.nu;
        if !(lo > 0.0 && lo <= hi && hi <= 2.0) {
            return Err(config_err(format!("nu bounds must satisfy 0 < lo <= hi <= 2, got {:?}", self.nu)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MleFit {
    pub spec: KernelSpec,
    pub log_likelihood: f64,
    pub evaluations: usize,
    /// Every multi-start initial point with its log-likelihood (`-inf` when ill-conditioned).
    pub starts: Vec<(KernelSpec, f64)>,
}

struct Problem<'a> {
    design: &'a Design,
    values: &'a [f64],
    family: KernelFamily,
    trend: TrendSpec,
    lower: Vec<f64>,
    upper: Vec<f64>,
    fixed_nu: Option<f64>,
    evaluations: usize,
}

impl Problem<'_> {
    fn spec(&self, p: &[f64]) -> KernelSpec {
        let d = self.design.dim();
        match self.family {
            KernelFamily::GaussianIsotropic => KernelSpec {
                family: KernelFamily::GaussianIsotropic,
                theta: vec![p[0].exp(); d],
                nu: 2.0,
            },
            KernelFamily::GeneralizedExponential => KernelSpec {
                family: KernelFamily::GeneralizedExponential,
                theta: p[..d].iter().map(|v| v.exp()).collect(),
                nu: self.fixed_nu.unwrap_or_else(|| p[d]),
            },
        }
    }

    fn eval(&mut self, p: &[f64]) -> f64 {
        self.evaluations += 1;
        log_likelihood(self.design, self.values, &self.spec(p), self.trend, DEFAULT_NUGGET).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Maximises [`log_likelihood`] over `log(theta)` (and `nu`) within `bounds`, using at
/// most `budget` likelihood evaluations. The first start is the centre of the box, the
/// others are uniform draws; each start is refined by a compass search.
#[allow(clippy::too_many_arguments)]
pub fn mle_fit<R: Rng + ?Sized>(
    design: &Design,
    values: &[f64],
    family: KernelFamily,
    trend: TrendSpec,
    bounds: MleBounds,
    budget: usize,
    rng: &mut R,
) -> Result<MleFit> {
    bounds.validate()?;
    if design.len() < 3 {
        return Err(config_err(format!("maximum likelihood needs at least 3 points, got {}", design.len())));
    }
    if budget == 0 {
        return Err(config_err("budget must be >= 1"));
    }
    let d = design.dim();
    let (tl, th) = (bounds.theta.0.ln(), bounds.theta.1.ln());
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut fixed_nu = None;
    match family {
        KernelFamily::GaussianIsotropic => {
            lower.push(tl);
            upper.push(th);
        }
        KernelFamily::GeneralizedExponential => {
            lower.extend(std::iter::repeat_n(tl, d));
            upper.extend(std::iter::repeat_n(th, d));
            if bounds.nu.0 == bounds.nu.1 {
                fixed_nu = Some(bounds.nu.0);
            } else {
                lower.push(bounds.nu.0);
                upper.push(bounds.nu.1);
            }
        }
    }
    let dims = lower.len();
    let mut problem = Problem { design, values, family, trend, lower, upper, fixed_nu, evaluations: 0 };

    let n_starts = (budget / (20 * dims)).clamp(1, MAX_STARTS);
    let mut starts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n_starts);
    for s in 0..n_starts {
        let p: Vec<f64> = (0..dims)
            .map(|j| {
                let (lo, hi) = (problem.lower[j], problem.upper[j]);
                if s == 0 {
                    0.5 * (lo + hi)
                } else {
                    lo + rng.random::<f64>() * (hi - lo)
                }
            })
            .collect();
        let v = problem.eval(&p);
        starts.push((p, v));
    }

    let mut best = starts.iter().max_by(|a, b| a.1.total_cmp(&b.1)).cloned().expect("at least one start");
    let per_start = (budget - n_starts) / n_starts;
    for (p0, v0) in &starts {
        if !v0.is_finite() {
            continue;
        }
        let (p, v) = compass_search(&mut problem, p0.clone(), *v0, per_start);
        if v > best.1 {
            best = (p, v);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::IllConditioned { condition: f64::INFINITY, nugget: super::MAX_NUGGET });
    }
    Ok(MleFit {
        spec: problem.spec(&best.0),
        log_likelihood: best.1,
        evaluations: problem.evaluations,
        starts: starts.iter().map(|(p, v)| (problem.spec(p), *v)).collect(),
    })
}

fn compass_search(problem: &mut Problem<'_>, mut p: Vec<f64>, mut value: f64, budget: usize) -> (Vec<f64>, f64) {
    let dims = p.len();
    let ranges: Vec<f64> = (0..dims).map(|j| problem.upper[j] - problem.lower[j]).collect();
    let mut steps: Vec<f64> = ranges.iter().map(|r| 0.25 * r).collect();
    let mut used = 0;
    while used < budget {
        let mut improved = false;
        'axes: for j in 0..dims {
            for sign in [1.0, -1.0] {
                if used >= budget {
                    break 'axes;
                }
                let cand = (p[j] + sign * steps[j]).clamp(problem.lower[j], problem.upper[j]);
                if cand == p[j] {
                    continue;
                }
                let old = p[j];
                p[j] = cand;
                let v = problem.eval(&p);
                used += 1;
                if v > value {
                    value = v;
                    improved = true;
                    break;
                }
                p[j] = old;
            }
        }
        if !improved {
            for s in steps.iter_mut() {
                *s *= 0.5;
            }
            if steps.iter().zip(&ranges).all(|(s, r)| *s < MIN_STEP_REL * r) {
                break;
            }
        }
    }
    (p, value)
}
