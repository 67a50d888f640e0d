//! Deterministic smooth test functions standing in for an expensive simulator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::rng::seeded;

use super::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlackBoxKind {
    /// `offset + sum_i a_i K(x, z_i)` with positive `a_i` and a Gaussian kernel.
    RkhsMixture,
    /// `3 + sin(2 pi w.x + phi) + (u.x)^2 / 2`.
    SmoothRidge,
}

impl std::str::FromStr for BlackBoxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "rkhs_mixture" => Ok(Self::RkhsMixture),
            "smooth_ridge" => Ok(Self::SmoothRidge),
            other => Err(config_err(format!("unknown black box {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlackBox {
    RkhsMixture { offset: f64, weights: Vec<f64>, centers: Vec<Vec<f64>>, kernel: KernelSpec },
    SmoothRidge { w: Vec<f64>, u: Vec<f64>, phase: f64 },
}

const MIXTURE_OFFSET: f64 = 1.0;
const MIXTURE_THETA: f64 = 5.0;

/// Builds the test function of `kind` on `[0,1]^d`; the same seed gives the same function.
pub fn synthetic_blackbox(kind: BlackBoxKind, dim: usize, seed: u64) -> Result<BlackBox> {
    if dim == 0 {
        return Err(config_err("dimension must be >= 1"));
    }
    let mut rng = seeded(seed, 0x626f_78);
    Ok(match kind {
        BlackBoxKind::RkhsMixture => {
            let m = 8 + 4 * dim;
            let centers: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
            let weights = (0..m).map(|_| rng.random_range(0.5..1.5)).collect();
            BlackBox::RkhsMixture {
                offset: MIXTURE_OFFSET,
                weights,
                centers,
                kernel: KernelSpec::gaussian(dim, MIXTURE_THETA)?,
            }
        }
        BlackBoxKind::SmoothRidge => {
            let scale = 1.0 / (dim as f64).sqrt();
            let w = (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let u = (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            BlackBox::SmoothRidge { w, u, phase: rng.random_range(0.0..std::f64::consts::TAU) }
        }
    })
}

impl BlackBox {
    pub fn dim(&self) -> usize {
        match self {
            Self::RkhsMixture { kernel, .. } => kernel.dim(),
            Self::SmoothRidge { w, .. } => w.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::RkhsMixture { offset, weights, centers, kernel } => {
                offset + weights.iter().zip(centers).map(|(a, z)| a * kernel.eval(x, z)).sum::<f64>()
            }
            Self::SmoothRidge { w, u, phase } => {
                let dot = |v: &[f64]| v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                let s = dot(u);
                3.0 + (std::f64::consts::TAU * dot(w) + phase).sin() + 0.5 * s * s
            }
        }
    }

    /// Lower bound of the function over all of `R^d`.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Self::RkhsMixture { offset, .. } => *offset,
            Self::SmoothRidge { .. } => 2.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Design;
    use crate::kernel::{Interpolator, TrendSpec};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_function() {
        for kind in [BlackBoxKind::RkhsMixture, BlackBoxKind::SmoothRidge] {
            let a = synthetic_blackbox(kind, 3, 9).unwrap();
            let b = synthetic_blackbox(kind, 3, 9).unwrap();
            let c = synthetic_blackbox(kind, 3, 10).unwrap();
            assert_eq!(a, b);
            assert_ne!(a.eval(&[0.1, 0.2, 0.3]), c.eval(&[0.1, 0.2, 0.3]));
        }
    }

    #[test]
    fn mixture_is_reproduced_from_its_centres() {
        let f = synthetic_blackbox(BlackBoxKind::RkhsMixture, 2, 3).unwrap();
        let BlackBox::RkhsMixture { offset, centers, kernel, .. } = &f else { unreachable!() };
        let design = Design::from_rows(centers, "unit").unwrap();
        let values: Vec<f64> = design.points().map(|p| f.eval(p) - offset).collect();
        let s = Interpolator::fit(&design, &values, kernel, TrendSpec::None, 0.0).unwrap();
        let mut rng = seeded(1, 1);
        for _ in 0..200 {
            let y = [rng.random::<f64>(), rng.random::<f64>()];
            assert!((s.predict(&y) + offset - f.eval(&y)).abs() < 1e-8);
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("smooth-ridge".parse::<BlackBoxKind>().unwrap(), BlackBoxKind::SmoothRidge);
        assert!("engine".parse::<BlackBoxKind>().is_err());
    }

    proptest! {
        #[test]
        fn values_stay_away_from_zero(seed in any::<u64>(), ridge in any::<bool>()) {
            let kind = if ridge { BlackBoxKind::SmoothRidge } else { BlackBoxKind::RkhsMixture };
            let f = synthetic_blackbox(kind, 3, seed).unwrap();
            let mut rng = seeded(seed, 2);
            for _ in 0..10_000 {
                let x = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
                prop_assert!(f.eval(&x) >= f.lower_bound());
            }
        }
    }
}
