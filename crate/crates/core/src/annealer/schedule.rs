//! Inverse cooling and proposal-variance schedules.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Inverse temperature `beta_n` as a function of the (1-based) iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoolingSchedule {
    /// `log(n + e) / t0`, the rate backed by the convergence theorem when `t0` is large enough.
    LogTheorem { t0: f64 },
    /// `sqrt(n) / t0`; faster cooling that is robust to a poor `t0`.
    SqrtHeuristic { t0: f64 },
    Constant { t0: f64 },
    /// Explicit `beta` values for iterations `1, 2, ...`; the last value is held afterwards.
    Table { betas: Vec<f64> },
}

impl CoolingSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::LogTheorem { t0 } | Self::SqrtHeuristic { t0 } | Self::Constant { t0 } => {
                if !(*t0 > 0.0 && t0.is_finite()) {
                    return Err(config_err(format!("cooling t0 must be positive, got {t0}")));
                }
            }
            Self::Table { betas } => {
                if betas.is_empty() {
                    return Err(config_err("cooling table is empty"));
                }
                if betas.iter().any(|b| !(*b > 0.0)) {
                    return Err(config_err("cooling table values must be positive"));
                }
                if betas.windows(2).any(|w| w[1] < w[0]) {
                    return Err(config_err("cooling table must be non-decreasing"));
                }
            }
        }
        Ok(())
    }

    pub fn t0(&self) -> Option<f64> {
        match self {
            Self::LogTheorem { t0 } | Self::SqrtHeuristic { t0 } | Self::Constant { t0 } => Some(*t0),
            Self::Table { .. } => None,
        }
    }

    pub fn beta(&self, n: u64) -> f64 {
        let n = n.max(1);
        match self {
            Self::LogTheorem { t0 } => (n as f64 + std::f64::consts::E).ln() / t0,
            Self::SqrtHeuristic { t0 } => (n as f64).sqrt() / t0,
            Self::Constant { t0 } => 1.0 / t0,
            Self::Table { betas } => betas[(n as usize - 1).min(betas.len() - 1)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    /// `tau0 / sqrt(n)`
    InvSqrt,
    /// `tau0` for the first `freeze_fraction` of the run, then `tau0 / sqrt(n - n_freeze)`.
    FrozenThenInvSqrt,
    Constant,
}

/// Scale `tau_n` of the random-walk covariance `tau_n * Sigma`, clamped to `[tau_min, tau0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSchedule {
    pub tau0: f64,
    pub tau_min: f64,
    pub kind: VarianceKind,
    #[serde(default)]
    pub freeze_fraction: f64,
}

impl VarianceSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(config_err(format!("tau0 must be positive, got {}", self.tau0)));
        }
        if !(self.tau_min > 0.0 && self.tau_min <= self.tau0) {
            return Err(config_err(format!("tau_min must lie in (0, tau0], got {}", self.tau_min)));
        }
        if !(0.0..1.0).contains(&self.freeze_fraction) {
            return Err(config_err(format!("freeze_fraction must lie in [0, 1), got {}", self.freeze_fraction)));
        }
        Ok(())
    }

    pub fn tau(&self, n: u64, total: u64) -> f64 {
        let n = n.max(1);
        let raw = match self.kind {
            VarianceKind::Constant => self.tau0,
            VarianceKind::InvSqrt => self.tau0 / (n as f64).sqrt(),
            VarianceKind::FrozenThenInvSqrt => {
                let frozen = (self.freeze_fraction * total as f64).floor() as u64;
                if n <= frozen {
                    self.tau0
                } else {
                    self.tau0 / ((n - frozen) as f64).sqrt()
                }
            }
        };
        raw.clamp(self.tau_min, self.tau0)
    }
}
