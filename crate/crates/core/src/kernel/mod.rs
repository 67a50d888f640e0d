//! Kernel interpolation (simple and universal Kriging) on a design.
//!
//! Kernels are of the form `exp(-sum_j theta_j |x_j - y_j|^nu)`, positive definite for
//! `0 < nu <= 2`. The Gram matrix is regularised by a nugget `eta` that escalates by
//! factors of 10 when the Cholesky factorisation fails.

mod blackbox;
mod metrics;
mod mle;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{config_err, Error, Result};

pub use blackbox::{synthetic_blackbox, BlackBox, BlackBoxKind};
pub use metrics::{error_metrics, ErrorReport};
pub use mle::{log_likelihood, mle_fit, MleBounds, MleFit};

pub const DEFAULT_NUGGET: f64 = 1e-10;
/// Largest nugget tried before the Gram matrix is declared ill-conditioned.
pub const MAX_NUGGET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `exp(-theta |x - y|^2)`, one `theta` for all axes.
    GaussianIsotropic,
    /// `exp(-sum_j theta_j |x_j - y_j|^nu)`.
    GeneralizedExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// One entry per axis; all equal for the isotropic Gaussian.
    pub theta: Vec<f64>,
    pub nu: f64,
}

impl KernelSpec {
    pub fn gaussian(dim: usize, theta: f64) -> Result<Self> {
        let spec = Self { family: KernelFamily::GaussianIsotropic, theta: vec![theta; dim], nu: 2.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn generalized_exponential(theta: Vec<f64>, nu: f64) -> Result<Self> {
        let spec = Self { family: KernelFamily::GeneralizedExponential, theta, nu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.is_empty() {
            return Err(config_err("kernel needs at least one theta"));
        }
        if self.theta.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(config_err(format!("theta must be positive, got {:?}", self.theta)));
        }
        if !(self.nu > 0.0 && self.nu <= 2.0) {
            return Err(config_err(format!("nu must lie in (0, 2], got {}", self.nu)));
        }
        if self.family == KernelFamily::GaussianIsotropic {
            if self.nu != 2.0 {
                return Err(config_err("the Gaussian kernel has nu = 2"));
            }
            if self.theta.iter().any(|t| *t != self.theta[0]) {
                return Err(config_err("the isotropic Gaussian kernel has a single theta"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        if self.nu == 2.0 {
            for ((a, b), t) in x.iter().zip(y).zip(&self.theta) {
                let h = a - b;
                s += t * h * h;
            }
        } else if self.nu == 1.0 {
            for ((a, b), t) in x.iter().zip(y).zip(&self.theta) {
                s += t * (a - b).abs();
            }
        } else {
            for ((a, b), t) in x.iter().zip(y).zip(&self.theta) {
                s += t * (a - b).abs().powf(self.nu);
            }
        }
        (-s).exp()
    }

    pub fn gram(&self, design: &Design) -> DMatrix<f64> {
        let n = design.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = 1.0;
            for j in 0..i {
                let v = self.eval(design.point(i), design.point(j));
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// `k(x)_i = K(x, x_i)`.
    pub fn cross(&self, design: &Design, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(design.len(), design.points().map(|p| self.eval(x, p)))
    }
}

/// Polynomial trend of a universal-Kriging model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendSpec {
    #[default]
    None,
    Constant,
    Linear,
    Quadratic,
}

impl TrendSpec {
    /// Number of basis functions in dimension `d`.
    pub fn basis_size(self, d: usize) -> usize {
        match self {
            Self::None => 0,
            Self::Constant => 1,
            Self::Linear => 1 + d,
            Self::Quadratic => 1 + d + d * (d + 1) / 2,
        }
    }

    /// Monomials `1, x_j, x_j x_k (j <= k)`, up to the trend degree.
    pub fn basis(self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        if self == Self::None {
            return;
        }
        out.push(1.0);
        if matches!(self, Self::Linear | Self::Quadratic) {
            out.extend_from_slice(x);
        }
        if self == Self::Quadratic {
            for j in 0..x.len() {
                for k in j..x.len() {
                    out.push(x[j] * x[k]);
                }
            }
        }
    }

    fn matrix(self, design: &Design) -> DMatrix<f64> {
        let p = self.basis_size(design.dim());
        let mut f = DMatrix::zeros(design.len(), p);
        let mut row = Vec::with_capacity(p);
        for (i, x) in design.points().enumerate() {
            self.basis(x, &mut row);
            for (j, v) in row.iter().enumerate() {
                f[(i, j)] = *v;
            }
        }
        f
    }
}

/// Cholesky factor of `K + eta I`, escalating `eta` from `start` by factors of 10 up to
/// [`MAX_NUGGET`].
pub(crate) fn factor_with_nugget(gram: &DMatrix<f64>, start: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut eta = start;
    loop {
        let mut k = gram.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += eta;
        }
        if let Some(chol) = Cholesky::new(k) {
            return Ok((chol, eta));
        }
        let next = if eta < DEFAULT_NUGGET { DEFAULT_NUGGET } else { eta * 10.0 };
        if next > MAX_NUGGET * (1.0 + 1e-9) {
            return Err(Error::IllConditioned { condition: condition_estimate(gram), nugget: eta });
        }
        eta = next;
    }
}

fn condition_estimate(gram: &DMatrix<f64>) -> f64 {
    let eig = gram.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Generalised-least-squares trend coefficients and kernel weights for data `values`.
pub(crate) struct Solve {
    pub alpha: DVector<f64>,
    pub beta: DVector<f64>,
    /// `r^T (K + eta I)^{-1} r` with `r` the trend residual.
    pub quadratic: f64,
}

pub(crate) fn solve_system(chol: &Cholesky<f64, Dyn>, design: &Design, trend: TrendSpec, values: &DVector<f64>) -> Result<Solve> {
    let p = trend.basis_size(design.dim());
    let beta = if p == 0 {
        DVector::zeros(0)
    } else {
        let f = trend.matrix(design);
        let kinv_f = chol.solve(&f);
        let a = f.transpose() * &kinv_f;
        let b = kinv_f.transpose() * values;
        let ch = Cholesky::new(a).ok_or_else(|| {
            Error::Degenerate(format!("trend basis of size {p} is not identifiable on {} points", design.len()))
        })?;
        ch.solve(&b)
    };
    let residual = if p == 0 { values.clone() } else { values - trend.matrix(design) * &beta };
    let alpha = chol.solve(&residual);
    let quadratic = residual.dot(&alpha);
    Ok(Solve { alpha, beta, quadratic })
}

/// Fitted interpolator: `s(x) = trend(x)^T beta + k(x)^T alpha`.
#[derive(Debug, Clone)]
pub struct Interpolator {
    design: Design,
    values: Vec<f64>,
    spec: KernelSpec,
    trend: TrendSpec,
    nugget: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    beta: DVector<f64>,
}

impl Interpolator {
    /// Fits the interpolator, starting the nugget escalation at `nugget`.
    pub fn fit(design: &Design, values: &[f64], spec: &KernelSpec, trend: TrendSpec, nugget: f64) -> Result<Self> {
        spec.validate()?;
        if spec.dim() != design.dim() {
            return Err(config_err(format!("kernel has dimension {}, design {}", spec.dim(), design.dim())));
        }
        if values.len() != design.len() {
            return Err(config_err(format!("{} values for {} design points", values.len(), design.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(config_err("values must be finite"));
        }
        if !(nugget >= 0.0 && nugget.is_finite()) {
            return Err(config_err(format!("nugget must be non-negative, got {nugget}")));
        }
        let p = trend.basis_size(design.dim());
        if design.len() < p {
            return Err(config_err(format!("trend needs at least {p} points, got {}", design.len())));
        }
        let (chol, nugget) = factor_with_nugget(&spec.gram(design), nugget)?;
        let f = DVector::from_column_slice(values);
        let solve = solve_system(&chol, design, trend, &f)?;
        Ok(Self {
            design: design.clone(),
            values: values.to_vec(),
            spec: spec.clone(),
            trend,
            nugget,
            chol,
            alpha: solve.alpha,
            beta: solve.beta,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn trend(&self) -> TrendSpec {
        self.trend
    }

    /// Nugget actually used, after escalation.
    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn coefficients(&self) -> &[f64] {
        self.alpha.as_slice()
    }

    pub fn trend_coefficients(&self) -> &[f64] {
        self.beta.as_slice()
    }

    /// `k(x)` for the regularised kernel `K + eta * [x == y]`: the nugget shows up only
    /// when `x` is (bit for bit) a design point.
    fn cross_regularised(&self, x: &[f64]) -> (DVector<f64>, f64) {
        let mut k = self.spec.cross(&self.design, x);
        let mut kxx = 1.0;
        for (i, p) in self.design.points().enumerate() {
            if p == x {
                k[i] += self.nugget;
                kxx += self.nugget;
            }
        }
        (k, kxx)
    }

    /// The fitted model is the exact interpolant for the regularised kernel, so design
    /// points are reproduced up to rounding.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let (k, _) = self.cross_regularised(x);
        let mut s = k.dot(&self.alpha);
        if self.trend != TrendSpec::None {
            let mut basis = Vec::new();
            self.trend.basis(x, &mut basis);
            s += basis.iter().zip(self.beta.iter()).map(|(b, c)| b * c).sum::<f64>();
        }
        s
    }

    /// `sqrt(max(0, K(x,x) - k(x)^T (K + eta I)^{-1} k(x)))` for the regularised kernel;
    /// pure kernel interpolation only.
    pub fn power_function(&self, x: &[f64]) -> Result<f64> {
        if self.trend != TrendSpec::None {
            return Err(config_err("the power function is only defined without a trend"));
        }
        let (mut k, kxx) = self.cross_regularised(x);
        self.chol.l_dirty().solve_lower_triangular_mut(&mut k);
        Ok((kxx - k.norm_squared()).max(0.0).sqrt())
    }

    pub fn to_model(&self) -> InterpolatorModel {
        InterpolatorModel {
            spec: self.spec.clone(),
            trend: self.trend,
            nugget: self.nugget,
            domain_label: self.design.domain_label().to_string(),
            points: self.design.rows(),
            values: self.values.clone(),
            coefficients: self.alpha.as_slice().to_vec(),
            trend_coefficients: self.beta.as_slice().to_vec(),
        }
    }

    /// Rebuilds a fitted interpolator. Predictions use the stored coefficients verbatim;
    /// the Gram factor is recomputed with the stored nugget for the power function.
    pub fn from_model(model: &InterpolatorModel) -> Result<Self> {
        model.spec.validate()?;
        let design = Design::from_rows(&model.points, model.domain_label.clone())?;
        let n = design.len();
        let p = model.trend.basis_size(design.dim());
        if model.spec.dim() != design.dim() || model.values.len() != n || model.coefficients.len() != n || model.trend_coefficients.len() != p {
            return Err(Error::Parse("model fields have inconsistent sizes".into()));
        }
        let mut k = model.spec.gram(&design);
        for i in 0..n {
            k[(i, i)] += model.nugget;
        }
        let chol = Cholesky::new(k).ok_or(Error::IllConditioned { condition: f64::INFINITY, nugget: model.nugget })?;
        Ok(Self {
            design,
            values: model.values.clone(),
            spec: model.spec.clone(),
            trend: model.trend,
            nugget: model.nugget,
            chol,
            alpha: DVector::from_vec(model.coefficients.clone()),
            beta: DVector::from_vec(model.trend_coefficients.clone()),
        })
    }
}

/// Serialised form of a fitted [`Interpolator`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolatorModel {
    pub spec: KernelSpec,
    pub trend: TrendSpec,
    pub nugget: f64,
    pub domain_label: String,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub trend_coefficients: Vec<f64>,
}
