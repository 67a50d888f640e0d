//! Bounded input domains.
//!
//! A [`Domain`] is a known enclosing [`BoundingBox`] together with a membership oracle.
//! Built-in shapes carry exact predicates and analytic volumes; indicator-only domains
//! delegate to an external program (see [`external`]) or an in-process predicate.

pub mod external;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{config_err, Error, Result};
use crate::rng::DesignRng;
pub use external::ExternalIndicator;

pub const DEFAULT_MAX_ATTEMPTS: usize = 1_000_000;
pub const DEFAULT_JITTER_REL: f64 = 1e-8;
pub const DEFAULT_MASS_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BoundingBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for BoundingBox {
    type Error = Error;
    fn try_from(raw: RawBox) -> Result<Self> {
        BoundingBox::new(raw.lower, raw.upper)
    }
}

impl From<BoundingBox> for RawBox {
    fn from(b: BoundingBox) -> Self {
        RawBox { lower: b.lower, upper: b.upper }
    }
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(config_err("bounding box must have dimension >= 1"));
        }
        if lower.len() != upper.len() {
            return Err(config_err(format!(
                "bounding box bounds have mismatched lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(config_err(format!("bounding box axis {k}: need finite lower < upper, got [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Self { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.width(k)).product()
    }

    /// Length of the main diagonal; an upper bound on the diameter of anything inside.
    pub fn diagonal(&self) -> f64 {
        (0..self.dim()).map(|k| self.width(k).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| *l <= *v && *v <= *u)
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (k, v) in out.iter_mut().enumerate() {
            *v = self.lower[k] + rng.random::<f64>() * self.width(k);
        }
    }

    pub fn encloses(&self, other: &BoundingBox) -> bool {
        self.dim() == other.dim() && self.contains(&other.lower) && self.contains(&other.upper)
    }
}

/// Parameters of the analytic domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinDomain {
    Hypercube { lower: Vec<f64>, upper: Vec<f64> },
    /// `{(x1, x2) in [0,1]^2 : x1 > x2}`
    Triangle2d,
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
}

type PredicateFn = dyn Fn(&[f64]) -> bool + Send + Sync;

#[derive(Clone)]
pub enum Shape {
    Hypercube,
    Triangle2d,
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    External(Arc<ExternalIndicator>),
    Predicate(Arc<PredicateFn>),
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Hypercube => write!(f, "Hypercube"),
            Shape::Triangle2d => write!(f, "Triangle2d"),
            Shape::Ball { center, radius } => write!(f, "Ball {{ center: {center:?}, radius: {radius} }}"),
            Shape::Annulus { center, inner, outer } => {
                write!(f, "Annulus {{ center: {center:?}, inner: {inner}, outer: {outer} }}")
            }
            Shape::External(ext) => write!(f, "External({:?})", ext.command()),
            Shape::Predicate(_) => write!(f, "Predicate(..)"),
        }
    }
}

/// A bounded region `E` of `R^d` known through its bounding box and a membership oracle.
///
/// Cloning is cheap; external oracles are shared behind an `Arc`.
#[derive(Debug, Clone)]
pub struct Domain {
    bbox: BoundingBox,
    shape: Shape,
    volume_upper_bound: Option<f64>,
    label: String,
}

impl Domain {
    pub fn builtin(kind: &BuiltinDomain) -> Result<Self> {
        match kind {
            BuiltinDomain::Hypercube { lower, upper } => Ok(Self::hypercube(BoundingBox::new(lower.clone(), upper.clone())?)),
            BuiltinDomain::Triangle2d => Ok(Self::triangle2d()),
            BuiltinDomain::Ball { center, radius } => Self::ball(center.clone(), *radius),
            BuiltinDomain::Annulus { center, inner, outer } => Self::annulus(center.clone(), *inner, *outer),
        }
    }

    pub fn hypercube(bbox: BoundingBox) -> Self {
        let volume = bbox.volume();
        let label = format!("hypercube{}", bbox.dim());
        Self { bbox, shape: Shape::Hypercube, volume_upper_bound: Some(volume), label }
    }

    pub fn unit_hypercube(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(config_err("dimension must be positive"));
        }
        Ok(Self::hypercube(BoundingBox::unit(dim)))
    }

    pub fn triangle2d() -> Self {
        Self {
            bbox: BoundingBox::unit(2),
            shape: Shape::Triangle2d,
            volume_upper_bound: Some(0.5),
            label: "triangle2d".into(),
        }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(config_err("ball center must have dimension >= 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(config_err(format!("ball radius must be positive, got {radius}")));
        }
        let bbox = BoundingBox::new(
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        )?;
        let volume = unit_ball_volume(center.len()) * radius.powi(center.len() as i32);
        let label = format!("ball{}", center.len());
        Ok(Self { bbox, shape: Shape::Ball { center, radius }, volume_upper_bound: Some(volume), label })
    }

    pub fn annulus(center: Vec<f64>, inner: f64, outer: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(config_err("annulus needs dimension >= 2 to be connected"));
        }
        if !(inner >= 0.0 && inner < outer && outer.is_finite()) {
            return Err(config_err(format!("annulus needs 0 <= inner < outer, got {inner}, {outer}")));
        }
        let bbox = BoundingBox::new(
            center.iter().map(|c| c - outer).collect(),
            center.iter().map(|c| c + outer).collect(),
        )?;
        let d = center.len() as i32;
        let volume = unit_ball_volume(center.len()) * (outer.powi(d) - inner.powi(d));
        let label = format!("annulus{}", center.len());
        Ok(Self { bbox, shape: Shape::Annulus { center, inner, outer }, volume_upper_bound: Some(volume), label })
    }

    /// Indicator-only domain backed by an external program speaking the line protocol.
    pub fn external(bbox: BoundingBox, command: &[String]) -> Result<Self> {
        let ext = ExternalIndicator::spawn(bbox.dim(), command)?;
        Ok(Self { bbox, shape: Shape::External(Arc::new(ext)), volume_upper_bound: None, label: "external".into() })
    }

    /// Indicator-only domain backed by an in-process predicate.
    pub fn from_predicate<F>(label: impl Into<String>, bbox: BoundingBox, predicate: F) -> Self
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Self { bbox, shape: Shape::Predicate(Arc::new(predicate)), volume_upper_bound: None, label: label.into() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_volume_upper_bound(mut self, volume: f64) -> Result<Self> {
        if !(volume > 0.0) || volume > self.bbox.volume() * (1.0 + 1e-12) {
            return Err(config_err(format!(
                "volume upper bound {volume} must be positive and at most the box volume {}",
                self.bbox.volume()
            )));
        }
        self.volume_upper_bound = Some(volume);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn volume_upper_bound(&self) -> Option<f64> {
        self.volume_upper_bound
    }

    /// True when the domain is exactly its bounding box.
    pub fn is_box(&self) -> bool {
        matches!(self.shape, Shape::Hypercube)
    }

    /// Membership test. Points outside the bounding box are never members.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(config_err(format!("point has dimension {}, domain has {}", x.len(), self.dim())));
        }
        if !self.bbox.contains(x) {
            return Ok(false);
        }
        Ok(match &self.shape {
            Shape::Hypercube => true,
            Shape::Triangle2d => x[0] > x[1],
            Shape::Ball { center, radius } => dist2(x, center) <= radius * radius,
            Shape::Annulus { center, inner, outer } => {
                let r2 = dist2(x, center);
                inner * inner <= r2 && r2 <= outer * outer
            }
            Shape::Predicate(p) => p(x),
            Shape::External(ext) => ext.query(x)?,
        })
    }

    /// Indices of the rows of `points` (row-major, `dim` columns) that are not members.
    pub fn outside_indices(&self, points: &[f64]) -> Result<Vec<usize>> {
        let d = self.dim();
        let mut bad = Vec::new();
        for (i, p) in points.chunks_exact(d).enumerate() {
            if !self.contains(p)? {
                bad.push(i);
            }
        }
        Ok(bad)
    }

    /// Exact uniform draw on the domain by rejection from the bounding box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, max_attempts: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.sample_uniform_into(rng, max_attempts, &mut out)?;
        Ok(out)
    }

    pub fn sample_uniform_into<R: Rng + ?Sized>(&self, rng: &mut R, max_attempts: usize, out: &mut [f64]) -> Result<()> {
        if max_attempts == 0 {
            return Err(config_err("max_attempts must be >= 1"));
        }
        for _ in 0..max_attempts {
            self.bbox.sample_into(rng, out);
            if self.contains(out)? {
                return Ok(());
            }
        }
        Err(Error::SamplingExhausted { attempts: max_attempts })
    }

    /// Unbiased sample covariance of `samples` uniform draws, jittered until safely
    /// positive definite.
    pub fn empirical_covariance<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        samples: usize,
        jitter_rel: f64,
    ) -> Result<CovarianceMatrix> {
        let d = self.dim();
        if samples < d + 1 {
            return Err(config_err(format!("need at least d+1 = {} samples, got {samples}", d + 1)));
        }
        let mut mean = vec![0.0; d];
        let mut draws = vec![0.0; samples * d];
        for row in draws.chunks_exact_mut(d) {
            self.sample_uniform_into(rng, DEFAULT_MAX_ATTEMPTS, row)?;
            for (m, v) in mean.iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= samples as f64);
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for row in draws.chunks_exact(d) {
            for a in 0..d {
                let da = row[a] - mean[a];
                for b in a..d {
                    cov[(a, b)] += da * (row[b] - mean[b]);
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let v = cov[(a, b)] / (samples - 1) as f64;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        let trace = cov.trace();
        if !(trace > 0.0) {
            return Err(Error::Degenerate("all covariance samples identical".into()));
        }
        let floor = jitter_rel * trace / d as f64;
        let min_eig = cov.clone().symmetric_eigenvalues().min();
        let mut jitter = 0.0;
        if min_eig < floor {
            jitter = floor - min_eig;
            for a in 0..d {
                cov[(a, a)] += jitter;
            }
        }
        CovarianceMatrix::from_matrix_with_jitter(cov, jitter)
    }

    /// Volume of the domain: the analytic value when known, otherwise a hit-or-miss
    /// estimate against the bounding box.
    pub fn estimate_volume<R: Rng + ?Sized>(&self, rng: &mut R, samples: usize) -> Result<f64> {
        match self.volume_upper_bound {
            Some(v) => Ok(v),
            None => self.estimate_volume_mc(rng, samples),
        }
    }

    /// Hit-or-miss volume estimate, ignoring any analytic value.
    pub fn estimate_volume_mc<R: Rng + ?Sized>(&self, rng: &mut R, samples: usize) -> Result<f64> {
        if samples == 0 {
            return Err(config_err("volume estimate needs at least one sample"));
        }
        let mut x = vec![0.0; self.dim()];
        let mut hits = 0usize;
        for _ in 0..samples {
            self.bbox.sample_into(rng, &mut x);
            if self.contains(&x)? {
                hits += 1;
            }
        }
        if hits == 0 {
            return Err(Error::NoHits { samples });
        }
        Ok(self.bbox.volume() * hits as f64 / samples as f64)
    }

    pub fn supports_closed_form_mass(&self, cov: &CovarianceMatrix) -> bool {
        self.is_box() && cov.is_diagonal()
    }

    /// Probability that `N(mean, scale * cov)` lands in the domain.
    pub fn gaussian_mass<R: Rng + ?Sized>(
        &self,
        mean: &[f64],
        cov: &CovarianceMatrix,
        scale: f64,
        method: MassMethod,
        rng: &mut R,
    ) -> Result<f64> {
        if cov.dim() != self.dim() || mean.len() != self.dim() {
            return Err(config_err("mean/covariance dimension does not match the domain"));
        }
        if !(scale > 0.0) {
            return Err(config_err(format!("covariance scale must be positive, got {scale}")));
        }
        match method {
            MassMethod::ClosedForm => {
                if !self.supports_closed_form_mass(cov) {
                    return Err(config_err(
                        "closed-form Gaussian mass needs an axis-aligned box domain and a diagonal covariance",
                    ));
                }
                let stds: Vec<f64> = (0..self.dim()).map(|k| (scale * cov.entries()[(k, k)]).sqrt()).collect();
                Ok(box_gaussian_log_mass(&self.bbox, mean, &stds).exp())
            }
            MassMethod::MonteCarlo { samples } => {
                if samples == 0 {
                    return Err(config_err("Monte Carlo mass needs at least one sample"));
                }
                let chol = cov.cholesky_lower();
                let s = scale.sqrt();
                let d = self.dim();
                let mut z = vec![0.0; d];
                let mut y = vec![0.0; d];
                let mut hits = 0usize;
                for _ in 0..samples {
                    z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                    affine_into(mean, &chol, s, &z, &mut y);
                    if self.contains(&y)? {
                        hits += 1;
                    }
                }
                Ok(clamped_fraction(hits, samples))
            }
        }
    }
}

/// How Gaussian probability masses of the domain are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMethod {
    /// Product of one-dimensional interval probabilities; boxes with diagonal covariance only.
    ClosedForm,
    /// Fraction of Gaussian draws that land in the domain, clamped below by `1/(samples+1)`.
    MonteCarlo { samples: usize },
}

/// Monte Carlo Gaussian mass from a fixed bank of standard-normal draws.
///
/// Reusing the same draws for every mean makes the estimate a deterministic function
/// of the mean, so mass ratios between nearby points share their sampling noise.
#[derive(Debug, Clone)]
pub struct FixedDrawMass {
    draws: Vec<f64>,
    dim: usize,
}

impl FixedDrawMass {
    pub fn new(dim: usize, samples: usize, seed: u64) -> Self {
        let mut rng = DesignRng::seed_from_u64(seed);
        let draws = (0..samples * dim).map(|_| rng.sample(StandardNormal)).collect();
        Self { draws, dim }
    }

    pub fn samples(&self) -> usize {
        self.draws.len() / self.dim
    }

    pub fn mass(&self, domain: &Domain, mean: &[f64], chol: &DMatrix<f64>, scale: f64) -> Result<f64> {
        let s = scale.sqrt();
        let mut y = vec![0.0; self.dim];
        let mut hits = 0usize;
        for z in self.draws.chunks_exact(self.dim) {
            affine_into(mean, chol, s, z, &mut y);
            if domain.contains(&y)? {
                hits += 1;
            }
        }
        Ok(clamped_fraction(hits, self.samples()))
    }
}

fn clamped_fraction(hits: usize, samples: usize) -> f64 {
    (hits as f64 / samples as f64).max(1.0 / (samples as f64 + 1.0))
}

/// `out = mean + s * L z` for lower-triangular `L`.
pub(crate) fn affine_into(mean: &[f64], chol: &DMatrix<f64>, s: f64, z: &[f64], out: &mut [f64]) {
    let d = mean.len();
    for a in 0..d {
        let mut acc = 0.0;
        for b in 0..=a {
            acc += chol[(a, b)] * z[b];
        }
        out[a] = mean[a] + s * acc;
    }
}

/// Log of the mass of `prod_k N(mean_k, std_k^2)` on the box.
pub(crate) fn box_gaussian_log_mass(bbox: &BoundingBox, mean: &[f64], stds: &[f64]) -> f64 {
    (0..bbox.dim())
        .map(|k| {
            let a = (bbox.lower()[k] - mean[k]) / stds[k];
            let b = (bbox.upper()[k] - mean[k]) / stds[k];
            normal_interval(a, b).ln()
        })
        .sum()
}

/// `Phi(b) - Phi(a)` for `a <= b`, evaluated on the side of the tail that keeps precision.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    let tail = |x: f64| 0.5 * erfc(x * FRAC_1_SQRT_2); // 1 - Phi(x)
    if a >= 0.0 {
        tail(a) - tail(b)
    } else if b <= 0.0 {
        tail(-b) - tail(-a)
    } else {
        1.0 - tail(-a) - tail(b)
    }
}

pub fn unit_ball_volume(dim: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = V_{d-2} * 2 pi / d
    let mut v = if dim % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if dim % 2 == 0 { 2 } else { 3 };
    while k <= dim {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Symmetric positive-definite `d x d` matrix used as the random-walk shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCovariance", into = "RawCovariance")]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
    jitter_applied: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCovariance {
    rows: Vec<Vec<f64>>,
    #[serde(default)]
    jitter_applied: f64,
}

impl TryFrom<RawCovariance> for CovarianceMatrix {
    type Error = Error;
    fn try_from(raw: RawCovariance) -> Result<Self> {
        let mut m = CovarianceMatrix::from_rows(&raw.rows)?;
        m.jitter_applied = raw.jitter_applied;
        Ok(m)
    }
}

impl From<CovarianceMatrix> for RawCovariance {
    fn from(c: CovarianceMatrix) -> Self {
        let d = c.dim();
        RawCovariance {
            rows: (0..d).map(|a| (0..d).map(|b| c.entries[(a, b)]).collect()).collect(),
            jitter_applied: c.jitter_applied,
        }
    }
}

impl CovarianceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(config_err("covariance must be a non-empty square matrix"));
        }
        let m = DMatrix::from_fn(d, d, |a, b| rows[a][b]);
        Self::from_matrix_with_jitter(m, 0.0)
    }

    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        let d = variances.len();
        let m = DMatrix::from_fn(d, d, |a, b| if a == b { variances[a] } else { 0.0 });
        Self::from_matrix_with_jitter(m, 0.0)
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: DMatrix::identity(dim, dim), jitter_applied: 0.0 }
    }

    fn from_matrix_with_jitter(m: DMatrix<f64>, jitter_applied: f64) -> Result<Self> {
        let d = m.nrows();
        for a in 0..d {
            for b in 0..a {
                if m[(a, b)] != m[(b, a)] {
                    return Err(config_err("covariance matrix is not symmetric"));
                }
            }
        }
        if m.iter().any(|v| !v.is_finite()) || m.clone().cholesky().is_none() {
            return Err(config_err("covariance matrix is not positive definite"));
        }
        Ok(Self { entries: m, jitter_applied })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|a| (0..d).all(|b| a == b || self.entries[(a, b)] == 0.0))
    }

    /// Largest absolute off-diagonal correlation coefficient.
    pub fn max_abs_correlation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..a {
                let r = self.entries[(a, b)] / (self.entries[(a, a)] * self.entries[(b, b)]).sqrt();
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Copy with the off-diagonal entries dropped.
    pub fn diagonal_part(&self) -> Self {
        let d = self.dim();
        let entries = DMatrix::from_fn(d, d, |a, b| if a == b { self.entries[(a, a)] } else { 0.0 });
        Self { entries, jitter_applied: self.jitter_applied }
    }

    pub fn cholesky_lower(&self) -> DMatrix<f64> {
        // PD is checked at construction
        self.entries.clone().cholesky().expect("covariance is positive definite").l()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn builtin_membership() {
        let sq = Domain::unit_hypercube(2).unwrap();
        assert!(sq.contains(&[0.5, 0.5]).unwrap());
        assert_eq!(sq.volume_upper_bound(), Some(1.0));

        let tri = Domain::triangle2d();
        assert!(tri.contains(&[0.7, 0.2]).unwrap());
        assert!(!tri.contains(&[0.2, 0.7]).unwrap());
        assert!(!tri.contains(&[1.5, 0.2]).unwrap());

        let ball = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(!ball.contains(&[1.1, 0.0]).unwrap());
        assert!(ball.contains(&[0.6, 0.6]).unwrap());
        assert!((ball.volume_upper_bound().unwrap() - PI).abs() < 1e-12);

        let ring = Domain::annulus(vec![0.0, 0.0], 0.5, 1.0).unwrap();
        assert!(!ring.contains(&[0.1, 0.1]).unwrap());
        assert!(ring.contains(&[0.7, 0.0]).unwrap());
        assert!((ring.volume_upper_bound().unwrap() - 0.75 * PI).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_are_config_errors() {
        assert!(matches!(Domain::ball(vec![0.0], 0.0), Err(Error::Config(_))));
        assert!(matches!(Domain::ball(vec![], 1.0), Err(Error::Config(_))));
        assert!(matches!(Domain::unit_hypercube(0), Err(Error::Config(_))));
        assert!(matches!(Domain::annulus(vec![0.0, 0.0], 1.0, 0.5), Err(Error::Config(_))));
        assert!(BoundingBox::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * PI).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn sampling_on_hypercube_takes_first_draw() {
        let sq = Domain::unit_hypercube(2).unwrap();
        let mut rng = seeded(1, 0);
        let x = sq.sample_uniform(&mut rng, 1).unwrap();
        assert!(sq.contains(&x).unwrap());
    }

    #[test]
    fn sampling_exhaustion_reports_attempts() {
        let empty = Domain::from_predicate("empty", BoundingBox::unit(2), |_| false);
        let mut rng = seeded(1, 0);
        match empty.sample_uniform(&mut rng, 50) {
            Err(Error::SamplingExhausted { attempts }) => assert_eq!(attempts, 50),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn triangle_acceptance_rate() {
        // area ratio 0.5; binomial sd at 1e5 draws is 0.0016
        let tri = Domain::triangle2d();
        let mut rng = seeded(2, 0);
        let mut x = [0.0; 2];
        let m = 100_000;
        let hits = (0..m)
            .filter(|_| {
                tri.bbox().sample_into(&mut rng, &mut x);
                tri.contains(&x).unwrap()
            })
            .count();
        assert!((hits as f64 / m as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn covariance_of_unit_square() {
        let sq = Domain::unit_hypercube(2).unwrap();
        let mut rng = seeded(3, 0);
        let cov = sq.empirical_covariance(&mut rng, 1_000_000, DEFAULT_JITTER_REL).unwrap();
        let e = cov.entries();
        assert!((e[(0, 0)] - 1.0 / 12.0).abs() < 1e-3);
        assert!((e[(1, 1)] - 1.0 / 12.0).abs() < 1e-3);
        assert!(e[(0, 1)].abs() < 1e-3);
        assert_eq!(e[(0, 1)], e[(1, 0)]);
        assert_eq!(cov.jitter_applied(), 0.0);
    }

    #[test]
    fn thin_domain_gets_jitter() {
        let thin = Domain::hypercube(BoundingBox::new(vec![0.0, 0.0], vec![1.0, 1e-9]).unwrap());
        let mut rng = seeded(4, 0);
        let cov = thin.empirical_covariance(&mut rng, 1000, DEFAULT_JITTER_REL).unwrap();
        assert!(cov.jitter_applied() > 0.0);
        assert!(cov.entries().clone().cholesky().is_some());
    }

    #[test]
    fn covariance_needs_enough_samples() {
        let sq = Domain::unit_hypercube(2).unwrap();
        let mut rng = seeded(5, 0);
        assert!(matches!(sq.empirical_covariance(&mut rng, 2, DEFAULT_JITTER_REL), Err(Error::Config(_))));
    }

    #[test]
    fn volume_estimates() {
        let mut rng = seeded(6, 0);
        let sq = Domain::hypercube(BoundingBox::new(vec![0.0, 1.0], vec![2.0, 4.0]).unwrap());
        assert_eq!(sq.estimate_volume(&mut rng, 1).unwrap(), 6.0);

        let tri = Domain::triangle2d();
        assert!((tri.estimate_volume_mc(&mut rng, 1_000_000).unwrap() - 0.5).abs() < 0.005);

        let ball = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!((ball.estimate_volume_mc(&mut rng, 1_000_000).unwrap() - PI).abs() < 0.02);

        let empty = Domain::from_predicate("empty", BoundingBox::unit(1), |_| false);
        assert!(matches!(empty.estimate_volume(&mut rng, 100), Err(Error::NoHits { .. })));
    }

    #[test]
    fn closed_form_mass_matches_normal_cdf() {
        let dom = Domain::unit_hypercube(1).unwrap();
        let cov = CovarianceMatrix::diagonal(&[0.01]).unwrap();
        let mut rng = seeded(7, 0);
        let m = dom.gaussian_mass(&[0.5], &cov, 1.0, MassMethod::ClosedForm, &mut rng).unwrap();
        // Phi(5) - Phi(-5) = 1 - 2 * 2.866515718791939e-7
        assert!((m - (1.0 - 2.0 * 2.866_515_718_791_939e-7)).abs() < 1e-12);

        let wide = dom.gaussian_mass(&[0.5], &cov, 1e12, MassMethod::ClosedForm, &mut rng).unwrap();
        assert!(wide < 1e-5);
    }

    #[test]
    fn closed_form_rejected_off_box() {
        let tri = Domain::triangle2d();
        let cov = CovarianceMatrix::identity(2);
        let mut rng = seeded(8, 0);
        assert!(matches!(
            tri.gaussian_mass(&[0.6, 0.3], &cov, 1.0, MassMethod::ClosedForm, &mut rng),
            Err(Error::Config(_))
        ));
        let sq = Domain::unit_hypercube(2).unwrap();
        let full = CovarianceMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert!(sq.gaussian_mass(&[0.5, 0.5], &full, 1.0, MassMethod::ClosedForm, &mut rng).is_err());
    }

    #[test]
    fn monte_carlo_mass_on_triangle_matches_quadrature() {
        // oracle: midpoint quadrature of the isotropic density over x1 > x2 in [0,1]^2
        let (mx, my, s) = (0.6, 0.3, 0.05);
        let n = 800;
        let h = 1.0 / n as f64;
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = (i as f64 + 0.5) * h;
                let y = (j as f64 + 0.5) * h;
                if x > y {
                    let r2 = ((x - mx).powi(2) + (y - my).powi(2)) / (s * s);
                    quad += (-0.5 * r2).exp() / (2.0 * PI * s * s) * h * h;
                }
            }
        }
        let tri = Domain::triangle2d();
        let cov = CovarianceMatrix::diagonal(&[s * s, s * s]).unwrap();
        let mut rng = seeded(9, 0);
        let mc = tri
            .gaussian_mass(&[mx, my], &cov, 1.0, MassMethod::MonteCarlo { samples: 100_000 }, &mut rng)
            .unwrap();
        assert!((mc - quad).abs() < 0.005, "mc {mc} quad {quad}");
    }

    #[test]
    fn mass_is_clamped_and_monotone_in_domain() {
        let small = Domain::hypercube(BoundingBox::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap());
        let big = Domain::unit_hypercube(2).unwrap();
        let cov = CovarianceMatrix::diagonal(&[0.04, 0.04]).unwrap();
        let method = MassMethod::MonteCarlo { samples: 20_000 };
        let ms = small.gaussian_mass(&[0.4, 0.4], &cov, 1.0, method, &mut seeded(10, 0)).unwrap();
        let mb = big.gaussian_mass(&[0.4, 0.4], &cov, 1.0, method, &mut seeded(10, 1)).unwrap();
        let sd = (0.25f64 / 20_000.0).sqrt();
        assert!(ms <= mb + 3.0 * sd * 2f64.sqrt());
        let far = Domain::from_predicate("empty", BoundingBox::unit(2), |_| false);
        let m0 = far.gaussian_mass(&[0.4, 0.4], &cov, 1.0, MassMethod::MonteCarlo { samples: 99 }, &mut seeded(1, 0)).unwrap();
        assert_eq!(m0, 0.01);
    }

    #[test]
    fn fixed_draw_mass_is_deterministic() {
        let tri = Domain::triangle2d();
        let cov = CovarianceMatrix::diagonal(&[0.01, 0.01]).unwrap();
        let l = cov.cholesky_lower();
        let fm = FixedDrawMass::new(2, 4096, 11);
        let a = fm.mass(&tri, &[0.6, 0.3], &l, 1.0).unwrap();
        let b = fm.mass(&tri, &[0.6, 0.3], &l, 1.0).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn covariance_rejects_non_pd() {
        assert!(CovarianceMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(CovarianceMatrix::from_rows(&[vec![1.0, 0.1], vec![0.2, 1.0]]).is_err());
    }
}
