//! Point sets and their dispersion criteria.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{BoundingBox, Domain, DEFAULT_MAX_ATTEMPTS};
use crate::error::{config_err, Error, Result};

pub const DEFAULT_TIE_TOL: f64 = 1e-9;
pub const DEFAULT_COVERING_SAMPLES: usize = 100_000;

/// An ordered set of `N` distinct points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDesign", into = "RawDesign")]
pub struct Design {
    dim: usize,
    coords: Vec<f64>,
    domain_label: String,
}

#[derive(Serialize, Deserialize)]
struct RawDesign {
    domain_label: String,
    points: Vec<Vec<f64>>,
}

impl TryFrom<RawDesign> for Design {
    type Error = Error;
    fn try_from(raw: RawDesign) -> Result<Self> {
        Design::from_rows(&raw.points, raw.domain_label)
    }
}

impl From<Design> for RawDesign {
    fn from(d: Design) -> Self {
        RawDesign { points: d.rows(), domain_label: d.domain_label }
    }
}

impl Design {
    pub fn new(dim: usize, coords: Vec<f64>, domain_label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(config_err("design dimension must be positive"));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(config_err(format!("{} coordinates do not form rows of {dim}", coords.len())));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(config_err("design coordinates must be finite"));
        }
        let mut seen = HashSet::with_capacity(coords.len() / dim);
        for (i, p) in coords.chunks_exact(dim).enumerate() {
            let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
            if !seen.insert(key) {
                return Err(config_err(format!("point {i} duplicates an earlier point")));
            }
        }
        Ok(Self { dim, coords, domain_label: domain_label.into() })
    }

    pub fn from_rows(rows: &[Vec<f64>], domain_label: impl Into<String>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(config_err("design rows have inconsistent dimensions"));
        }
        Self::new(dim, rows.concat(), domain_label)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_label(&self) -> &str {
        &self.domain_label
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// Replaces point `i`. The caller guarantees the new point is distinct from the others.
    pub(crate) fn set_point(&mut self, i: usize, x: &[f64]) {
        self.coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(x);
    }

    /// Copy with point `k` replaced.
    pub fn with_point(&self, k: usize, x: &[f64]) -> Result<Self> {
        let mut coords = self.coords.clone();
        coords[k * self.dim..(k + 1) * self.dim].copy_from_slice(x);
        Self::new(self.dim, coords, self.domain_label.clone())
    }

    /// Checks every point against the domain.
    pub fn validate_in(&self, domain: &Domain) -> Result<()> {
        if domain.dim() != self.dim {
            return Err(config_err(format!("design has dimension {}, domain has {}", self.dim, domain.dim())));
        }
        let indices = domain.outside_indices(&self.coords)?;
        if indices.is_empty() {
            Ok(())
        } else {
            Err(Error::OutsideDomain { indices })
        }
    }

    /// Affine map of each axis of `bbox` onto `[0, 1]`.
    pub fn translate_to_unit_cube(&self, bbox: &BoundingBox) -> Result<Self> {
        self.check_box(bbox)?;
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| (0..self.dim).map(move |k| (p[k] - bbox.lower()[k]) / bbox.width(k)))
            .collect();
        Self::new(self.dim, coords, self.domain_label.clone())
    }

    /// Inverse of [`Design::translate_to_unit_cube`].
    pub fn translate_from_unit_cube(&self, bbox: &BoundingBox) -> Result<Self> {
        self.check_box(bbox)?;
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| (0..self.dim).map(move |k| bbox.lower()[k] + p[k] * bbox.width(k)))
            .collect();
        Self::new(self.dim, coords, self.domain_label.clone())
    }

    fn check_box(&self, bbox: &BoundingBox) -> Result<()> {
        if bbox.dim() != self.dim {
            return Err(config_err("bounding box dimension does not match the design"));
        }
        Ok(())
    }
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `min_{i<j} ||x_i - x_j||`.
pub fn maximin_distance(design: &Design) -> Result<f64> {
    require_pairs(design)?;
    let n = design.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            best = best.min(euclidean(design.point(i), design.point(j)));
        }
    }
    Ok(best)
}

fn require_pairs(design: &Design) -> Result<()> {
    if design.len() < 2 {
        return Err(config_err(format!("maximin criterion needs at least 2 points, got {}", design.len())));
    }
    Ok(())
}

/// The maximin criterion refined by the number of pairs realising the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximinScore {
    pub delta: f64,
    pub critical_pairs: usize,
}

impl MaximinScore {
    /// Orders scores: larger `delta` wins; within `tie_tol` (relative) fewer critical pairs wins.
    pub fn compare(&self, other: &Self, tie_tol: f64) -> Ordering {
        if deltas_tie(self.delta, other.delta, tie_tol) {
            other.critical_pairs.cmp(&self.critical_pairs)
        } else if self.delta > other.delta {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }

    pub fn beats(&self, other: &Self, tie_tol: f64) -> bool {
        self.compare(other, tie_tol) == Ordering::Greater
    }
}

pub(crate) fn deltas_tie(a: f64, b: f64, tie_tol: f64) -> bool {
    (a - b).abs() <= tie_tol * a.abs().max(b.abs())
}

pub fn maximin_score(design: &Design, tie_tol: f64) -> Result<MaximinScore> {
    let delta = maximin_distance(design)?;
    let threshold = delta * (1.0 + tie_tol);
    let n = design.len();
    let mut critical_pairs = 0;
    for i in 0..n {
        for j in i + 1..n {
            if euclidean(design.point(i), design.point(j)) <= threshold {
                critical_pairs += 1;
            }
        }
    }
    Ok(MaximinScore { delta, critical_pairs })
}

/// Change in energy `U(prop) - U(cur)` with `U = diam(E) - delta`; the diameter cancels.
pub fn energy_difference(score_prop: &MaximinScore, score_cur: &MaximinScore) -> f64 {
    score_cur.delta - score_prop.delta
}

/// Monte Carlo estimate of the covering radius `sup_y min_i ||y - x_i||`.
///
/// The maximum over finitely many samples never exceeds the true value, so this
/// estimate approaches the covering radius from below.
pub fn covering_radius_estimate<R: Rng + ?Sized>(
    design: &Design,
    domain: &Domain,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if samples == 0 {
        return Err(config_err("covering radius estimate needs at least one sample"));
    }
    if design.dim() != domain.dim() {
        return Err(config_err("design and domain dimensions differ"));
    }
    let mut y = vec![0.0; domain.dim()];
    let mut worst = 0.0f64;
    for _ in 0..samples {
        domain.sample_uniform_into(rng, DEFAULT_MAX_ATTEMPTS, &mut y)?;
        let nearest = design.points().map(|x| euclidean(&y, x)).fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    Ok(worst)
}

/// Pairwise distances of a design with per-point nearest-neighbour bookkeeping.
///
/// Moving one point costs `O(N)` plus a rescan of each row whose nearest neighbour was
/// the moved point and moved away. The result is identical to a full recomputation:
/// every distance is computed by the same expression and ties resolve to the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCache {
    n: usize,
    dist: Vec<f64>,
    nearest: Vec<f64>,
    nearest_idx: Vec<usize>,
    min: f64,
    min_pair: (usize, usize),
    verify: bool,
}

impl DistanceCache {
    pub fn new(design: &Design) -> Result<Self> {
        require_pairs(design)?;
        let n = design.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let r = euclidean(design.point(i), design.point(j));
                dist[i * n + j] = r;
                dist[j * n + i] = r;
            }
        }
        let mut cache = Self {
            n,
            dist,
            nearest: vec![f64::INFINITY; n],
            nearest_idx: vec![0; n],
            min: f64::INFINITY,
            min_pair: (0, 1),
            verify: false,
        };
        for i in 0..n {
            cache.rescan_row(i);
        }
        cache.refresh_global();
        Ok(cache)
    }

    /// When enabled, every committed move is cross-checked against a full rebuild.
    pub fn set_verify(&mut self, verify: bool) {
        self.verify = verify;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn nearest(&self, i: usize) -> f64 {
        self.nearest[i]
    }

    pub fn min_distance(&self) -> f64 {
        self.min
    }

    pub fn min_pair(&self) -> (usize, usize) {
        self.min_pair
    }

    /// Pairs within relative `tie_tol` of the minimum. Only points whose nearest
    /// neighbour is that close can take part, which keeps this near `O(N)`.
    pub fn critical_pairs(&self, tie_tol: f64) -> usize {
        let threshold = self.min * (1.0 + tie_tol);
        let close: Vec<usize> = (0..self.n).filter(|&i| self.nearest[i] <= threshold).collect();
        let mut count = 0;
        for (a, &i) in close.iter().enumerate() {
            for &j in &close[a + 1..] {
                if self.distance(i, j) <= threshold {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn score(&self, tie_tol: f64) -> MaximinScore {
        MaximinScore { delta: self.min, critical_pairs: self.critical_pairs(tie_tol) }
    }

    /// Distances from `x` to every point of `design` except `k` (`out[k]` is set to 0).
    pub fn distances_from(design: &Design, k: usize, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(design.points().enumerate().map(|(j, p)| if j == k { 0.0 } else { euclidean(p, x) }));
    }

    /// Minimum pairwise distance the design would have after point `k` moves to a
    /// location with distances `new_row`, without mutating the cache.
    pub fn min_after_move(&self, k: usize, new_row: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..self.n {
            if j == k {
                continue;
            }
            let r = new_row[j];
            best = best.min(r);
            let m = if self.nearest_idx[j] == k {
                if r <= self.nearest[j] {
                    continue; // new distance already counted
                }
                self.row_min_excluding(j, k)
            } else {
                self.nearest[j]
            };
            best = best.min(m);
        }
        best
    }

    fn row_min_excluding(&self, j: usize, k: usize) -> f64 {
        let row = self.row(j);
        let mut m = f64::INFINITY;
        for (l, &r) in row.iter().enumerate() {
            if l != j && l != k && r < m {
                m = r;
            }
        }
        m
    }

    /// Applies the move of point `k` given its new distance row.
    pub fn commit_move(&mut self, k: usize, new_row: &[f64]) {
        let n = self.n;
        for j in 0..n {
            if j == k {
                continue;
            }
            let r = new_row[j];
            self.dist[k * n + j] = r;
            self.dist[j * n + k] = r;
        }
        self.dist[k * n + k] = 0.0;
        for j in 0..n {
            if j == k {
                continue;
            }
            let r = new_row[j];
            if self.nearest_idx[j] == k {
                if r <= self.nearest[j] {
                    self.nearest[j] = r;
                } else {
                    self.rescan_row(j);
                }
            } else if r < self.nearest[j] || (r == self.nearest[j] && k < self.nearest_idx[j]) {
                self.nearest[j] = r;
                self.nearest_idx[j] = k;
            }
        }
        self.rescan_row(k);
        self.refresh_global();
        if self.verify {
            self.assert_consistent();
        }
    }

    /// Moves point `k` of `design` to `x`, updating both.
    pub fn update(&mut self, design: &mut Design, k: usize, x: &[f64]) {
        let mut row = Vec::with_capacity(self.n);
        Self::distances_from(design, k, x, &mut row);
        design.set_point(k, x);
        self.commit_move(k, &row);
    }

    fn rescan_row(&mut self, i: usize) {
        let n = self.n;
        let mut m = f64::INFINITY;
        let mut idx = if i == 0 { 1 } else { 0 };
        for j in 0..n {
            if j != i {
                let r = self.dist[i * n + j];
                if r < m {
                    m = r;
                    idx = j;
                }
            }
        }
        self.nearest[i] = m;
        self.nearest_idx[i] = idx;
    }

    fn refresh_global(&mut self) {
        let mut m = f64::INFINITY;
        let mut arg = 0;
        for (i, &v) in self.nearest.iter().enumerate() {
            if v < m {
                m = v;
                arg = i;
            }
        }
        let j = self.nearest_idx[arg];
        self.min = m;
        self.min_pair = (arg.min(j), arg.max(j));
    }

    fn assert_consistent(&self) {
        let mut fresh = self.clone();
        fresh.verify = false;
        for i in 0..self.n {
            fresh.rescan_row(i);
        }
        fresh.refresh_global();
        assert_eq!(fresh.nearest, self.nearest, "nearest distances drifted");
        assert_eq!(fresh.nearest_idx, self.nearest_idx, "nearest indices drifted");
        assert_eq!(fresh.min.to_bits(), self.min.to_bits());
        assert_eq!(fresh.min_pair, self.min_pair);
    }
}
