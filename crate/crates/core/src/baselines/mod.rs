//! Reference designs: i.i.d. uniform, Latin hypercubes (plain, maximin-annealed,
//! truncated to a domain) and Sobol' points kept inside a domain.

pub mod sobol;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{Design, DistanceCache};
use crate::domain::{BoundingBox, Domain, DEFAULT_MAX_ATTEMPTS};
use crate::error::{config_err, Error, Result};

pub use sobol::{radical_inverse, SobolGenerator, MAX_SOBOL_DIM};

pub const UNIT_CUBE_LABEL: &str = "unit_hypercube";
/// Column swaps of the maximin Latin hypercube search, per design point.
pub const DEFAULT_LHS_SWAPS_PER_POINT: u64 = 50;
pub const DEFAULT_LHS_T0_FRACTION: f64 = 0.5;

/// `n` i.i.d. uniform points on the domain, by rejection from the bounding box.
pub fn uniform_design<R: Rng + ?Sized>(domain: &Domain, n: usize, rng: &mut R) -> Result<Design> {
    if n == 0 {
        return Err(config_err("a design needs at least one point"));
    }
    let d = domain.dim();
    let mut coords = vec![0.0; n * d];
    for chunk in coords.chunks_exact_mut(d) {
        domain.sample_uniform_into(rng, DEFAULT_MAX_ATTEMPTS, chunk)?;
    }
    Design::new(d, coords, domain.label())
}

/// Random Latin hypercube on `[0,1]^d`: every column has one point per stratum
/// `[k/n, (k+1)/n)`, jittered uniformly inside it.
pub fn lhs<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Design> {
    if n < 2 {
        return Err(config_err(format!("a Latin hypercube needs at least 2 points, got {n}")));
    }
    if d == 0 {
        return Err(config_err("dimension must be >= 1"));
    }
    let mut coords = vec![0.0; n * d];
    let mut perm: Vec<usize> = (0..n).collect();
    for axis in 0..d {
        perm.shuffle(rng);
        for (i, &stratum) in perm.iter().enumerate() {
            let u: f64 = rng.random();
            let mut v = (stratum as f64 + u) / n as f64;
            while v * n as f64 >= (stratum + 1) as f64 {
                v = v.next_down();
            }
            while v * (n as f64) < stratum as f64 {
                v = v.next_up();
            }
            coords[i * d + axis] = v;
        }
    }
    Design::new(d, coords, UNIT_CUBE_LABEL)
}

/// Stratum index of every coordinate, column by column.
pub fn lhs_strata(design: &Design) -> Vec<Vec<usize>> {
    let n = design.len();
    (0..design.dim())
        .map(|axis| design.points().map(|p| ((p[axis] * n as f64).floor() as usize).min(n - 1)).collect())
        .collect()
}

/// True when each column of a `[0,1]^d` design has exactly one point per stratum.
pub fn is_latin_hypercube(design: &Design) -> bool {
    let n = design.len();
    lhs_strata(design).into_iter().all(|mut col| {
        col.sort_unstable();
        col.iter().enumerate().all(|(i, &s)| i == s) && col.len() == n
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximinLhsParams {
    pub iterations: u64,
    /// Temperature scale; acceptance uses `beta_n = sqrt(n)/t0`.
    pub t0: f64,
}

impl MaximinLhsParams {
    /// `DEFAULT_LHS_SWAPS_PER_POINT * n` swaps and `t0` half the median `delta` of 20
    /// random Latin hypercubes of the same size.
    pub fn tuned<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Self> {
        let mut deltas = Vec::with_capacity(20);
        for _ in 0..20 {
            deltas.push(crate::design::maximin_distance(&lhs(n, d, rng)?)?);
        }
        deltas.sort_by(f64::total_cmp);
        let median = 0.5 * (deltas[9] + deltas[10]);
        Ok(Self { iterations: DEFAULT_LHS_SWAPS_PER_POINT * n as u64, t0: DEFAULT_LHS_T0_FRACTION * median })
    }
}

/// Simulated annealing inside the Latin-hypercube class: a move swaps two entries of
/// one column, accepted by Metropolis on `delta` with `beta_n = sqrt(n)/t0`. Returns
/// the best design visited.
pub fn maximin_lhs<R: Rng + ?Sized>(n: usize, d: usize, params: MaximinLhsParams, rng: &mut R) -> Result<Design> {
    if params.iterations < 1 {
        return Err(config_err("iterations must be >= 1"));
    }
    if !(params.t0 > 0.0 && params.t0.is_finite()) {
        return Err(config_err(format!("t0 must be positive, got {}", params.t0)));
    }
    let mut design = lhs(n, d, rng)?;
    let mut cache = DistanceCache::new(&design)?;
    let mut best = design.clone();
    let mut best_delta = cache.min_distance();
    let (mut xa, mut xb) = (vec![0.0; d], vec![0.0; d]);
    for it in 1..=params.iterations {
        let axis = rng.random_range(0..d);
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let delta_cur = cache.min_distance();
        xa.copy_from_slice(design.point(a));
        xb.copy_from_slice(design.point(b));
        let (old_a, old_b) = (xa.clone(), xb.clone());
        std::mem::swap(&mut xa[axis], &mut xb[axis]);
        cache.update(&mut design, a, &xa);
        cache.update(&mut design, b, &xb);
        let delta_prop = cache.min_distance();
        let beta = (it as f64).sqrt() / params.t0;
        let log_ratio = (-beta * (delta_cur - delta_prop)).min(0.0);
        let u: f64 = rng.random();
        if delta_prop >= delta_cur || u.ln() < log_ratio {
            if delta_prop > best_delta {
                best_delta = delta_prop;
                best.clone_from(&design);
            }
        } else {
            cache.update(&mut design, b, &old_b);
            cache.update(&mut design, a, &old_a);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedLhs {
    pub design: Design,
    /// Points of the Latin hypercube before truncation.
    pub hypercube_points: usize,
}

impl TruncatedLhs {
    pub fn realized_n(&self) -> usize {
        self.design.len()
    }
}

/// Latin hypercube of `m` points on the bounding box (optionally maximin-annealed),
/// keeping only the points inside the domain. The number kept is random.
pub fn truncated_lhs<R: Rng + ?Sized>(
    domain: &Domain,
    m: usize,
    maximin: Option<MaximinLhsParams>,
    rng: &mut R,
) -> Result<TruncatedLhs> {
    let d = domain.dim();
    let unit = match maximin {
        Some(p) => maximin_lhs(m, d, p, rng)?,
        None => lhs(m, d, rng)?,
    };
    let bbox = domain.bbox();
    let mut coords = Vec::new();
    let mut x = vec![0.0; d];
    for p in unit.points() {
        map_from_unit(bbox, p, &mut x);
        if domain.contains(&x)? {
            coords.extend_from_slice(&x);
        }
    }
    let kept = coords.len() / d;
    if kept < 2 {
        return Err(Error::Degenerate(format!("only {kept} of {m} Latin hypercube points fall inside the domain")));
    }
    Ok(TruncatedLhs { design: Design::new(d, coords, domain.label())?, hypercube_points: m })
}

fn map_from_unit(bbox: &BoundingBox, u: &[f64], out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        *o = bbox.lower()[k] + u[k] * bbox.width(k);
    }
}

/// The first `n_target` Sobol' points (mapped onto the bounding box) that fall inside
/// the domain. The all-zero point and `skip` further points are discarded first; at
/// most `max_draws` points are examined after that.
pub fn sobol_design(domain: &Domain, n_target: usize, skip: u64, max_draws: u64) -> Result<Design> {
    if n_target == 0 {
        return Err(config_err("n_target must be >= 1"));
    }
    let d = domain.dim();
    let mut generator = SobolGenerator::new(d)?;
    generator.skip(1 + skip)?;
    let bbox = domain.bbox();
    let mut coords = Vec::with_capacity(n_target * d);
    let (mut u, mut x) = (vec![0.0; d], vec![0.0; d]);
    for _ in 0..max_draws {
        generator.next_into(&mut u)?;
        map_from_unit(bbox, &u, &mut x);
        if domain.contains(&x)? {
            coords.extend_from_slice(&x);
            if coords.len() == n_target * d {
                return Design::new(d, coords, domain.label());
            }
        }
    }
    Err(Error::SamplingExhausted { attempts: max_draws as usize })
}
