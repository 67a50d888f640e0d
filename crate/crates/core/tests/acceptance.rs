//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::time::Instant;

use maximin_core::annealer::{
    self, log_accept_ratio_a1, Algorithm, AnnealerConfig, CoolingSchedule, MassModel, NoTrace, TraceRecord, TraceSink,
    VarianceKind, VarianceSchedule,
};
use maximin_core::baselines::{
    is_latin_hypercube, lhs, radical_inverse, sobol_design, truncated_lhs, uniform_design, MaximinLhsParams, SobolGenerator,
};
use maximin_core::design::{covering_radius_estimate, maximin_distance, Design};
use maximin_core::domain::{BoundingBox, CovarianceMatrix, Domain, MassMethod};
use maximin_core::kernel::{
    error_metrics, mle_fit, synthetic_blackbox, BlackBoxKind, Interpolator, KernelFamily, KernelSpec, MleBounds, TrendSpec,
};
use maximin_core::rng::seeded;
use rand::Rng;

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 0 {
        0.5 * (s[m - 1] + s[m])
    } else {
        s[m]
    }
}

fn best_deltas(config: &AnnealerConfig, domain: &Domain, replicates: usize) -> Vec<f64> {
    annealer::run_replicates(config, domain, replicates, 0)
        .unwrap()
        .into_iter()
        .map(|r| r.unwrap().score.delta)
        .collect()
}

fn table_reproduction() -> Outcome {
    let tri = Domain::triangle2d();
    let config = AnnealerConfig::tuned(&tri, Algorithm::A3, 100, 1_000_000, SEED).unwrap();
    let sa = best_deltas(&config, &tri, 20);
    let uniform: Vec<f64> =
        (0..20).map(|r| maximin_distance(&uniform_design(&tri, 100, &mut seeded(SEED, r)).unwrap()).unwrap()).collect();
    let sobol = maximin_distance(&sobol_design(&tri, 100, 0, 1_000_000).unwrap()).unwrap();
    let params = MaximinLhsParams::tuned(200, 2, &mut seeded(SEED, 1000)).unwrap();
    let truncated: Vec<f64> = (0..20)
        .map(|r| maximin_distance(&truncated_lhs(&tri, 200, Some(params), &mut seeded(SEED, r)).unwrap().design).unwrap())
        .collect();
    let (m_sa, m_u, m_t) = (mean(&sa), mean(&uniform), mean(&truncated));
    let pass = (0.070..=0.085).contains(&m_sa)
        && (0.002..=0.010).contains(&m_u)
        && (0.008..=0.015).contains(&sobol)
        && (0.025..=0.040).contains(&m_t);
    outcome(
        pass,
        format!(
            "A3 mean {m_sa:.5} (min {:.5}, max {:.5}); uniform mean {m_u:.5}; Sobol {sobol:.5}; truncated maximin LHS mean {m_t:.5}",
            sa.iter().cloned().fold(f64::INFINITY, f64::min),
            sa.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn algorithm_ordering() -> Outcome {
    let square = Domain::unit_hypercube(2).unwrap();
    let med = |alg| median(&best_deltas(&AnnealerConfig::tuned(&square, alg, 100, 100_000, SEED).unwrap(), &square, 10));
    let (a1, a2, a3) = (med(Algorithm::A1), med(Algorithm::A2), med(Algorithm::A3));
    outcome(a1 > a2 && a3 > a2, format!("medians A1 {a1:.5}, A2 {a2:.5}, A3 {a3:.5}"))
}

fn small_instances() -> Outcome {
    let run = |domain: &Domain, n| {
        let config = AnnealerConfig::tuned(domain, Algorithm::A3, n, 100_000, SEED).unwrap();
        annealer::run(&config, domain, None, &mut NoTrace).unwrap().score.delta
    };
    let two = run(&Domain::unit_hypercube(2).unwrap(), 2);
    let three = run(&Domain::unit_hypercube(1).unwrap(), 3);
    outcome(
        two >= 2f64.sqrt() - 0.05 && three >= 0.45,
        format!("square N=2 delta {two:.5}; interval N=3 delta {three:.5}"),
    )
}

/// Every `n`-subset of `0..len`, in lexicographic order.
fn for_each_subset(len: usize, n: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        visit(&idx);
        let mut i = n;
        while i > 0 && idx[i - 1] == len - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn grid_maximin_designs(grid: &[Vec<f64>], n: usize) -> (f64, Vec<Vec<usize>>) {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let mut best = 0.0;
    let mut winners = Vec::new();
    for_each_subset(grid.len(), n, |idx| {
        let mut delta = f64::INFINITY;
        for a in 0..n {
            for b in a + 1..n {
                delta = delta.min(dist(&grid[idx[a]], &grid[idx[b]]));
            }
        }
        if delta > best * (1.0 + 1e-12) {
            best = delta;
            winners.clear();
        }
        if delta >= best * (1.0 - 1e-12) {
            winners.push(idx.to_vec());
        }
    });
    (best, winners)
}

fn covering_below_separation() -> Outcome {
    let axis: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    let line: Vec<Vec<f64>> = axis.iter().map(|&x| vec![x]).collect();
    let plane: Vec<Vec<f64>> = axis.iter().flat_map(|&x| axis.iter().map(move |&y| vec![x, y])).collect();
    let mut cases = Vec::new();
    for n in 2..=4 {
        cases.push((1, n, &line));
    }
    for n in 2..=3 {
        cases.push((2, n, &plane));
    }
    let mut pass = true;
    let mut notes = Vec::new();
    let mut rng = seeded(SEED, 4);
    for (d, n, grid) in cases {
        let domain = Domain::unit_hypercube(d).unwrap();
        let (delta, winners) = grid_maximin_designs(grid, n);
        let mut worst = 0.0f64;
        for idx in &winners {
            let rows: Vec<Vec<f64>> = idx.iter().map(|&i| grid[i].clone()).collect();
            let design = Design::from_rows(&rows, domain.label()).unwrap();
            let h = covering_radius_estimate(&design, &domain, 100_000, &mut rng).unwrap();
            worst = worst.max(h);
        }
        pass &= worst <= delta;
        notes.push(format!("d={d} N={n}: delta {delta:.4}, max h {worst:.4} over {} designs", winners.len()));
    }
    outcome(pass, notes.join("; "))
}

struct DeltaHistogram {
    bins: Vec<u64>,
}

impl TraceSink for DeltaHistogram {
    fn record(&mut self, record: &TraceRecord) -> maximin_core::Result<()> {
        let b = ((record.delta_current * self.bins.len() as f64) as usize).min(self.bins.len() - 1);
        self.bins[b] += 1;
        Ok(())
    }
}

/// Bin probabilities of `|x - y|` under the density proportional to `exp(beta |x - y|)`
/// on the unit square, by a midpoint rule.
fn gibbs_marginal(beta: f64, bins: usize, grid: usize) -> Vec<f64> {
    let mut p = vec![0.0; bins];
    let h = 1.0 / grid as f64;
    for i in 0..grid {
        let x = (i as f64 + 0.5) * h;
        for j in 0..grid {
            let r = (x - (j as f64 + 0.5) * h).abs();
            p[((r * bins as f64) as usize).min(bins - 1)] += (beta * r).exp();
        }
    }
    let total: f64 = p.iter().sum();
    p.iter().map(|v| v / total).collect()
}

fn a1_stationarity() -> Outcome {
    let beta = 5.0;
    let target = gibbs_marginal(beta, 20, 4000);
    let domain = Domain::unit_hypercube(1).unwrap();
    let mut tvs = Vec::new();
    for seed in 1..=3 {
        let mut config = AnnealerConfig::tuned(&domain, Algorithm::A1, 2, 1_000_000, seed).unwrap();
        config.cooling = CoolingSchedule::Constant { t0: 1.0 / beta };
        config.variance = VarianceSchedule { tau0: 1.0, tau_min: 1.0, kind: VarianceKind::Constant, freeze_fraction: 0.0 };
        config.sigma = Some(CovarianceMatrix::diagonal(&[1.0 / 12.0]).unwrap());
        config.mass = Some(MassMethod::ClosedForm);
        config.trace_thin = 1;
        let mut hist = DeltaHistogram { bins: vec![0; 20] };
        annealer::run(&config, &domain, None, &mut hist).unwrap();
        let total: u64 = hist.bins.iter().sum();
        let tv = 0.5 * hist.bins.iter().zip(&target).map(|(&c, p)| (c as f64 / total as f64 - p).abs()).sum::<f64>();
        tvs.push(tv);
    }
    let worst = tvs.iter().cloned().fold(0.0, f64::max);
    outcome(worst < 0.05, format!("total variation per seed {:?}", tvs.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>()))
}

fn normal_pdf(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut log = 0.0;
    for k in 0..x.len() {
        let z = x[k] - mean[k];
        log += -0.5 * z * z / var[k] - 0.5 * (std::f64::consts::TAU * var[k]).ln();
    }
    log.exp()
}

/// Mass of `N(mean, diag(var))` on the box, by composite Simpson over the full density.
fn box_mass_quadrature(bbox: &BoundingBox, mean: &[f64], var: &[f64]) -> f64 {
    const M: usize = 400;
    let weight = |i: usize| if i == 0 || i == M { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
    let node = |k: usize, i: usize| bbox.lower()[k] + bbox.width(k) * i as f64 / M as f64;
    let h: Vec<f64> = (0..bbox.dim()).map(|k| bbox.width(k) / M as f64 / 3.0).collect();
    match bbox.dim() {
        1 => (0..=M).map(|i| weight(i) * normal_pdf(&[node(0, i)], mean, var)).sum::<f64>() * h[0],
        2 => {
            let mut s = 0.0;
            for i in 0..=M {
                for j in 0..=M {
                    s += weight(i) * weight(j) * normal_pdf(&[node(0, i), node(1, j)], mean, var);
                }
            }
            s * h[0] * h[1]
        }
        _ => unreachable!(),
    }
}

fn selection_probability(design: &Design, k: usize, gamma: f64) -> f64 {
    let n = design.len();
    let row = |i: usize| {
        (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let r: f64 = design.point(i).iter().zip(design.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                1.0 / (r + gamma)
            })
            .sum::<f64>()
    };
    row(k) / (0..n).map(row).sum::<f64>()
}

fn smallest_distance(design: &Design) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..design.len() {
        for j in i + 1..design.len() {
            let r: f64 = design.point(i).iter().zip(design.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            best = best.min(r);
        }
    }
    best
}

fn acceptance_ratio_oracle() -> Outcome {
    let mut rng = seeded(SEED, 6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=2usize);
        let n = rng.random_range(2..=4usize);
        let lower: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.5..2.0)).collect();
        let bbox = BoundingBox::new(lower, upper).unwrap();
        let domain = Domain::hypercube(bbox.clone());
        let cur = uniform_design(&domain, n, &mut rng).unwrap();
        let k = rng.random_range(0..n);
        let y: Vec<f64> = (0..d).map(|a| rng.random_range(bbox.lower()[a]..bbox.upper()[a])).collect();
        let prop = cur.with_point(k, &y).unwrap();
        let beta = rng.random_range(0.5..50.0);
        let tau = rng.random_range(0.05..2.0);
        let gamma = 1e-6 * bbox.diagonal();
        let variances: Vec<f64> = (0..d).map(|a| bbox.width(a).powi(2) / 12.0).collect();
        let sigma = CovarianceMatrix::diagonal(&variances).unwrap();
        let (mass, _) = MassModel::resolve(&domain, &sigma, Some(MassMethod::ClosedForm), 0, 0).unwrap();
        let got = log_accept_ratio_a1(&cur, &prop, k, beta, tau, gamma, &domain, &mass).unwrap();

        let var: Vec<f64> = variances.iter().map(|v| tau * v).collect();
        let (x_k, y_k) = (cur.point(k), prop.point(k));
        let forward = selection_probability(&cur, k, gamma) * normal_pdf(y_k, x_k, &var) / box_mass_quadrature(&bbox, x_k, &var);
        let backward =
            selection_probability(&prop, k, gamma) * normal_pdf(x_k, y_k, &var) / box_mass_quadrature(&bbox, y_k, &var);
        let target_ratio = (beta * (smallest_distance(&prop) - smallest_distance(&cur))).exp();
        let expected = (target_ratio * backward / forward).ln().min(0.0);
        worst = worst.max((got - expected).abs());
    }
    outcome(worst < 1e-3, format!("largest log-ratio discrepancy {worst:.2e} over 100 instances"))
}

struct BestMonotone {
    last: f64,
    steps: u64,
    violations: u64,
}

impl TraceSink for BestMonotone {
    fn record(&mut self, record: &TraceRecord) -> maximin_core::Result<()> {
        if record.delta_best < self.last {
            self.violations += 1;
        }
        self.last = record.delta_best;
        self.steps += 1;
        Ok(())
    }
}

fn best_so_far_monotone() -> Outcome {
    let domains = [
        Domain::unit_hypercube(2).unwrap(),
        Domain::triangle2d(),
        Domain::ball(vec![0.0, 0.0], 1.0).unwrap(),
        Domain::annulus(vec![0.0, 0.0], 0.5, 1.0).unwrap(),
    ];
    let (mut runs, mut violations, mut min_steps) = (0, 0, u64::MAX);
    for domain in &domains {
        for alg in [Algorithm::A1, Algorithm::A2, Algorithm::A3] {
            for seed in 1..=3 {
                let mut config = AnnealerConfig::tuned(domain, alg, 10, 10_000, seed).unwrap();
                config.trace_thin = 1;
                let mut sink = BestMonotone { last: 0.0, steps: 0, violations: 0 };
                let result = annealer::run(&config, domain, None, &mut sink).unwrap();
                if result.score.delta != sink.last {
                    violations += 1;
                }
                violations += sink.violations;
                min_steps = min_steps.min(sink.steps);
                runs += 1;
            }
        }
    }
    outcome(violations == 0, format!("{runs} chains, at least {min_steps} steps each, {violations} decreases"))
}

fn kernel_exactness() -> Outcome {
    let square = Domain::unit_hypercube(2).unwrap();
    let (mut fit_err, mut power_at_points, mut bound_excess) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for seed in 1..=5 {
        for theta in [5.0, 20.0] {
            let mut rng = seeded(SEED, 80 + seed);
            let spec = KernelSpec::gaussian(2, theta).unwrap();
            let centers = uniform_design(&square, 8, &mut rng).unwrap();
            let a: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = |x: &[f64]| centers.points().zip(&a).map(|(z, ai)| ai * spec.eval(x, z)).sum::<f64>();
            let gram = spec.gram(&centers);
            let norm = {
                let av = nalgebra::DVector::from_vec(a.clone());
                (av.transpose() * &gram * &av)[(0, 0)].sqrt()
            };
            let design = uniform_design(&square, 20, &mut rng).unwrap();
            let values: Vec<f64> = design.points().map(f).collect();
            let s = Interpolator::fit(&design, &values, &spec, TrendSpec::None, 1e-10).unwrap();
            for (x, v) in design.points().zip(&values) {
                fit_err = fit_err.max((s.predict(x) - v).abs());
                power_at_points = power_at_points.max(s.power_function(x).unwrap());
            }
            for _ in 0..1000 {
                let x = [rng.random::<f64>(), rng.random::<f64>()];
                let excess = (f(&x) - s.predict(&x)).abs() - norm * s.power_function(&x).unwrap();
                bound_excess = bound_excess.max(excess);
            }
        }
    }
    outcome(
        fit_err < 1e-6 && power_at_points < 1e-6 && bound_excess <= 1e-6,
        format!(
            "max design-point error {fit_err:.2e}; max power at design points {power_at_points:.2e}; max |f-s| - ||f|| P {bound_excess:.2e}"
        ),
    )
}

fn surrogate_max_re(design: &Design, domain: &Domain, seed: u64) -> f64 {
    let f = synthetic_blackbox(BlackBoxKind::SmoothRidge, 2, seed).unwrap();
    let values: Vec<f64> = design.points().map(|x| f.eval(x)).collect();
    let mut rng = seeded(seed, 90);
    let fit = mle_fit(
        design,
        &values,
        KernelFamily::GaussianIsotropic,
        TrendSpec::Constant,
        MleBounds::default(),
        200,
        &mut rng,
    )
    .unwrap();
    let s = Interpolator::fit(design, &values, &fit.spec, TrendSpec::Constant, 1e-10).unwrap();
    let test = uniform_design(domain, 2000, &mut seeded(seed, 91)).unwrap();
    let truth: Vec<f64> = test.points().map(|x| f.eval(x)).collect();
    let pred: Vec<f64> = test.points().map(|x| s.predict(x)).collect();
    error_metrics(&truth, &pred).unwrap().max_re
}

fn surrogate_ordering() -> Outcome {
    let tri = Domain::triangle2d();
    let n = 30;
    let (mut maximin, mut uniform) = (Vec::new(), Vec::new());
    for seed in 1..=5 {
        let config = AnnealerConfig::tuned(&tri, Algorithm::A3, n, 100_000, seed).unwrap();
        let design = annealer::run(&config, &tri, None, &mut NoTrace).unwrap().best;
        maximin.push(surrogate_max_re(&design, &tri, seed));
        let random = uniform_design(&tri, n, &mut seeded(seed, 92)).unwrap();
        uniform.push(surrogate_max_re(&random, &tri, seed));
    }
    let (m, u) = (median(&maximin), median(&uniform));
    outcome(m <= u, format!("median MaxRE maximin {:.3}% vs uniform {:.3}%", 100.0 * m, 100.0 * u))
}

fn baseline_structure() -> Outcome {
    let mut lhs_ok = true;
    for seed in 0..20 {
        for n in [2, 3, 5, 17, 100] {
            for d in [1, 2, 5] {
                lhs_ok &= is_latin_hypercube(&lhs(n, d, &mut seeded(seed, 10)).unwrap());
            }
        }
    }
    let mut sobol = SobolGenerator::new(1).unwrap();
    let mut sobol_ok = true;
    let mut prefix = Vec::new();
    for i in 0..4096u64 {
        let x = sobol.next_point().unwrap()[0];
        sobol_ok &= x == radical_inverse(i ^ (i >> 1));
        prefix.push(x);
        if (i + 1).is_power_of_two() {
            let mut got = prefix.clone();
            got.sort_by(f64::total_cmp);
            let mut want: Vec<f64> = (0..=i).map(radical_inverse).collect();
            want.sort_by(f64::total_cmp);
            sobol_ok &= got == want;
        }
    }
    let tri = Domain::triangle2d();
    let params = MaximinLhsParams::tuned(200, 2, &mut seeded(SEED, 1000)).unwrap();
    let counts: Vec<usize> =
        (0..100).map(|r| truncated_lhs(&tri, 200, Some(params), &mut seeded(SEED, 100 + r)).unwrap().realized_n()).collect();
    let within = counts.iter().filter(|c| (85..=115).contains(*c)).count();
    outcome(
        lhs_ok && sobol_ok && within >= 95,
        format!(
            "LHS strata {}; Sobol dim 1 vs radical inverse {}; truncated counts in [85, 115]: {within}/100 (range {}..{})",
            if lhs_ok { "ok" } else { "broken" },
            if sobol_ok { "ok" } else { "differs" },
            counts.iter().min().unwrap(),
            counts.iter().max().unwrap()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("triangle comparison", table_reproduction),
        ("algorithm ordering", algorithm_ordering),
        ("small-instance optimality", small_instances),
        ("covering radius below separation", covering_below_separation),
        ("A1 stationarity", a1_stationarity),
        ("acceptance-ratio oracle", acceptance_ratio_oracle),
        ("best-so-far monotonicity", best_so_far_monotone),
        ("kernel interpolation exactness", kernel_exactness),
        ("surrogate ordering", surrogate_ordering),
        ("baseline structure", baseline_structure),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} {name}: {} [{:.1}s]", i + 1, o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
