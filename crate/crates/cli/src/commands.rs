use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use maximin_core::annealer::{self, NoTrace, TraceSink};
use maximin_core::baselines::uniform_design;
use maximin_core::design::{covering_radius_estimate, maximin_score, Design, DEFAULT_TIE_TOL};
use maximin_core::domain::Domain;
use maximin_core::io::{read_design_csv, write_design_csv, DesignDocument, DomainSpec, JsonLinesTrace};
use maximin_core::kernel::{
    error_metrics, mle_fit, synthetic_blackbox, BlackBoxKind, Interpolator, KernelFamily, KernelSpec, MleBounds, TrendSpec,
};
use maximin_core::rng::seeded;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::generate::{generate, DEFAULT_ITERATIONS};
use crate::options::{build_domain, domain_spec_from_arg, load_config, DomainArg, Method, MethodOptions};
use crate::{Cli, DomainArgs, DEFAULT_DOMAIN, EvalArgs, GenArgs, SurrogateArgs, TuneArgs};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BlackBoxArg {
    RkhsMixture,
    SmoothRidge,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Genexp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TrendArg {
    None,
    Constant,
    Linear,
    Quadratic,
}

impl From<TrendArg> for TrendSpec {
    fn from(t: TrendArg) -> Self {
        match t {
            TrendArg::None => TrendSpec::None,
            TrendArg::Constant => TrendSpec::Constant,
            TrendArg::Linear => TrendSpec::Linear,
            TrendArg::Quadratic => TrendSpec::Quadratic,
        }
    }
}

fn resolve_domain(args: &DomainArgs) -> CliResult<(DomainSpec, Domain)> {
    let spec = domain_spec_from_arg(args.domain.as_deref().unwrap_or(DEFAULT_DOMAIN), args.dim)?;
    let domain = build_domain(&spec)?;
    Ok((spec, domain))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::io::Write::write_all(&mut out, b"\n")?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("values serialize"));
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

/// Splits a config object into the keys in `known` and generator options.
pub fn split_options(mut map: Map<String, Value>, known: &[&str]) -> CliResult<(Map<String, Value>, MethodOptions)> {
    let mut head = Map::new();
    for key in known {
        if let Some(v) = map.remove(*key) {
            head.insert((*key).to_string(), v);
        }
    }
    let options = serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((head, options))
}

fn field<T: serde::de::DeserializeOwned>(head: &Map<String, Value>, key: &str) -> CliResult<Option<T>> {
    head.get(key)
        .map(|v| serde_json::from_value(v.clone()).map_err(|e| CliError::Usage(format!("config key {key:?}: {e}"))))
        .transpose()
}

pub fn gen(cli: &Cli, args: &GenArgs) -> CliResult<()> {
    let (head, file_opts) = match &args.config {
        Some(path) => split_options(load_config(path)?, &["method", "domain", "dim", "n", "seed", "stream", "name"])?,
        None => (Map::new(), MethodOptions::default()),
    };
    let method: Method = args
        .method
        .or(field(&head, "method")?)
        .ok_or_else(|| CliError::Usage("--method is required (or a \"method\" key in --config)".into()))?;
    let n: usize = args.n.or(field(&head, "n")?).ok_or_else(|| CliError::Usage("--n is required".into()))?;
    let seed: u64 = args.seed.or(field(&head, "seed")?).unwrap_or(0);
    let stream: u64 = args.stream.or(field(&head, "stream")?).unwrap_or(0);
    let name: String = args.name.clone().or(field(&head, "name")?).unwrap_or_else(|| method.name().to_string());
    let dim = args.domain.dim.or(field(&head, "dim")?);
    let spec = match (&args.domain.domain, field::<DomainArg>(&head, "domain")?) {
        (Some(flag), _) => domain_spec_from_arg(flag, dim)?,
        (None, Some(d)) => d.spec(dim)?,
        (None, None) => domain_spec_from_arg(DEFAULT_DOMAIN, dim)?,
    };
    let domain = build_domain(&spec)?;
    let mut opts = args.options.overlay(&file_opts);
    let is_sa = matches!(method, Method::Sa1 | Method::Sa2 | Method::Sa3);
    if is_sa && opts.trace_thin.is_none() {
        opts.trace_thin = Some((opts.iterations.unwrap_or(DEFAULT_ITERATIONS) / 1000).max(1));
    }

    let out_dir = cli.out_dir();
    ensure_dir(&out_dir)?;
    let csv_path = out_dir.join(format!("{name}.csv"));
    let json_path = out_dir.join(format!("{name}.json"));
    let trace_path = out_dir.join(format!("{name}.trace.jsonl"));
    let tracing = is_sa && opts.trace_thin != Some(0);
    let start = Instant::now();
    let generated = if tracing {
        let mut sink = JsonLinesTrace::new(BufWriter::new(File::create(&trace_path)?));
        let g = generate(method, &opts, &domain, n, seed, stream, &mut sink as &mut dyn TraceSink)?;
        sink.into_inner()?;
        g
    } else {
        generate(method, &opts, &domain, n, seed, stream, &mut NoTrace)?
    };
    let runtime = start.elapsed().as_secs_f64();
    write_design_csv(&generated.design, BufWriter::new(File::create(&csv_path)?))?;
    let metadata = json!({
        "method": method.name(),
        "seed": seed,
        "stream": stream,
        "n_requested": n,
        "n": generated.design.len(),
        "domain": spec,
        "params": generated.params,
        "delta": generated.score.map(|s| s.delta),
        "trace": tracing.then(|| trace_path.display().to_string()),
        "runtime_seconds": runtime,
    });
    let doc = DesignDocument::new(&generated.design, generated.score, metadata);
    write_json(&json_path, &doc)?;
    print_json(&json!({
        "design": csv_path.display().to_string(),
        "metadata": json_path.display().to_string(),
        "n": generated.design.len(),
        "delta": generated.score.map(|s| s.delta),
    }));
    Ok(())
}

fn read_design(path: &Path, domain: &Domain) -> CliResult<Design> {
    let file = File::open(path).map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    let design = read_design_csv(BufReader::new(file), domain.label())?;
    design.validate_in(domain)?;
    Ok(design)
}

#[derive(Debug, Serialize)]
struct EvalReport {
    n: usize,
    dim: usize,
    delta: Option<f64>,
    critical_pairs: Option<usize>,
    covering_radius_estimate: f64,
    covering_samples: u64,
}

pub fn eval(_cli: &Cli, args: &EvalArgs) -> CliResult<()> {
    let (_, domain) = resolve_domain(&args.domain)?;
    let design = read_design(&args.design, &domain)?;
    let score = if design.len() >= 2 { Some(maximin_score(&design, DEFAULT_TIE_TOL)?) } else { None };
    let h = covering_radius_estimate(&design, &domain, args.samples as usize, &mut seeded(args.seed, 0))?;
    let report = EvalReport {
        n: design.len(),
        dim: design.dim(),
        delta: score.map(|s| s.delta),
        critical_pairs: score.map(|s| s.critical_pairs),
        covering_radius_estimate: h,
        covering_samples: args.samples,
    };
    if let Some(path) = &args.output {
        write_json(path, &report)?;
    }
    print_json(&report);
    Ok(())
}

pub fn surrogate(cli: &Cli, args: &SurrogateArgs) -> CliResult<()> {
    let (_, domain) = resolve_domain(&args.domain)?;
    let design = read_design(&args.design, &domain)?;
    let d = domain.dim();
    let kind = match args.blackbox {
        BlackBoxArg::RkhsMixture => BlackBoxKind::RkhsMixture,
        BlackBoxArg::SmoothRidge => BlackBoxKind::SmoothRidge,
    };
    let f = synthetic_blackbox(kind, d, args.blackbox_seed)?;
    let values: Vec<f64> = design.points().map(|x| f.eval(x)).collect();
    let trend = TrendSpec::from(args.trend);
    let family = match args.kernel {
        KernelArg::Gaussian => KernelFamily::GaussianIsotropic,
        KernelArg::Genexp => KernelFamily::GeneralizedExponential,
    };
    let (spec, mle) = if args.mle || args.theta.is_none() {
        let fit = mle_fit(&design, &values, family, trend, MleBounds::default(), args.mle_budget, &mut seeded(args.test_seed, 1))?;
        let summary = json!({"log_likelihood": fit.log_likelihood, "evaluations": fit.evaluations});
        (fit.spec, Some(summary))
    } else {
        let theta = args.theta.unwrap();
        let spec = match family {
            KernelFamily::GaussianIsotropic => KernelSpec::gaussian(d, theta)?,
            KernelFamily::GeneralizedExponential => KernelSpec::generalized_exponential(vec![theta; d], args.nu.unwrap_or(2.0))?,
        };
        (spec, None)
    };
    let s = Interpolator::fit(&design, &values, &spec, trend, args.nugget)?;
    let test = uniform_design(&domain, args.test_points, &mut seeded(args.test_seed, 0))?;
    let truth: Vec<f64> = test.points().map(|x| f.eval(x)).collect();
    let predictions: Vec<f64> = test.points().map(|x| s.predict(x)).collect();
    let report = error_metrics(&truth, &predictions)?;

    let out_dir = cli.out_dir();
    ensure_dir(&out_dir)?;
    let model_path = out_dir.join(format!("{}.model.json", args.name));
    let report_path = out_dir.join(format!("{}.report.json", args.name));
    write_json(&model_path, &s.to_model())?;
    let out = json!({
        "errors": report,
        "kernel": spec,
        "trend": trend,
        "nugget": s.nugget(),
        "mle": mle,
        "n_design": design.len(),
        "model": model_path.display().to_string(),
    });
    write_json(&report_path, &out)?;
    print_json(&out);
    Ok(())
}

pub fn tune(args: &TuneArgs) -> CliResult<()> {
    let (spec, domain) = resolve_domain(&args.domain)?;
    let t0 = annealer::default_t0(&domain, args.n, args.replicates, args.fraction, &mut seeded(args.seed, 0))?;
    let tau0 = annealer::default_tau0(&domain, args.n)?;
    print_json(&json!({
        "domain": spec,
        "n": args.n,
        "replicates": args.replicates,
        "fraction": args.fraction,
        "t0": t0,
        "tau0": tau0,
    }));
    Ok(())
}
