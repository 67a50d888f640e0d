//! Multi-method, multi-replicate comparison harness.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use maximin_core::annealer::NoTrace;
use maximin_core::design::covering_radius_estimate;
use maximin_core::rng::{derive_seed, seeded};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::commands::{ensure_dir, split_options, write_json};
use crate::error::{CliError, CliResult};
use crate::generate::generate;
use crate::options::{build_domain, load_config, DomainArg, Method, MethodOptions};

const COVER_TAG: u64 = 0x636f_76;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    domain: DomainArg,
    #[serde(default)]
    dim: Option<usize>,
    n: usize,
    #[serde(default)]
    seed: u64,
    /// Samples for the covering-radius estimate of each replicate; 0 skips it.
    #[serde(default)]
    covering_samples: usize,
    /// Used when neither `--out-dir` nor `MAXIMIN_OUT_DIR` is set.
    #[serde(default)]
    output_dir: Option<PathBuf>,
    methods: Vec<Map<String, Value>>,
}

#[derive(Debug, Clone)]
struct GeneratorSpec {
    label: String,
    method: Method,
    replicates: usize,
    n: usize,
    options: MethodOptions,
}

#[derive(Debug, Clone, Serialize)]
struct ReplicateRecord {
    method: String,
    replicate: usize,
    seed: u64,
    n: Option<usize>,
    delta: Option<f64>,
    critical_pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    covering_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct ComparisonRow {
    method: String,
    replicates: usize,
    failures: usize,
    delta_mean: f64,
    delta_variance: f64,
    delta_min: f64,
    delta_max: f64,
    n_mean: f64,
    n_min: usize,
    n_max: usize,
    covering_mean: Option<f64>,
}

#[derive(Debug, Serialize)]
struct MethodTiming {
    total_seconds: f64,
    replicate_seconds: Vec<f64>,
}

fn parse_generators(file: &ExperimentFile) -> CliResult<Vec<GeneratorSpec>> {
    if file.methods.is_empty() {
        return Err(CliError::Usage("experiment lists no methods".into()));
    }
    let mut out: Vec<GeneratorSpec> = Vec::new();
    for entry in &file.methods {
        let (head, options) = split_options(entry.clone(), &["method", "replicates", "label", "n"])?;
        let get = |key: &str| head.get(key).cloned();
        let method: Method = serde_json::from_value(get("method").ok_or_else(|| CliError::Usage("method entry without \"method\"".into()))?)
            .map_err(|e| CliError::Usage(format!("method: {e}")))?;
        let replicates = match get("replicates") {
            Some(v) => serde_json::from_value(v).map_err(|e| CliError::Usage(format!("replicates: {e}")))?,
            None => 1usize,
        };
        if replicates == 0 {
            return Err(CliError::Usage(format!("{}: replicates must be >= 1", method.name())));
        }
        let label = match get("label") {
            Some(Value::String(s)) => s,
            Some(other) => return Err(CliError::Usage(format!("label must be a string, got {other}"))),
            None => method.name().to_string(),
        };
        if out.iter().any(|g| g.label == label) {
            return Err(CliError::Usage(format!("duplicate method label {label:?}; set \"label\" to tell them apart")));
        }
        let n = match get("n") {
            Some(v) => serde_json::from_value(v).map_err(|e| CliError::Usage(format!("n: {e}")))?,
            None => file.n,
        };
        out.push(GeneratorSpec { label, method, replicates, n, options });
    }
    Ok(out)
}

fn summarise(label: &str, records: &[&ReplicateRecord]) -> ComparisonRow {
    let ok: Vec<&&ReplicateRecord> = records.iter().filter(|r| r.error.is_none() && r.delta.is_some()).collect();
    let deltas: Vec<f64> = ok.iter().map(|r| r.delta.unwrap()).collect();
    let ns: Vec<usize> = ok.iter().filter_map(|r| r.n).collect();
    let k = deltas.len() as f64;
    let mean = if deltas.is_empty() { f64::NAN } else { deltas.iter().sum::<f64>() / k };
    let variance = if deltas.len() > 1 { deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    let covers: Vec<f64> = ok.iter().filter_map(|r| r.covering_radius).collect();
    ComparisonRow {
        method: label.to_string(),
        replicates: records.len(),
        failures: records.len() - ok.len(),
        delta_mean: mean,
        delta_variance: variance,
        delta_min: deltas.iter().cloned().fold(f64::NAN, f64::min),
        delta_max: deltas.iter().cloned().fold(f64::NAN, f64::max),
        n_mean: if ns.is_empty() { f64::NAN } else { ns.iter().sum::<usize>() as f64 / ns.len() as f64 },
        n_min: ns.iter().copied().min().unwrap_or(0),
        n_max: ns.iter().copied().max().unwrap_or(0),
        covering_mean: (!covers.is_empty()).then(|| covers.iter().sum::<f64>() / covers.len() as f64),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_rows(path: &Path, rows: &[ComparisonRow]) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "method,replicates,failures,delta_mean,delta_variance,delta_min,delta_max,n_mean,n_min,n_max,covering_mean")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.replicates,
            r.failures,
            r.delta_mean,
            r.delta_variance,
            r.delta_min,
            r.delta_max,
            r.n_mean,
            r.n_min,
            r.n_max,
            opt(r.covering_mean)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Runs every replicate of every method and writes `comparison.csv`, `replicates.jsonl`,
/// `deltas.csv` (long format: method, replicate, delta) and `timings.json`. Everything
/// except the timings is a deterministic function of the experiment file.
pub fn compare(spec_path: &Path, out_dir: Option<&Path>, threads: usize) -> CliResult<()> {
    let file: ExperimentFile = load_config(spec_path)?;
    let spec = file.domain.spec(file.dim)?;
    let domain = build_domain(&spec)?;
    let generators = parse_generators(&file)?;
    let out_dir = out_dir.map(Path::to_path_buf).or(file.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&out_dir)?;

    let jobs: Vec<(usize, usize)> =
        generators.iter().enumerate().flat_map(|(g, spec)| (0..spec.replicates).map(move |r| (g, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let results: Vec<(ReplicateRecord, f64)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, r)| {
                let gen = &generators[g];
                let t = Instant::now();
                let mut record = ReplicateRecord {
                    method: gen.label.clone(),
                    replicate: r,
                    seed: file.seed,
                    n: None,
                    delta: None,
                    critical_pairs: None,
                    covering_radius: None,
                    error: None,
                };
                match generate(gen.method, &gen.options, &domain, gen.n, file.seed, r as u64, &mut NoTrace) {
                    Ok(out) => {
                        record.n = Some(out.design.len());
                        record.delta = out.score.map(|s| s.delta);
                        record.critical_pairs = out.score.map(|s| s.critical_pairs);
                        if file.covering_samples > 0 {
                            let mut rng = seeded(derive_seed(file.seed, COVER_TAG), r as u64);
                            match covering_radius_estimate(&out.design, &domain, file.covering_samples, &mut rng) {
                                Ok(h) => record.covering_radius = Some(h),
                                Err(e) => record.error = Some(e.to_string()),
                            }
                        }
                        if record.delta.is_none() && record.error.is_none() {
                            record.error = Some("design has fewer than 2 points".into());
                        }
                    }
                    Err(e) => record.error = Some(e.to_string()),
                }
                (record, t.elapsed().as_secs_f64())
            })
            .collect()
    });
    let wall = start.elapsed().as_secs_f64();

    let mut rows = Vec::new();
    let mut timings = BTreeMap::new();
    for gen in &generators {
        let mine: Vec<&(ReplicateRecord, f64)> = results.iter().filter(|(r, _)| r.method == gen.label).collect();
        let records: Vec<&ReplicateRecord> = mine.iter().map(|(r, _)| r).collect();
        let row = summarise(&gen.label, &records);
        eprintln!(
            "{}: mean delta {:.6} (min {:.6}, max {:.6}), {} failures",
            row.method, row.delta_mean, row.delta_min, row.delta_max, row.failures
        );
        rows.push(row);
        let replicate_seconds: Vec<f64> = mine.iter().map(|(_, t)| *t).collect();
        timings.insert(gen.label.clone(), MethodTiming { total_seconds: replicate_seconds.iter().sum(), replicate_seconds });
    }

    write_rows(&out_dir.join("comparison.csv"), &rows)?;
    let mut jsonl = BufWriter::new(File::create(out_dir.join("replicates.jsonl"))?);
    let mut long = BufWriter::new(File::create(out_dir.join("deltas.csv"))?);
    writeln!(long, "method,replicate,delta")?;
    for (r, _) in &results {
        serde_json::to_writer(&mut jsonl, r).map_err(|e| CliError::Runtime(e.to_string()))?;
        writeln!(jsonl)?;
        writeln!(long, "{},{},{}", r.method, r.replicate, opt(r.delta))?;
    }
    jsonl.flush()?;
    long.flush()?;
    write_json(
        &out_dir.join("timings.json"),
        &serde_json::json!({"wall_seconds": wall, "threads": pool.current_num_threads(), "methods": timings}),
    )?;

    let failed = results.iter().filter(|(r, _)| r.error.is_some()).count();
    if failed > 0 {
        return Err(CliError::Partial { failed, total: results.len() });
    }
    Ok(())
}
