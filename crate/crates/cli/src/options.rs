use std::path::Path;

use clap::ValueEnum;
use maximin_core::domain::Domain;
use maximin_core::io::DomainSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sa1,
    Sa2,
    Sa3,
    Uniform,
    Lhs,
    LhsMaximin,
    TruncatedLhs,
    Sobol,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sa1 => "sa1",
            Self::Sa2 => "sa2",
            Self::Sa3 => "sa3",
            Self::Uniform => "uniform",
            Self::Lhs => "lhs",
            Self::LhsMaximin => "lhs-maximin",
            Self::TruncatedLhs => "truncated-lhs",
            Self::Sobol => "sobol",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoolingArg {
    /// log(n + e) / T0
    Log,
    /// sqrt(n) / T0
    Sqrt,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceArg {
    InvSqrt,
    Frozen,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassArg {
    ClosedForm,
    MonteCarlo,
}

/// Generator parameters. Every field is optional so that a config file and command-line
/// flags can be layered; unset fields fall back to defaults tuned from the domain.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodOptions {
    /// Annealing iterations (accepts 1e6 style values) [default: 100000]
    #[arg(long, alias = "iters", value_parser = parse_count)]
    pub iterations: Option<u64>,
    /// Initial temperature of the cooling schedule [default: half the median delta of random designs]
    #[arg(long)]
    pub t0: Option<f64>,
    /// Initial proposal variance scale [default: Vol / N^(1/d)]
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub tau_min: Option<f64>,
    #[arg(long, value_enum)]
    pub cooling: Option<CoolingArg>,
    #[arg(long, value_enum)]
    pub variance: Option<VarianceArg>,
    /// Fraction of the run with a frozen variance (`frozen` schedule only)
    #[arg(long)]
    pub freeze_fraction: Option<f64>,
    /// Regularisation of the pair-selection weights
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Truncation-mass evaluation for sa1
    #[arg(long, value_enum)]
    pub mass: Option<MassArg>,
    #[arg(long)]
    pub mass_samples: Option<usize>,
    /// Keep every k-th trace record (0 disables the trace)
    #[arg(long)]
    pub trace_thin: Option<u64>,
    /// Column swaps of the maximin Latin hypercube search; 0 gives a plain Latin hypercube
    #[arg(long, value_parser = parse_count)]
    pub lhs_iterations: Option<u64>,
    #[arg(long)]
    pub lhs_t0: Option<f64>,
    /// Latin hypercube size before truncation [default: N times bbox volume over domain volume]
    #[arg(long)]
    pub hypercube_points: Option<usize>,
    /// Sobol' points discarded after the origin
    #[arg(long)]
    pub sobol_skip: Option<u64>,
    /// Sobol' points examined before giving up
    #[arg(long, value_parser = parse_count)]
    pub max_draws: Option<u64>,
}

macro_rules! overlay_fields {
    ($top:expr, $base:expr, $($f:ident),*) => {
        MethodOptions { $($f: $top.$f.or($base.$f)),* }
    };
}

impl MethodOptions {
    /// Fields set in `self` win over those of `base`.
    pub fn overlay(&self, base: &MethodOptions) -> MethodOptions {
        overlay_fields!(
            self, base, iterations, t0, tau0, tau_min, cooling, variance, freeze_fraction, gamma, mass, mass_samples,
            trace_thin, lhs_iterations, lhs_t0, hypercube_points, sobol_skip, max_draws
        )
    }
}

/// Accepts plain integers and integral floating-point literals such as `1e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("{s:?} is not a non-negative integer"));
    }
    Ok(v as u64)
}

/// A domain given by name (`triangle2d`, `hypercube`, `ball`, `annulus`) or as a full
/// specification object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainArg {
    Name(String),
    Spec(DomainSpec),
}

/// Resolves `--domain`: a path to a JSON spec file, or a built-in name. Built-in balls
/// and annuli are centred at the origin with radii 1 (and inner radius 0.5).
pub fn domain_spec_from_arg(arg: &str, dim: Option<usize>) -> CliResult<DomainSpec> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return Ok(DomainSpec::parse(&text)?);
    }
    builtin_spec(arg, dim)
}

pub fn builtin_spec(name: &str, dim: Option<usize>) -> CliResult<DomainSpec> {
    let mut spec = DomainSpec::named(name);
    match name {
        "triangle2d" => spec.dim = dim,
        "hypercube" | "unit" => {
            spec.kind = "hypercube".into();
            spec.dim = Some(dim.unwrap_or(2));
        }
        "ball" => {
            let d = dim.unwrap_or(2);
            spec.params = serde_json::json!({"center": vec![0.0; d], "radius": 1.0});
        }
        "annulus" => {
            let d = dim.unwrap_or(2);
            spec.params = serde_json::json!({"center": vec![0.0; d], "inner": 0.5, "outer": 1.0});
        }
        other => return Err(CliError::Usage(format!("unknown domain {other:?} (not a file and not a built-in name)"))),
    }
    Ok(spec)
}

impl DomainArg {
    pub fn spec(&self, dim: Option<usize>) -> CliResult<DomainSpec> {
        match self {
            Self::Name(name) => builtin_spec(name, dim),
            Self::Spec(spec) => Ok(spec.clone()),
        }
    }
}

pub fn build_domain(spec: &DomainSpec) -> CliResult<Domain> {
    Ok(spec.build()?)
}

/// Reads a JSON or TOML file, chosen by extension (`.toml`, anything else is JSON).
pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}
