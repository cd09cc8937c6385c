//! Command-line front end.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::circuit::ParametrizedCircuit;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::experiments::{
    linspace, mc_norm, mc_relative_l2_with_norm, scan_curve, write_mc_csv, write_scan_csv,
    BenchmarkSpec, Curve, McConfig, McRow,
};
use crate::kernel::{
    self, grid_nodes, node_count, sample_count_bound_kernel, KernelScaling, KernelSurrogate,
};
use crate::oracle::{CacheMode, CircuitObjective, EvaluationCache, Objective};
use crate::pauli::Observable;
use crate::taylor::{self, build_taylor, sample_count_bound_taylor, TaylorSurrogate};

#[derive(Debug, Parser)]
#[command(
    name = "pqc-surrogate",
    version,
    about = "Classical surrogates of parametrized quantum circuits"
)]
pub struct Cli {
    /// Worker threads; 1 selects the sequential reference path.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the circuit on grid points and write a surrogate file.
    BuildSurrogate(BuildArgs),
    /// Evaluate a surrogate file at a point or along a curve.
    Eval(EvalArgs),
    /// Compare a circuit with its surrogate along a curve.
    ScanCurve(ScanArgs),
    /// Monte Carlo relative L² errors.
    L2Error(L2Args),
    /// Print the layered benchmark circuit.
    BenchCircuit(BenchArgs),
    /// Oracle query statistics of a surrogate build.
    CacheStats(CacheStatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Taylor,
    Kernel,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Taylor => "taylor",
            Method::Kernel => "kernel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CacheArg {
    On,
    Off,
}

/// Where the circuit comes from: a circuit file or the benchmark family.
#[derive(Debug, Clone, Args)]
pub struct CircuitSource {
    /// Circuit text file.
    #[arg(long, conflicts_with_all = ["qubits", "layers"])]
    pub circuit: Option<PathBuf>,
    /// Observable text file (default: Z on every qubit).
    #[arg(long)]
    pub observable: Option<PathBuf>,
    /// Benchmark qubit count.
    #[arg(long)]
    pub qubits: Option<usize>,
    /// Benchmark layer count.
    #[arg(long)]
    pub layers: Option<usize>,
}

impl CircuitSource {
    fn is_given(&self) -> bool {
        self.circuit.is_some() || self.qubits.is_some() || self.layers.is_some()
    }

    fn load(&self) -> Result<CircuitObjective> {
        let circuit = match (&self.circuit, self.qubits, self.layers) {
            (Some(path), _, _) => ParametrizedCircuit::parse(&read_text(path)?)?,
            (None, Some(n), Some(d)) => {
                let spec = BenchmarkSpec::new(n, d)?;
                if spec.is_reduced() {
                    log::info!("benchmark with a single layer (reduced instance)");
                }
                spec.circuit()?
            }
            _ => {
                return Err(Error::validation(
                    "give either --circuit FILE or both --qubits and --layers",
                ))
            }
        };
        let observable = match &self.observable {
            Some(path) => Observable::parse(&read_text(path)?)?,
            None => Observable::all_z(circuit.num_qubits())?,
        };
        CircuitObjective::new(circuit, observable)
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub source: CircuitSource,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long)]
    pub order: usize,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "on")]
    pub cache: CacheArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Surrogate file written by build-surrogate.
    #[arg(long)]
    pub surrogate: PathBuf,
    /// Comma-separated parameter vector.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "curve")]
    pub theta: Option<String>,
    #[command(flatten)]
    pub grid: CurveGrid,
    /// Circuit for the `f` column of a curve scan.
    #[command(flatten)]
    pub source: CircuitSource,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveGrid {
    /// gamma1 … gamma5.
    #[arg(long)]
    pub curve: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

impl CurveGrid {
    fn resolve(&self) -> Result<Option<(Curve, Vec<f64>)>> {
        let Some(name) = &self.curve else {
            return Ok(None);
        };
        let curve: Curve = name.parse()?;
        let (lo, hi) = curve.default_range();
        let (lo, hi) = (self.t_min.unwrap_or(lo), self.t_max.unwrap_or(hi));
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::validation(format!("empty t range [{lo}, {hi}]")));
        }
        Ok(Some((curve, linspace(lo, hi, self.points))))
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub source: CircuitSource,
    /// Surrogate file; otherwise one is built from --method and --order.
    #[arg(long, conflicts_with_all = ["method", "order"])]
    pub surrogate: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub order: Option<usize>,
    #[command(flatten)]
    pub grid: CurveGrid,
    /// Build the kernel surrogate on the nodes around 0 and (π/2, …, π/2).
    #[arg(long)]
    pub enrich: bool,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct L2Args {
    #[command(flatten)]
    pub source: CircuitSource,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Orders, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub order: Vec<usize>,
    /// Box sizes k for [-π/k, π/k]^m, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 4, 8])]
    pub k: Vec<u32>,
    #[arg(long, default_value_t = 300_000)]
    pub n_f: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n_diff: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub qubits: usize,
    #[arg(long)]
    pub layers: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CacheStatsArgs {
    #[command(flatten)]
    pub source: CircuitSource,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long)]
    pub order: usize,
    #[arg(long, value_enum, default_value = "on")]
    pub cache: CacheArg,
}

/// Runs a parsed command, writing JSON and text results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let exec = configure_threads(cli.threads)?;
    match cli.command {
        Command::BuildSurrogate(a) => build_surrogate(a, exec, out),
        Command::Eval(a) => eval(a, exec, out),
        Command::ScanCurve(a) => scan(a, exec, out),
        Command::L2Error(a) => l2_error(a, exec, out),
        Command::BenchCircuit(a) => bench_circuit(a, out),
        Command::CacheStats(a) => cache_stats(a, exec, out),
    }
}

fn configure_threads(threads: usize) -> Result<Exec> {
    if threads == 0 {
        return Err(Error::validation("--threads must be at least 1"));
    }
    if threads == 1 {
        return Ok(Exec::Sequential);
    }
    #[cfg(feature = "parallel")]
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            log::debug!("thread pool already configured: {e}");
        }
        Ok(Exec::Parallel)
    }
    #[cfg(not(feature = "parallel"))]
    {
        log::warn!("built without the `parallel` feature; running on one thread");
        Ok(Exec::Sequential)
    }
}

fn cache_for(exec: Exec, cache: CacheArg) -> EvaluationCache {
    EvaluationCache::new(match (cache, exec) {
        (CacheArg::Off, _) => CacheMode::Disabled,
        (CacheArg::On, Exec::Parallel) => CacheMode::Concurrent,
        (CacheArg::On, Exec::Sequential) => CacheMode::Exclusive,
    })
}

/// Either surrogate kind, as loaded from disk or built in memory.
#[derive(Debug, Clone)]
pub enum Surrogate {
    Taylor(TaylorSurrogate),
    Kernel(KernelSurrogate),
}

impl Surrogate {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        match value.get("kind").and_then(|k| k.as_str()) {
            Some(taylor::FORMAT) => Ok(Surrogate::Taylor(TaylorSurrogate::read_json(
                text.as_bytes(),
            )?)),
            Some(kernel::FORMAT) => Ok(Surrogate::Kernel(KernelSurrogate::read_json(
                text.as_bytes(),
            )?)),
            other => Err(Error::validation(format!(
                "unknown surrogate kind {other:?}"
            ))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        match self {
            Surrogate::Taylor(s) => s.write_json(&mut w)?,
            Surrogate::Kernel(s) => s.write_json(&mut w)?,
        }
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Pointwise error bound, where one is available.
    pub fn bound(&self, theta: &[f64]) -> Option<f64> {
        match self {
            Surrogate::Taylor(s) => s.error_bound(theta),
            Surrogate::Kernel(_) => None,
        }
    }

    fn method(&self) -> Method {
        match self {
            Surrogate::Taylor(_) => Method::Taylor,
            Surrogate::Kernel(_) => Method::Kernel,
        }
    }
}

impl Objective for Surrogate {
    fn num_params(&self) -> usize {
        match self {
            Surrogate::Taylor(s) => s.num_params(),
            Surrogate::Kernel(s) => s.num_params(),
        }
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        match self {
            Surrogate::Taylor(s) => s.eval(theta),
            Surrogate::Kernel(s) => s.eval(theta),
        }
    }
}

struct Built {
    surrogate: Surrogate,
    fit: Option<kernel::FitReport>,
}

fn build(
    f: &CircuitObjective,
    method: Method,
    order: usize,
    enrich: bool,
    cache: &mut EvaluationCache,
) -> Result<Built> {
    match method {
        Method::Taylor => {
            if enrich {
                return Err(Error::validation(
                    "--enrich applies to the kernel method only",
                ));
            }
            Ok(Built {
                surrogate: Surrogate::Taylor(build_taylor(f, order, cache)?),
                fit: None,
            })
        }
        Method::Kernel => {
            let m = f.num_params();
            let mut nodes = grid_nodes(m, order)?;
            if enrich {
                nodes = crate::experiments::enrich_nodes_second_center(
                    &nodes,
                    &crate::experiments::half_pi_center(m),
                )?;
            }
            let (s, report) = KernelSurrogate::fit(f, nodes, order, KernelScaling::Scaled, cache)?;
            Ok(Built {
                surrogate: Surrogate::Kernel(s),
                fit: Some(report),
            })
        }
    }
}

fn sample_bound(method: Method, m: usize, order: usize) -> u128 {
    match method {
        Method::Taylor => sample_count_bound_taylor(m, order),
        Method::Kernel => sample_count_bound_kernel(m, order),
    }
}

fn query_stats(
    f: &CircuitObjective,
    method: Method,
    order: usize,
    cache: &EvaluationCache,
    fit: Option<&kernel::FitReport>,
) -> serde_json::Value {
    let m = f.num_params();
    let stats = cache.stats();
    let mut v = json!({
        "method": method.name(),
        "m": m,
        "L": order,
        "distinct_queries": stats.distinct,
        "hits": stats.hits,
        "misses": stats.misses,
        // u128 does not fit every JSON reader; the bound is emitted as a string
        "sample_bound": sample_bound(method, m, order).to_string(),
        "within_bound": (stats.distinct as u128) <= sample_bound(method, m, order),
    });
    if method == Method::Kernel {
        v["nodes"] = json!(node_count(m, order).to_string());
    }
    if let Some(report) = fit {
        v["fit"] = json!(report);
    }
    v
}

fn build_surrogate(a: BuildArgs, exec: Exec, out: &mut dyn Write) -> Result<()> {
    let f = a.source.load()?;
    let mut cache = cache_for(exec, a.cache);
    let start = Instant::now();
    let built = build(&f, a.method, a.order, false, &mut cache)?;
    let elapsed = start.elapsed().as_secs_f64();
    built.surrogate.save(&a.output)?;
    let mut stats = query_stats(&f, a.method, a.order, &cache, built.fit.as_ref());
    stats["output"] = json!(a.output.display().to_string());
    stats["wall_time_s"] = json!(elapsed);
    if let Surrogate::Taylor(s) = &built.surrogate {
        stats["one_norm"] = json!(s.one_norm());
    }
    writeln!(out, "{}", serde_json::to_string_pretty(&stats)?)?;
    Ok(())
}

fn parse_theta(text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::validation(format!("bad parameter value {s:?}")))
        })
        .collect()
}

fn eval(a: EvalArgs, exec: Exec, out: &mut dyn Write) -> Result<()> {
    let s = Surrogate::load(&a.surrogate)?;
    if let Some(theta) = &a.theta {
        let theta = parse_theta(theta)?;
        let value = s.value(&theta)?;
        let mut v = json!({ "theta": theta, "value": value });
        if let Some(b) = s.bound(&theta) {
            v["bound"] = json!(b);
        }
        writeln!(out, "{}", serde_json::to_string(&v)?)?;
        return Ok(());
    }
    let Some((curve, grid)) = a.grid.resolve()? else {
        return Err(Error::validation("give --theta or --curve"));
    };
    if !a.source.is_given() {
        return Err(Error::validation(
            "a curve scan needs the circuit (--circuit or --qubits/--layers)",
        ));
    }
    let f = a.source.load()?;
    let rows = scan_curve(&f, &s, curve, &grid, Some(&|t: &[f64]| s.bound(t)), exec)?;
    write_rows(&rows, a.output.as_deref(), out)
}

fn write_rows(
    rows: &[crate::experiments::ScanRow],
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    match path {
        Some(p) => write_scan_csv(rows, BufWriter::new(File::create(p)?)),
        None => write_scan_csv(rows, out),
    }
}

fn scan(a: ScanArgs, exec: Exec, out: &mut dyn Write) -> Result<()> {
    let f = a.source.load()?;
    let s = match (&a.surrogate, a.method, a.order) {
        (Some(path), _, _) => Surrogate::load(path)?,
        (None, Some(method), Some(order)) => {
            let mut cache = cache_for(exec, CacheArg::On);
            build(&f, method, order, a.enrich, &mut cache)?.surrogate
        }
        _ => {
            return Err(Error::validation(
                "give --surrogate or both --method and --order",
            ))
        }
    };
    let Some((curve, grid)) = a.grid.resolve()? else {
        return Err(Error::validation("--curve is required"));
    };
    let rows = scan_curve(&f, &s, curve, &grid, Some(&|t: &[f64]| s.bound(t)), exec)?;
    write_rows(&rows, Some(&a.output), out)?;
    writeln!(
        out,
        "{}",
        json!({
            "method": s.method().name(),
            "curve": curve.to_string(),
            // γ2–γ4 are defined for 16 parameters and extended otherwise
            "curve_generalized": matches!(curve, Curve::Gamma2 | Curve::Gamma3 | Curve::Gamma4) && f.num_params() != 16,
            "rows": rows.len(),
            "max_abs_diff": rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max),
            "output": a.output.display().to_string(),
        })
    )?;
    Ok(())
}

fn l2_error(a: L2Args, exec: Exec, out: &mut dyn Write) -> Result<()> {
    let f = a.source.load()?;
    let mut rows = Vec::new();
    let mut norms = Vec::with_capacity(a.k.len());
    for &k in &a.k {
        let config = McConfig::new(k, a.n_f, a.n_diff, a.seed);
        norms.push((config, mc_norm(&f, &config, exec)?));
    }
    for &order in &a.order {
        let mut cache = cache_for(exec, CacheArg::On);
        let s = build(&f, a.method, order, false, &mut cache)?.surrogate;
        for (config, norm) in &norms {
            let result = mc_relative_l2_with_norm(&f, &s, *norm, config, exec)?;
            log::info!(
                "{} L={order} k={}: ratio {:.3e}",
                a.method.name(),
                config.k,
                result.ratio
            );
            rows.push(McRow {
                method: a.method.name().to_string(),
                order,
                result,
            });
        }
    }
    write_mc_csv(&rows, BufWriter::new(File::create(&a.output)?))?;
    let flagged = rows.iter().filter(|r| r.result.sem_flagged).count();
    writeln!(
        out,
        "{}",
        json!({ "rows": rows.len(), "sem_flagged": flagged, "output": a.output.display().to_string() })
    )?;
    Ok(())
}

fn bench_circuit(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let text = BenchmarkSpec::new(a.qubits, a.layers)?
        .circuit()?
        .to_text()?;
    match a.output {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cache_stats(a: CacheStatsArgs, exec: Exec, out: &mut dyn Write) -> Result<()> {
    let f = a.source.load()?;
    let mut cache = cache_for(exec, a.cache);
    let built = build(&f, a.method, a.order, false, &mut cache)?;
    let stats = query_stats(&f, a.method, a.order, &cache, built.fit.as_ref());
    writeln!(out, "{}", serde_json::to_string_pretty(&stats)?)?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    std::io::Read::read_to_string(&mut BufReader::new(File::open(path)?), &mut s)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Result<String> {
        let cli = Cli::try_parse_from(std::iter::once("pqc-surrogate").chain(args.iter().copied()))
            .map_err(|e| Error::validation(e.to_string()))?;
        let mut out = Vec::new();
        run(cli, &mut out)?;
        Ok(String::from_utf8(out).unwrap())
    }

    #[test]
    fn theta_parsing() {
        assert_eq!(parse_theta("0.5, -1,2e-1").unwrap(), vec![0.5, -1.0, 0.2]);
        assert!(parse_theta("0.5,x").is_err());
        assert!(parse_theta("").unwrap().is_empty());
    }

    #[test]
    fn bench_circuit_text_parses_back() {
        let text = run_args(&["bench-circuit", "--qubits", "3", "--layers", "2"]).unwrap();
        let c = ParametrizedCircuit::parse(&text).unwrap();
        assert_eq!(c, BenchmarkSpec::new(3, 2).unwrap().circuit().unwrap());
    }

    #[test]
    fn taylor_order_zero_uses_one_query() {
        let text = run_args(&[
            "cache-stats",
            "--qubits",
            "2",
            "--layers",
            "1",
            "--method",
            "taylor",
            "--order",
            "0",
        ])
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["distinct_queries"], 1);
    }

    #[test]
    fn missing_source_is_a_validation_error() {
        let err = run_args(&["cache-stats", "--method", "kernel", "--order", "1"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_surrogate_file_is_io() {
        let err =
            run_args(&["eval", "--surrogate", "/nonexistent/s.json", "--theta", "0"]).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
