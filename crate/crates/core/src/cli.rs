//! Command-line interface.
//!
//! Exit status is 0 on success, 2 for usage errors and 1 for runtime
//! failures. Each command prints one `key=value` summary line on stdout.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array1;
use rayon::prelude::*;

use crate::barycenter::fit_gwb;
use crate::error::{Error, Result};
use crate::eval::{
    clustering_accuracy, gw_error, mse_error, naive_average_estimate, upsample_step_function, usvt_estimate,
    DEFAULT_RESOLUTION,
};
use crate::io::{
    append_results_csv, graph_file_name, read_graph_dir, read_step_function, read_tu_dataset, write_edge_list,
    write_heatmap, write_results_csv, write_step_function, ResultRow,
};
use crate::mixture::{assign_clusters, estimate_mixture};
use crate::model::{Family, GraphonSpec, ObservedGraph, SolverConfig, StepFunction};
use crate::sampling::{population_plan, sample_graph, sample_population, splitmix64};
use crate::smoothed::{fit_sgwb, SmoothedSolveMode};

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Parser, Debug)]
#[command(
    name = "graphon",
    version,
    about = "Graphon estimation with Gromov-Wasserstein barycenters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample graphs from a graphon into edge-list files.
    Sample(SampleArgs),
    /// Estimate a step-function graphon from a directory of graphs.
    Estimate(EstimateArgs),
    /// Fit a mixture of barycenters and cluster the graphs.
    Cluster(ClusterArgs),
    /// Score a step-function estimate against a known graphon.
    Eval(EvalArgs),
    /// Run the sample / estimate / evaluate grid over families and methods.
    Benchmark(BenchmarkArgs),
}

/// Family name or `grid:PATH` to a step-function file.
#[derive(Clone, Debug)]
struct GraphonArg(GraphonSpec);

impl FromStr for GraphonArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some(path) = s.strip_prefix("grid:") {
            let w = read_step_function(path).map_err(|e| e.to_string())?;
            return grid_spec(&w).map(GraphonArg).map_err(|e| e.to_string());
        }
        s.parse::<Family>()
            .map(|f| GraphonArg(f.into()))
            .map_err(|e| e.to_string())
    }
}

fn grid_spec(w: &StepFunction) -> Result<GraphonSpec> {
    let k = w.k();
    let uniform = w.measure().iter().all(|&m| (m - 1.0 / k as f64).abs() <= 1e-12);
    if uniform {
        GraphonSpec::grid(w.values().clone())
    } else {
        GraphonSpec::grid(upsample_step_function(w, DEFAULT_RESOLUTION.max(k))?)
    }
}

/// `n` or `min:max`.
#[derive(Clone, Copy, Debug)]
struct NodeRange(usize, usize);

impl FromStr for NodeRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid node count `{t}`"))
        };
        let (lo, hi) = match s.split_once(':') {
            Some((a, b)) => (num(a)?, num(b)?),
            None => {
                let n = num(s)?;
                (n, n)
            }
        };
        if lo < 2 || lo > hi {
            return Err(format!("node range `{s}` must satisfy 2 <= min <= max"));
        }
        Ok(NodeRange(lo, hi))
    }
}

/// `auto` or a positive integer.
#[derive(Clone, Copy, Debug)]
struct PartitionArg(Option<usize>);

impl FromStr for PartitionArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(PartitionArg(None));
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(PartitionArg(Some(k))),
            _ => Err(format!("expected `auto` or a positive integer, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum Method {
    Gwb,
    Sgwb,
    Usvt,
    Naive,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Gwb => "gwb",
            Method::Sgwb => "sgwb",
            Method::Usvt => "usvt",
            Method::Naive => "naive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Metric {
    Mse,
    Gw,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Gw => "gw",
        }
    }

    fn for_family(f: Family) -> Metric {
        if f.is_hard_to_align() {
            Metric::Gw
        } else {
            Metric::Mse
        }
    }
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Proximal and entropic weight.
    #[arg(long, default_value_t = 0.005)]
    beta: f64,
    /// Alternating barycenter iterations.
    #[arg(long, default_value_t = 5)]
    outer: usize,
    /// Proximal steps per transport solve.
    #[arg(long, default_value_t = 10)]
    sinkhorn: usize,
    /// Scaling sweeps per proximal step.
    #[arg(long, default_value_t = 1)]
    inner: usize,
    /// Smoothness weight for sgwb.
    #[arg(long, default_value_t = 0.0002)]
    alpha: f64,
    /// Reuse each graph's previous plan as the next initial plan.
    #[arg(long)]
    warm_start: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> CliResult<SolverConfig> {
        let cfg = SolverConfig {
            beta: self.beta,
            outer_iters: self.outer,
            sinkhorn_iters: self.sinkhorn,
            inner_iters: self.inner,
            alpha: self.alpha,
            warm_start: self.warm_start,
            seed: self.seed,
            ..SolverConfig::default()
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    graphon: GraphonArg,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long)]
    nodes: NodeRange,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Directory of edge-list files.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Gwb)]
    method: Method,
    #[arg(long, default_value = "auto")]
    k: PartitionArg,
    #[arg(long, default_value = "paper")]
    mode: SmoothedSolveMode,
    #[command(flatten)]
    solver: SolverArgs,
    /// Step-function output file.
    #[arg(long)]
    out: PathBuf,
    /// Optional PGM rendering of the estimate.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    heatmap_size: usize,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Directory of edge-list files, or `tu:DIR` for a TUDataset corpus.
    #[arg(long = "in")]
    input: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    clusters: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    rounds: u64,
    /// Use only the first N graphs.
    #[arg(long)]
    limit: Option<usize>,
    /// One integer label per line, in graph order.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    truth: GraphonArg,
    #[arg(long, value_enum, default_value_t = Metric::Gw)]
    metric: Metric,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    /// Results file to append a row to.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Comma-separated family names, or `all13`.
    #[arg(long, default_value = "all13")]
    families: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "gwb,sgwb,usvt,naive")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long, default_value = "200")]
    nodes: NodeRange,
    /// Overrides the per-family metric (gw for hard-to-align, mse otherwise).
    #[arg(long, value_enum)]
    metric: Option<Metric>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    #[arg(long, default_value = "paper")]
    mode: SmoothedSolveMode,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    csv: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write wall-clock seconds to the CSV (makes the file run-dependent).
    #[arg(long)]
    record_runtime: bool,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn cmd_sample(a: SampleArgs) -> CliResult<()> {
    create_dir(&a.out)?;
    let plan = population_plan(a.count as usize, (a.nodes.0, a.nodes.1), a.seed)?;
    let graphs = plan
        .par_iter()
        .map(|&(n, seed)| sample_graph(&a.graphon.0, n, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = csv::Writer::from_path(a.out.join("manifest.csv")).map_err(Error::from)?;
    manifest
        .write_record(["file", "nodes", "edges", "seed"])
        .map_err(Error::from)?;
    for (i, (g, &(n, seed))) in graphs.iter().zip(&plan).enumerate() {
        let name = graph_file_name(i);
        write_edge_list(g, a.out.join(&name))?;
        manifest
            .write_record([
                name.display().to_string(),
                n.to_string(),
                g.edge_count().to_string(),
                seed.to_string(),
            ])
            .map_err(Error::from)?;
    }
    manifest.flush().map_err(|e| Error::io(&a.out, e))?;
    println!(
        "graphs={} graphon={} out={}",
        graphs.len(),
        a.graphon.0.label(),
        a.out.display()
    );
    Ok(())
}

fn load_dir(dir: &Path) -> CliResult<Vec<ObservedGraph>> {
    if !dir.is_dir() {
        return usage(format!("{} is not a directory", dir.display()));
    }
    let graphs = read_graph_dir(dir)?;
    if graphs.is_empty() {
        return usage(format!("no edge-list files in {}", dir.display()));
    }
    Ok(graphs)
}

/// Estimate plus the final barycenter objective where one exists.
fn estimate(
    graphs: &[ObservedGraph],
    method: Method,
    cfg: &SolverConfig,
    k: Option<usize>,
    mode: SmoothedSolveMode,
) -> Result<(StepFunction, Option<f64>)> {
    Ok(match method {
        Method::Gwb => {
            let fit = fit_gwb(graphs, cfg, k)?;
            (fit.step, Some(fit.final_objective))
        }
        Method::Sgwb => {
            let fit = fit_sgwb(graphs, cfg, k, mode)?;
            (fit.step, Some(fit.final_objective))
        }
        Method::Usvt => (usvt_estimate(graphs)?, None),
        Method::Naive => (naive_average_estimate(graphs)?, None),
    })
}

fn cmd_estimate(a: EstimateArgs) -> CliResult<()> {
    let cfg = a.solver.config()?;
    let graphs = load_dir(&a.input)?;
    let start = Instant::now();
    let (step, objective) = estimate(&graphs, a.method, &cfg, a.k.0, a.mode)?;
    let runtime = start.elapsed().as_secs_f64();
    write_step_function(&step, &a.out)?;
    if let Some(path) = &a.heatmap {
        write_heatmap(&upsample_step_function(&step, a.heatmap_size.max(step.k()))?, path)?;
    }
    let objective = objective.map_or_else(|| "nan".to_string(), |o| o.to_string());
    println!(
        "method={} K={} runtime_seconds={runtime:.6} objective={objective}",
        a.method.name(),
        step.k()
    );
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("invalid label `{}`", l.trim()),
            })
        })
        .collect()
}

fn cmd_cluster(a: ClusterArgs) -> CliResult<()> {
    let cfg = a.solver.config()?;
    let (mut graphs, mut truth) = match a.input.strip_prefix("tu:") {
        Some(dir) => {
            let data = read_tu_dataset(dir)?;
            let (g, l): (Vec<_>, Vec<_>) = data.into_iter().unzip();
            (g, Some(l))
        }
        None => (load_dir(Path::new(&a.input))?, None),
    };
    if let Some(path) = &a.labels {
        truth = Some(read_labels(path)?);
    }
    if let Some(limit) = a.limit {
        graphs.truncate(limit);
        if let Some(t) = truth.as_mut() {
            t.truncate(limit);
        }
    }
    let c = a.clusters as usize;
    if c > graphs.len() {
        return usage(format!("{c} clusters requested for {} graphs", graphs.len()));
    }
    if let Some(t) = &truth {
        if t.len() != graphs.len() {
            return usage(format!("{} labels for {} graphs", t.len(), graphs.len()));
        }
    }

    let model = estimate_mixture(&graphs, c, &cfg, a.rounds as usize)?;
    create_dir(&a.out)?;
    for (i, w) in model.components.iter().enumerate() {
        write_step_function(w, a.out.join(format!("component_{i}.txt")))?;
    }
    let assignment_path = a.out.join("assignment.csv");
    let mut writer = csv::Writer::from_path(&assignment_path).map_err(Error::from)?;
    for row in model.assignment.coupling().rows() {
        writer
            .write_record(row.iter().map(|v| format!("{v:.16e}")))
            .map_err(Error::from)?;
    }
    writer.flush().map_err(|e| Error::io(&assignment_path, e))?;
    let predicted = assign_clusters(&model);
    let labels: String = predicted.iter().map(|l| format!("{l}\n")).collect();
    let labels_path = a.out.join("labels.txt");
    fs::write(&labels_path, labels).map_err(|e| Error::io(&labels_path, e))?;

    let mut summary = format!("clusters={c} graphs={}", graphs.len());
    if let Some(t) = &truth {
        summary.push_str(&format!(" accuracy={}", clustering_accuracy(&predicted, t)?));
    }
    println!("{summary}");
    Ok(())
}

fn evaluate(step: &StepFunction, truth: &GraphonSpec, metric: Metric, resolution: usize) -> Result<f64> {
    match metric {
        Metric::Mse => mse_error(step, truth, resolution),
        Metric::Gw => gw_error(step, truth, &SolverConfig::evaluation(), resolution),
    }
}

fn cmd_eval(a: EvalArgs) -> CliResult<()> {
    if a.resolution == 0 {
        return usage("resolution must be positive");
    }
    let step = read_step_function(&a.estimate)?;
    let value = evaluate(&step, &a.truth.0, a.metric, a.resolution)?;
    println!("metric={} value={value}", a.metric.name());
    if let Some(path) = &a.csv {
        let method = a
            .estimate
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let row = ResultRow {
            family: a.truth.0.label(),
            method,
            trial: 0,
            m: 0,
            n_min: 0,
            n_max: 0,
            metric: a.metric.name().into(),
            value: Some(value),
            runtime_seconds: None,
            seed: 0,
        };
        append_results_csv(&[row], path)?;
    }
    Ok(())
}

/// FNV-1a, stable across platforms and toolchains.
fn stable_hash(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in part.as_bytes().iter().chain(std::iter::once(&0u8)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn cell_seed(master: u64, parts: &[&str]) -> u64 {
    splitmix64(master ^ stable_hash(parts))
}

fn parse_families(s: &str) -> CliResult<Vec<Family>> {
    if s == "all13" || s == "all" {
        return Ok(Family::ALL.to_vec());
    }
    s.split(',')
        .map(|t| t.trim().parse::<Family>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

struct Cell {
    family: Family,
    method: Method,
    trial: usize,
}

fn cmd_benchmark(a: BenchmarkArgs) -> CliResult<()> {
    let cfg = a.solver.config()?;
    let families = parse_families(&a.families)?;
    if a.methods.is_empty() {
        return usage("no methods given");
    }
    if a.resolution == 0 {
        return usage("resolution must be positive");
    }
    let mut methods = a.methods.clone();
    methods.sort();
    methods.dedup();
    let cells: Vec<Cell> = families
        .iter()
        .flat_map(|&family| {
            let methods = &methods;
            (0..a.trials as usize)
                .flat_map(move |trial| methods.iter().map(move |&method| Cell { family, method, trial }))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (n_min, n_max) = (a.nodes.0, a.nodes.1);
    let rows: Vec<ResultRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let trial = cell.trial.to_string();
                // Every method sees the same population within a trial.
                let population_seed = cell_seed(a.solver.seed, &[cell.family.name(), &trial]);
                let seed = cell_seed(a.solver.seed, &[cell.family.name(), cell.method.name(), &trial]);
                let metric = a.metric.unwrap_or(Metric::for_family(cell.family));
                let start = Instant::now();
                let value = sample_population(&cell.family.into(), a.count as usize, (n_min, n_max), population_seed)
                    .and_then(|graphs| estimate(&graphs, cell.method, &cfg.clone().with_seed(seed), None, a.mode))
                    .and_then(|(step, _)| evaluate(&step, &cell.family.into(), metric, a.resolution));
                let runtime = start.elapsed().as_secs_f64();
                let (metric_name, value) = match value {
                    Ok(v) => (metric.name().to_string(), Some(v)),
                    Err(e) => {
                        eprintln!("cell {} {} trial {}: {e}", cell.family, cell.method.name(), cell.trial);
                        ("error".to_string(), None)
                    }
                };
                ResultRow {
                    family: cell.family.name().into(),
                    method: cell.method.name().into(),
                    trial: cell.trial,
                    m: a.count as usize,
                    n_min,
                    n_max,
                    metric: metric_name,
                    value,
                    runtime_seconds: Some(runtime),
                    seed,
                }
            })
            .collect()
    });

    for &family in &families {
        for &method in &methods {
            let cell: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.family == family.name() && r.method == method.name())
                .collect();
            let values: Vec<f64> = cell.iter().filter_map(|r| r.value).collect();
            let runtimes = Array1::from(cell.iter().filter_map(|r| r.runtime_seconds).collect::<Vec<_>>());
            let (mean, std) = mean_std(&values);
            println!(
                "family={} method={} metric={} mean={mean:.6} std={std:.6} errors={} runtime_mean={:.3}",
                family.name(),
                method.name(),
                cell.first().map(|r| r.metric.as_str()).unwrap_or(""),
                cell.len() - values.len(),
                runtimes.mean().unwrap_or(f64::NAN),
            );
        }
    }
    let rows: Vec<ResultRow> = rows
        .into_iter()
        .map(|mut r| {
            if !a.record_runtime {
                r.runtime_seconds = None;
            }
            r
        })
        .collect();
    write_results_csv(&rows, &a.csv)?;
    Ok(())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let v = Array1::from(values.to_vec());
    let mean = v.mean().unwrap_or(f64::NAN);
    (mean, v.std(0.0))
}
