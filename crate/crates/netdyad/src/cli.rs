//! The `netdyad` command-line driver.
//!
//! Subcommands:
//!
//! - `estimate`: fit a dyadic regression from an edge list plus a dyadic
//!   data CSV and report coefficient estimates with EHW, dyadic-robust, and
//!   network-HAC standard errors.
//! - `simulate`: run a coverage/bias study on random graphs.
//! - `graph-stats`: node- and dyad-level degree statistics of a network.
//! - `diagnose`: denseness measures screening the HAC consistency
//!   conditions.
//! - `emit-edges`: re-emit an edge list in canonical order (debugging aid).
//!
//! Every option may also be supplied through `--config <file>` holding
//! `key = value` lines keyed by the long option names; command-line flags
//! override file values. The replication worker count comes from
//! `--threads`, falling back to the `NETDYAD_THREADS` environment variable.

use crate::diagnostics::denseness_report;
use crate::dyad::{build_dyad_index, build_dyad_network, DyadNetwork, NodeGraph};
use crate::error::{Error, Result};
use crate::graphgen::{generate, GraphKind, GraphSpec};
use crate::io::{
    denseness_table, estimate_table, graph_stats_table, mc_records_table, mc_table,
    parse_dyadic_csv, parse_edge_csv, write_edge_csv, OutputFormat, Table,
};
use crate::montecarlo::{
    run_study_with_records, BandwidthRule, McStudyConfig, McTable, ShockMode,
};
use crate::regression::{ols_fit, within_demean, RegressionData};
use crate::variance::{
    default_bandwidth, dyadic_robust_variance, ehw_variance, network_hac_variance_with,
    repair_psd, EstimatorKind, HacOptions, Kernel,
};
use clap::{ArgAction, Args, Parser, Subcommand};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

#[derive(Parser, Debug)]
#[command(
    name = "netdyad",
    version,
    about = "Dyadic regression with network-robust variance estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a dyadic regression and report standard errors.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo coverage and bias study.
    Simulate(SimulateArgs),
    /// Degree statistics over nodes and over dyads.
    GraphStats(GraphStatsArgs),
    /// Denseness diagnostics of the dyad network.
    Diagnose(DiagnoseArgs),
    /// Re-emit an edge list in canonical order.
    EmitEdges(EmitEdgesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EstimatorChoice {
    All,
    One(EstimatorKind),
}

impl FromStr for EstimatorChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(EstimatorChoice::All),
            "ehw" => Ok(EstimatorChoice::One(EstimatorKind::Ehw)),
            "dyadic" => Ok(EstimatorChoice::One(EstimatorKind::Dyadic)),
            "network" => Ok(EstimatorChoice::One(EstimatorKind::Network)),
            other => Err(format!("unknown estimator '{other}' (expected all|ehw|dyadic|network)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct KernelArg(Kernel);

impl FromStr for KernelArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rectangular" | "rect" => Ok(KernelArg(Kernel::Rectangular)),
            "bartlett" => Ok(KernelArg(Kernel::Bartlett)),
            other => Err(format!("unknown kernel '{other}' (expected rectangular|bartlett)")),
        }
    }
}

/// `auto` or a positive real.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BandwidthArg(Option<f64>);

impl FromStr for BandwidthArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(BandwidthArg(None));
        }
        s.parse::<f64>()
            .map(|b| BandwidthArg(Some(b)))
            .map_err(|_| format!("bandwidth must be 'auto' or a real, got '{s}'"))
    }
}

/// `off` or a repair epsilon.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PsdRepairArg(Option<f64>);

impl FromStr for PsdRepairArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "off" {
            return Ok(PsdRepairArg(None));
        }
        s.parse::<f64>()
            .map(|e| PsdRepairArg(Some(e)))
            .map_err(|_| format!("psd-repair must be 'off' or an epsilon, got '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct FormatArg(OutputFormat);

impl FromStr for FormatArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(FormatArg(OutputFormat::Csv)),
            "text" => Ok(FormatArg(OutputFormat::Text)),
            other => Err(format!("unknown format '{other}' (expected csv|text)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SpecArg(GraphKind);

impl FromStr for SpecArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ba" | "barabasi-albert" => Ok(SpecArg(GraphKind::BarabasiAlbert)),
            "er" | "erdos-renyi" => Ok(SpecArg(GraphKind::ErdosRenyi)),
            other => Err(format!("unknown graph spec '{other}' (expected ba|er)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ShockModeArg(ShockMode);

impl FromStr for ShockModeArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "shared" => Ok(ShockModeArg(ShockMode::SharedPair)),
            "ordered" => Ok(ShockModeArg(ShockMode::OrderedPair)),
            other => Err(format!("unknown shock mode '{other}' (expected shared|ordered)")),
        }
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Edge-list CSV (header `i,j`).
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Dyadic data CSV (header `dyad_id,i,j,y,<covariates...>[,group]`).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Which variance estimators to report.
    #[arg(long)]
    estimator: Option<EstimatorChoice>,
    /// Kernel for the network estimator.
    #[arg(long)]
    kernel: Option<KernelArg>,
    /// Bandwidth for the network estimator: `auto` or a positive real.
    #[arg(long)]
    bandwidth: Option<BandwidthArg>,
    /// Eigenvalue repair: `off` or an epsilon added to all eigenvalues when
    /// an estimate is not positive semidefinite.
    #[arg(long = "psd-repair")]
    psd_repair: Option<PsdRepairArg>,
    /// Confidence level.
    #[arg(long)]
    level: Option<f64>,
    /// Do not add an intercept column.
    #[arg(long = "no-intercept", action = ArgAction::SetTrue)]
    no_intercept: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
    #[arg(long)]
    threads: Option<usize>,
    /// `key = value` file supplying defaults for any option above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Graph family: `ba` or `er`.
    #[arg(long)]
    spec: Option<SpecArg>,
    /// `nu` for ba, `lambda` for er.
    #[arg(long)]
    param: Option<f64>,
    /// Number of nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Maximum spillover distance S.
    #[arg(long)]
    s: Option<usize>,
    /// Spillover decay.
    #[arg(long)]
    gamma: Option<f64>,
    /// Replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Bandwidth: `auto` or a positive real (default 2).
    #[arg(long)]
    bandwidth: Option<BandwidthArg>,
    #[arg(long)]
    kernel: Option<KernelArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// True coefficient of the data-generating process.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
    /// Epsilon for the automatic eigenvalue repair.
    #[arg(long = "psd-epsilon")]
    psd_epsilon: Option<f64>,
    /// Expected-degree scale of the ba seed component.
    #[arg(long = "seed-lambda")]
    seed_lambda: Option<f64>,
    /// Draw one graph and reuse it across replications.
    #[arg(long = "fix-graph", action = ArgAction::SetTrue)]
    fix_graph: bool,
    /// Pair-shock drawing rule: `shared` (default) or `ordered`.
    #[arg(long = "shock-mode")]
    shock_mode: Option<ShockModeArg>,
    /// Also write the per-replication records to this CSV.
    #[arg(long = "dump-reps")]
    dump_reps: Option<PathBuf>,
    /// Run the full offline grid (ba and er, params 1..3, N in
    /// {500,1000,5000}, 5000 replications each). Hours of runtime.
    #[arg(long, action = ArgAction::SetTrue)]
    full: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GraphStatsArgs {
    /// Edge-list CSV; alternatively generate via --spec/--param/--n/--seed.
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    spec: Option<SpecArg>,
    #[arg(long)]
    param: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "seed-lambda")]
    seed_lambda: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Bandwidth the composite measures are evaluated at: `auto` or a real.
    #[arg(long)]
    bandwidth: Option<BandwidthArg>,
    /// Largest shell radius to tabulate (default: the network diameter).
    #[arg(long = "max-s")]
    max_s: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<FormatArg>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmitEdgesArgs {
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::GraphStats(args) => cmd_graph_stats(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::EmitEdges(args) => cmd_emit_edges(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// `key = value` lines; `#` starts a comment.
struct ConfigMap {
    map: HashMap<String, String>,
    path: String,
}

impl ConfigMap {
    fn load(path: Option<&Path>, allowed: &[&str]) -> Result<ConfigMap> {
        let mut map = HashMap::new();
        let path_str = path.map(|p| p.display().to_string()).unwrap_or_default();
        if let Some(p) = path {
            let content =
                std::fs::read_to_string(p).map_err(|e| Error::io(&p.display().to_string(), e))?;
            for (lineno, raw) in content.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::parse(&path_str, lineno as u64 + 1, "expected 'key = value'")
                })?;
                let key = key.trim().to_string();
                if !allowed.contains(&key.as_str()) {
                    return Err(Error::parse(
                        &path_str,
                        lineno as u64 + 1,
                        format!("unknown option '{key}'"),
                    ));
                }
                map.insert(key, value.trim().to_string());
            }
        }
        Ok(ConfigMap { map, path: path_str })
    }

    fn get<V: FromStr>(&self, key: &str) -> Result<Option<V>>
    where
        V::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<V>().map(Some).map_err(|e| {
                Error::Parse {
                    path: self.path.clone(),
                    line: 0,
                    msg: format!("option '{key}': {e}"),
                }
            }),
        }
    }

    fn get_flag(&self, key: &str) -> Result<bool> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidSpec(format!("missing required option --{flag}")))
}

fn threads_from_env(cli: Option<usize>) -> Option<usize> {
    cli.or_else(|| std::env::var("NETDYAD_THREADS").ok()?.parse().ok())
}

fn install_pool<R>(threads: Option<usize>, f: impl FnOnce() -> Result<R> + Send) -> Result<R>
where
    R: Send,
{
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::MonteCarlo(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

fn load_network(path: &Path) -> Result<(NodeGraph, DyadNetwork)> {
    let graph = parse_edge_csv(path)?;
    let net = build_dyad_network(build_dyad_index(&graph));
    Ok((graph, net))
}

fn cmd_estimate(mut args: EstimateArgs) -> Result<()> {
    const KEYS: &[&str] = &[
        "edges", "data", "estimator", "kernel", "bandwidth", "psd-repair", "level",
        "no-intercept", "out", "format", "threads",
    ];
    let cfg = ConfigMap::load(args.config.as_deref(), KEYS)?;
    args.edges = args.edges.or(cfg.get::<PathBuf>("edges")?);
    args.data = args.data.or(cfg.get::<PathBuf>("data")?);
    args.estimator = args.estimator.or(cfg.get("estimator")?);
    args.kernel = args.kernel.or(cfg.get("kernel")?);
    args.bandwidth = args.bandwidth.or(cfg.get("bandwidth")?);
    args.psd_repair = args.psd_repair.or(cfg.get("psd-repair")?);
    args.level = args.level.or(cfg.get("level")?);
    args.no_intercept = args.no_intercept || cfg.get_flag("no-intercept")?;
    args.out = args.out.or(cfg.get::<PathBuf>("out")?);
    args.format = args.format.or(cfg.get("format")?);
    args.threads = args.threads.or(cfg.get("threads")?);

    let edges = require(args.edges, "edges")?;
    let data_path = require(args.data, "data")?;
    let estimator = args.estimator.unwrap_or(EstimatorChoice::All);
    let kernel = args.kernel.unwrap_or(KernelArg(Kernel::Rectangular)).0;
    let bandwidth_arg = args.bandwidth.unwrap_or(BandwidthArg(None));
    let repair = args.psd_repair.unwrap_or(PsdRepairArg(None)).0;
    let level = args.level.unwrap_or(0.95);
    let format = args.format.unwrap_or(FormatArg(OutputFormat::Text)).0;
    let threads = threads_from_env(args.threads);

    let (_graph, net) = load_network(&edges)?;
    let parsed = parse_dyadic_csv(&data_path, net.index())?;
    let data = prepare_design(parsed, args.no_intercept)?;
    let fit = ols_fit(Arc::new(data))?;
    let bandwidth = match bandwidth_arg.0 {
        Some(b) => b,
        None => default_bandwidth(&net)?.max(f64::MIN_POSITIVE),
    };

    let kinds: Vec<EstimatorKind> = match estimator {
        EstimatorChoice::All => EstimatorKind::ALL.to_vec(),
        EstimatorChoice::One(k) => vec![k],
    };
    let table = install_pool(threads, || {
        let mut estimates = Vec::new();
        for kind in &kinds {
            let est = match kind {
                EstimatorKind::Ehw => ehw_variance(&fit),
                EstimatorKind::Dyadic => dyadic_robust_variance(&fit, &net)?,
                EstimatorKind::Network => network_hac_variance_with(
                    &fit,
                    &net,
                    kernel,
                    bandwidth,
                    HacOptions { parallel: true },
                )?,
            };
            let est = match repair {
                Some(eps) if est.min_eigenvalue() < 0.0 => repair_psd(&est, eps)?,
                _ => est,
            };
            estimates.push(est);
        }
        estimate_table(&fit, &estimates, level)
    })?;
    table.emit(args.out.as_deref(), format)?;
    eprintln!(
        "estimate: M = {}, K = {}, bandwidth = {bandwidth:.4} ({}), level = {level}",
        fit.data.n_rows(),
        fit.data.n_cols(),
        if bandwidth_arg.0.is_some() { "fixed" } else { "auto" },
    );
    Ok(())
}

/// Within-demeans when a group column is present, otherwise prepends an
/// intercept column unless suppressed.
fn prepare_design(parsed: RegressionData, no_intercept: bool) -> Result<RegressionData> {
    if parsed.group_ids.is_some() {
        return within_demean(&parsed);
    }
    if no_intercept {
        return Ok(parsed);
    }
    let m = parsed.n_rows();
    let k = parsed.n_cols();
    let mut x = nalgebra::DMatrix::zeros(m, k + 1);
    x.set_column(0, &nalgebra::DVector::from_element(m, 1.0));
    for c in 0..k {
        x.set_column(c + 1, &parsed.x.column(c));
    }
    let mut names = vec!["intercept".to_string()];
    names.extend(parsed.names.iter().cloned());
    RegressionData::new(parsed.y, x, parsed.dyad_ids, names, Some(0), None)
}

fn cmd_simulate(mut args: SimulateArgs) -> Result<()> {
    const KEYS: &[&str] = &[
        "spec", "param", "n", "s", "gamma", "reps", "bandwidth", "kernel", "seed", "beta",
        "level", "psd-epsilon", "seed-lambda", "fix-graph", "shock-mode", "dump-reps", "full",
        "out", "format", "threads",
    ];
    let cfg = ConfigMap::load(args.config.as_deref(), KEYS)?;
    args.spec = args.spec.or(cfg.get("spec")?);
    args.param = args.param.or(cfg.get("param")?);
    args.n = args.n.or(cfg.get("n")?);
    args.s = args.s.or(cfg.get("s")?);
    args.gamma = args.gamma.or(cfg.get("gamma")?);
    args.reps = args.reps.or(cfg.get("reps")?);
    args.bandwidth = args.bandwidth.or(cfg.get("bandwidth")?);
    args.kernel = args.kernel.or(cfg.get("kernel")?);
    args.seed = args.seed.or(cfg.get("seed")?);
    args.beta = args.beta.or(cfg.get("beta")?);
    args.level = args.level.or(cfg.get("level")?);
    args.psd_epsilon = args.psd_epsilon.or(cfg.get("psd-epsilon")?);
    args.seed_lambda = args.seed_lambda.or(cfg.get("seed-lambda")?);
    args.fix_graph = args.fix_graph || cfg.get_flag("fix-graph")?;
    args.shock_mode = args.shock_mode.or(cfg.get("shock-mode")?);
    args.dump_reps = args.dump_reps.or(cfg.get::<PathBuf>("dump-reps")?);
    args.full = args.full || cfg.get_flag("full")?;
    args.out = args.out.or(cfg.get::<PathBuf>("out")?);
    args.format = args.format.or(cfg.get("format")?);
    args.threads = args.threads.or(cfg.get("threads")?);

    let s = args.s.unwrap_or(2);
    let gamma = args.gamma.unwrap_or(0.8);
    let seed = args.seed.unwrap_or(0);
    let threads = threads_from_env(args.threads);
    let format = args.format.unwrap_or(FormatArg(OutputFormat::Text)).0;

    let build_config = |kind: GraphKind, param: f64, n: usize, reps: usize| -> McStudyConfig {
        let mut graph_spec = GraphSpec::new(kind, n, param, seed);
        graph_spec.seed_lambda = args.seed_lambda.unwrap_or(1.0);
        let mut mc = McStudyConfig::new(graph_spec, s, gamma, reps);
        mc.beta_true = args.beta.unwrap_or(1.0);
        mc.level = args.level.unwrap_or(0.95);
        mc.kernel = args.kernel.unwrap_or(KernelArg(Kernel::Rectangular)).0;
        mc.bandwidth = match args.bandwidth.unwrap_or(BandwidthArg(Some(2.0))).0 {
            Some(b) => BandwidthRule::Fixed(b),
            None => BandwidthRule::Auto,
        };
        mc.base_seed = seed;
        mc.psd_epsilon = args.psd_epsilon.unwrap_or(0.005);
        mc.fix_graph = args.fix_graph;
        mc.shock_mode = args.shock_mode.unwrap_or(ShockModeArg(ShockMode::SharedPair)).0;
        mc.threads = threads;
        mc
    };

    if args.full {
        // the offline paper-scale grid
        let mut combined = Table::new(&[
            "spec", "param", "n", "estimator", "coverage", "avg_length", "mean_se", "bias_pct",
        ]);
        for kind in [GraphKind::BarabasiAlbert, GraphKind::ErdosRenyi] {
            for param in [1.0, 2.0, 3.0] {
                for n in [500usize, 1000, 5000] {
                    let mc = build_config(kind, param, n, 5000);
                    eprintln!("simulate --full: {kind} param={param} n={n} ...");
                    let table = crate::montecarlo::run_study(&mc)?;
                    for row in &table.rows {
                        combined.push_row(vec![
                            kind.to_string().into(),
                            param.into(),
                            n.into(),
                            row.kind.to_string().into(),
                            row.coverage.into(),
                            row.avg_ci_length.into(),
                            row.mean_se.into(),
                            row.bias_pct.into(),
                        ]);
                    }
                }
            }
        }
        combined.emit(args.out.as_deref(), format)?;
        return Ok(());
    }

    let kind = require(args.spec, "spec")?.0;
    let param = require(args.param, "param")?;
    let n = require(args.n, "n")?;
    let reps = require(args.reps, "reps")?;
    let mc = build_config(kind, param, n, reps);
    let (table, records) = run_study_with_records(&mc)?;
    mc_table(&table).emit(args.out.as_deref(), format)?;
    if let Some(path) = &args.dump_reps {
        mc_records_table(&records).emit(Some(path), OutputFormat::Csv)?;
    }
    print_study_summary(&table);
    Ok(())
}

fn print_study_summary(table: &McTable) {
    let repairs: usize = table.rows.iter().map(|r| r.psd_repairs).sum();
    eprintln!(
        "simulate: {}/{} replications, empirical se {:.6}, {} psd repairs, {} degenerate redraws",
        table.reps_completed, table.reps_requested, table.empirical_se, repairs, table.resampled
    );
}

fn cmd_graph_stats(mut args: GraphStatsArgs) -> Result<()> {
    const KEYS: &[&str] = &["edges", "spec", "param", "n", "seed", "seed-lambda", "out", "format"];
    let cfg = ConfigMap::load(args.config.as_deref(), KEYS)?;
    args.edges = args.edges.or(cfg.get::<PathBuf>("edges")?);
    args.spec = args.spec.or(cfg.get("spec")?);
    args.param = args.param.or(cfg.get("param")?);
    args.n = args.n.or(cfg.get("n")?);
    args.seed = args.seed.or(cfg.get("seed")?);
    args.seed_lambda = args.seed_lambda.or(cfg.get("seed-lambda")?);
    args.out = args.out.or(cfg.get::<PathBuf>("out")?);
    args.format = args.format.or(cfg.get("format")?);

    let format = args.format.unwrap_or(FormatArg(OutputFormat::Text)).0;
    let graph = match (&args.edges, args.spec) {
        (Some(path), _) => parse_edge_csv(path)?,
        (None, Some(spec)) => {
            let mut g = GraphSpec::new(
                spec.0,
                require(args.n, "n")?,
                require(args.param, "param")?,
                args.seed.unwrap_or(0),
            );
            g.seed_lambda = args.seed_lambda.unwrap_or(1.0);
            generate(&g)?
        }
        (None, None) => {
            return Err(Error::InvalidSpec(
                "graph-stats needs either --edges or --spec/--param/--n".into(),
            ))
        }
    };
    let net = build_dyad_network(build_dyad_index(&graph));
    graph_stats_table(&graph, &net).emit(args.out.as_deref(), format)
}

fn cmd_diagnose(mut args: DiagnoseArgs) -> Result<()> {
    const KEYS: &[&str] = &["edges", "bandwidth", "max-s", "out", "format"];
    let cfg = ConfigMap::load(args.config.as_deref(), KEYS)?;
    args.edges = args.edges.or(cfg.get::<PathBuf>("edges")?);
    args.bandwidth = args.bandwidth.or(cfg.get("bandwidth")?);
    args.max_s = args.max_s.or(cfg.get("max-s")?);
    args.out = args.out.or(cfg.get::<PathBuf>("out")?);
    args.format = args.format.or(cfg.get("format")?);

    let edges = require(args.edges, "edges")?;
    let format = args.format.unwrap_or(FormatArg(OutputFormat::Text)).0;
    let (_graph, net) = load_network(&edges)?;
    let bandwidth = match args.bandwidth.unwrap_or(BandwidthArg(None)).0 {
        Some(b) => b,
        None => default_bandwidth(&net)?,
    };
    let report = denseness_report(&net, bandwidth, args.max_s)?;
    denseness_table(&report).emit(args.out.as_deref(), format)?;
    eprintln!(
        "diagnose: M = {}, diameter = {}, bandwidth = {:.4}, sum shell density = {:.4}, mean composite sum = {:.6}",
        net.n_dyads(),
        report.diameter,
        report.bandwidth,
        report.shell_density_sum,
        report.composite_mean_sum
    );
    Ok(())
}

fn cmd_emit_edges(mut args: EmitEdgesArgs) -> Result<()> {
    const KEYS: &[&str] = &["edges", "out"];
    let cfg = ConfigMap::load(args.config.as_deref(), KEYS)?;
    args.edges = args.edges.or(cfg.get::<PathBuf>("edges")?);
    args.out = args.out.or(cfg.get::<PathBuf>("out")?);

    let edges = require(args.edges, "edges")?;
    let graph = parse_edge_csv(&edges)?;
    match &args.out {
        Some(path) => write_edge_csv(&graph, path),
        None => {
            let mut table = Table::new(&["i", "j"]);
            for &(u, v) in graph.edges() {
                table.push_row(vec![u.into(), v.into()]);
            }
            table.emit(None, OutputFormat::Csv)
        }
    }
}

