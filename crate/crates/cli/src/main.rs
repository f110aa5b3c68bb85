use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use topocoarse::io::{self, Ingested, IoError};
use topocoarse::oracle::{self, BettiVector, OracleError};
use topocoarse::pipeline::{exact_coarsening, ConfigError, PipelineError};
use topocoarse::{coarsen, CoarseningConfig, SupernodeMap};

#[derive(Parser)]
#[command(name = "topocoarse", version, about = "Topology-preserving graph coarsening")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coarsen a graph and write the reduced graph, partition, attributes and report.
    Coarsen(CoarsenArgs),
    /// Compare Betti numbers before and after exact coarsening on a small graph.
    Verify(VerifyArgs),
    /// Print basic graph statistics.
    Stats(InputArgs),
    /// Coarsen at several ratios and print a CSV of sizes and timings.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Edge list, one "u v" pair per line.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct Params {
    /// Degree threshold; defaults to 4x the average degree.
    #[arg(long)]
    theta1: Option<usize>,
    /// Minimum removals per relaxed pass before r grows; defaults to 1% of the nodes.
    #[arg(long)]
    theta2: Option<usize>,
    #[arg(long, default_value_t = 50)]
    exact_iters: usize,
    #[arg(long, default_value_t = 1000)]
    approx_iters: usize,
    #[arg(long, default_value_t = 0.0)]
    drop_edge_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Params {
    fn config(&self, g: &topocoarse::WorkingGraph, ratio: f64) -> CoarseningConfig {
        let base = CoarseningConfig::for_graph(g, ratio);
        CoarseningConfig {
            theta1: self.theta1.unwrap_or(base.theta1),
            theta2: self.theta2.unwrap_or(base.theta2),
            exact_iters: self.exact_iters,
            approx_iters: self.approx_iters,
            drop_edge_ratio: self.drop_edge_ratio,
            rng_seed: self.seed,
            ..base
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
}

#[derive(Args)]
struct CoarsenArgs {
    #[arg(long)]
    input: PathBuf,
    /// Feature CSV: external id followed by the feature values.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Label CSV: external id, integer label.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Target ratio of surviving nodes, in (0, 1].
    #[arg(long)]
    ratio: f64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Format of the report printed to stdout (report.json is always written).
    #[arg(long, value_enum, default_value = "text")]
    report: ReportFormat,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Refuse graphs with more nodes than this.
    #[arg(long, default_value_t = 200)]
    max_nodes: usize,
    /// Also run the full pipeline at these ratios and print (ratio, beta1) CSV.
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<f64>,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    ratios: Vec<f64>,
    /// Runs per ratio; the median wall time is reported.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[command(flatten)]
    params: Params,
}

enum Failure {
    Usage(String),
    Data(String),
    OracleScale(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::OracleScale(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::OracleScale(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(c) => c.into(),
            e => Failure::Data(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        Failure::OracleScale(e.to_string())
    }
}

fn load(path: &Path) -> Result<Ingested, Failure> {
    Ok(io::ingest(path, None, None)?)
}

fn run_coarsen(args: CoarsenArgs) -> Result<String, Failure> {
    let ing = io::ingest(&args.input, args.features.as_deref(), args.labels.as_deref())?;
    let config = args.params.config(&ing.graph, args.ratio);
    config.validate()?;
    let mut result = coarsen(ing.graph, &ing.attributes, &config)?;
    result.report.ingest_warnings = ing.warnings;
    io::write_outputs(&args.out_dir, &ing.ids, &result)?;
    Ok(match args.report {
        ReportFormat::Json => serde_json::to_string_pretty(&result.report).expect("report serializes") + "\n",
        ReportFormat::Text => io::render_text(&result.report),
    })
}

fn fmt_betti(b: &BettiVector) -> String {
    match b.beta2 {
        Some(b2) => format!("({},{},{})", b.beta0, b.beta1, b2),
        None => format!("({},{})", b.beta0, b.beta1),
    }
}

fn run_verify(args: VerifyArgs) -> Result<String, Failure> {
    let ing = load(&args.input)?;
    let n = ing.graph.node_count();
    if n > args.max_nodes {
        return Err(Failure::OracleScale(format!(
            "{n} nodes exceeds --max-nodes {}",
            args.max_nodes
        )));
    }
    let mut out = String::new();
    let mut g = ing.graph.clone();
    let before = oracle::betti_of(&g, 3)?;
    let config = CoarseningConfig {
        // exact phase only: no ratio stop, no degree cap unless asked
        theta1: args.params.theta1.unwrap_or(usize::MAX),
        target_ratio: 1.0 / (n.max(1) as f64 + 1.0),
        exact_iters: args.params.exact_iters,
        ..CoarseningConfig::default()
    };
    config.validate()?;
    let mut map = SupernodeMap::identity(g.node_bound());
    exact_coarsening(&mut g, &mut map, &config, None, &mut Vec::new(), &mut ())
        .map_err(|e| Failure::Data(e.to_string()))?;
    let after = oracle::betti_of(&g, 3)?;
    let _ = writeln!(out, "nodes {} -> {}", n, g.node_count());
    let pairs = [
        ("beta0", Some(before.beta0), Some(after.beta0)),
        ("beta1", Some(before.beta1), Some(after.beta1)),
        ("beta2", before.beta2, after.beta2),
    ];
    for (name, b, a) in pairs {
        let (b, a) = (b.unwrap_or(0), a.unwrap_or(0));
        let verdict = if a == b { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{verdict} {name} {b} -> {a}");
    }
    let _ = writeln!(out, "betti {} -> {}", fmt_betti(&before), fmt_betti(&after));

    if !args.ratios.is_empty() {
        let _ = writeln!(out, "ratio,nodes,beta1");
        for &ratio in &args.ratios {
            let config = args.params.config(&ing.graph, ratio);
            config.validate()?;
            let res = coarsen(ing.graph.clone(), &ing.attributes, &config)?;
            let b = oracle::betti_of(&res.graph, 2)?;
            let _ = writeln!(out, "{ratio},{},{}", res.graph.node_count(), b.beta1);
        }
    }
    Ok(out)
}

fn run_stats(args: InputArgs) -> Result<String, Failure> {
    let ing = load(&args.input)?;
    let g = &ing.graph;
    Ok(format!(
        "n={}\nm={}\nd_max={}\nd_bar={:.2}\ncomponents={}\n",
        g.node_count(),
        g.edge_count(),
        g.max_degree(),
        g.average_degree(),
        oracle::component_count(g)
    ))
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        (xs[k / 2 - 1] + xs[k / 2]) / 2.0
    }
}

fn run_sweep(args: SweepArgs) -> Result<String, Failure> {
    if args.repeat == 0 {
        return Err(Failure::Usage("--repeat must be at least 1".into()));
    }
    let ing = load(&args.input)?;
    let mut out = String::from(
        "ratio,nodes,edges,theta1,theta2,alive_nodes,alive_edges,final_ratio,reached,removed_exact,repeats,median_ms\n",
    );
    for &ratio in &args.ratios {
        let config = args.params.config(&ing.graph, ratio);
        config.validate()?;
        let mut times = Vec::with_capacity(args.repeat);
        let mut last = None;
        for _ in 0..args.repeat {
            let t = Instant::now();
            let res = coarsen(ing.graph.clone(), &ing.attributes, &config)?;
            times.push(t.elapsed().as_secs_f64() * 1e3);
            last = Some(res.report);
        }
        let r = last.expect("repeat >= 1");
        let _ = writeln!(
            out,
            "{ratio},{},{},{},{},{},{},{:.6},{},{},{},{:.3}",
            r.original_nodes,
            r.original_edges,
            config.theta1,
            config.theta2,
            r.alive_nodes,
            r.alive_edges,
            r.final_ratio,
            r.reached,
            r.original_nodes - r.exact_nodes,
            args.repeat,
            median(&mut times)
        );
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Coarsen(a) => run_coarsen(a),
        Command::Verify(a) => run_verify(a),
        Command::Stats(a) => run_stats(a),
        Command::Sweep(a) => run_sweep(a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

}
