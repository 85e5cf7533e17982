//! Command-line front door: predict, simulate, sweep, report, discretize.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad flags, bad
//! inputs, failed preconditions), 2 on runtime errors (I/O and the like).
//! Machine-readable output (`--format json`) is a single JSON document on
//! stdout; human output also goes to stdout; diagnostics go to stderr.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use walkcast::experiment::{
    self, correlate, read_results_csv, run_sweep, summarize, write_results_csv, write_summary_csv,
    write_trace_bands_csv, ConfigSummary, EngineKind, GraphSource, SweepSpec,
};
use walkcast::graph::{self, RoadGraph};
use walkcast::kn_fast;
use walkcast::process::{self, default_round_cap, ProcessConfig, RunStatus};
use walkcast::theory::{classify_and_predict, RegimeCase};
use walkcast::{Prediction, RegimeOptions};

#[derive(Parser)]
#[command(
    name = "walkcast",
    version,
    about = "Random-walk message broadcasting: simulators, predictors, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    General,
    KnFast,
}

#[derive(Subcommand)]
enum Command {
    /// Predict the broadcasting-time regime on the complete graph
    Predict(PredictArgs),
    /// Run one simulation and print its outcome
    Simulate(SimulateArgs),
    /// Run a Monte Carlo sweep described by a spec file
    Sweep(SweepArgs),
    /// Summarize a results directory (and optionally correlate)
    Report(ReportArgs),
    /// Cap edge lengths of a network file by subdividing long edges
    Discretize(DiscretizeArgs),
}

#[derive(Args)]
struct PredictArgs {
    /// Number of vertices (n >= 3)
    #[arg(long)]
    n: u64,
    /// Number of agents (k >= 2)
    #[arg(long)]
    k: u64,
    /// Sparse/linear cutoff: sparse while k <= c_low * n
    #[arg(long = "c-low")]
    c_low: Option<f64>,
    /// Slack factor for the constant-k interval (default ln n)
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    /// Graph spec: complete:N, cycle:N, torus:WxH, or file:PATH
    #[arg(long)]
    graph: String,
    /// Subdivide edges longer than this distance before simulating
    #[arg(long)]
    discretize: Option<f64>,
    /// Number of agents (k >= 2)
    #[arg(long)]
    k: usize,
    /// Enable jump-over transmission
    #[arg(long = "jump-over")]
    jump_over: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Round cap (default: max(10 n ln(max(k,3))/k, 10n, 1000))
    #[arg(long = "max-rounds")]
    max_rounds: Option<u64>,
    #[arg(long, value_enum, default_value = "general")]
    engine: EngineArg,
    /// Include the per-round informed counts in the output
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep spec file (TOML)
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for results.csv and summary.csv
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: WALKCAST_THREADS or all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Record measured wall times in results.csv (breaks byte-for-byte
    /// reproducibility of the file)
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory containing results.csv
    #[arg(long = "in")]
    input: PathBuf,
    /// Also print the n ln k / k correlation per engine/jump-over subset
    #[arg(long)]
    correlate: bool,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Args)]
struct DiscretizeArgs {
    /// Input network file
    #[arg(long = "in")]
    input: PathBuf,
    /// Maximum allowed edge length
    #[arg(long)]
    d: f64,
    /// Output network file
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn validation(e: impl std::fmt::Display) -> Self {
        CliError::Validation(e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<graph::GraphError> for CliError {
    fn from(e: graph::GraphError) -> Self {
        match e {
            graph::GraphError::Io(io) => CliError::runtime(io),
            other => CliError::validation(other),
        }
    }
}

impl From<experiment::ExperimentError> for CliError {
    fn from(e: experiment::ExperimentError) -> Self {
        use experiment::ExperimentError::*;
        match e {
            Io(io) => CliError::runtime(io),
            Graph(graph::GraphError::Io(io)) => CliError::runtime(io),
            ThreadPool(msg) => CliError::Runtime(msg),
            other => CliError::validation(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Predict(args) => cmd_predict(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
        Command::Discretize(args) => cmd_discretize(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn case_name(case: RegimeCase) -> &'static str {
    match case {
        RegimeCase::A => "constant k (sparse)",
        RegimeCase::B => "sublinear k (sparse)",
        RegimeCase::C => "linear k",
        RegimeCase::D => "polylog multiple of n",
        RegimeCase::E => "superlinear, fixed round count",
        RegimeCase::F => "strongly superlinear, two rounds",
        RegimeCase::G => "boundary exponent",
    }
}

#[derive(Serialize)]
struct PredictOutput {
    n: u64,
    k: u64,
    #[serde(flatten)]
    prediction: Prediction,
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let mut options = RegimeOptions::default();
    if let Some(c_low) = args.c_low {
        if !(c_low.is_finite() && c_low > 0.0) {
            return Err(CliError::Validation(format!(
                "--c-low must be positive and finite, got {c_low}"
            )));
        }
        options.c_low = c_low;
    }
    if let Some(omega) = args.omega {
        if !(omega.is_finite() && omega > 1.0) {
            return Err(CliError::Validation(format!(
                "--omega must be finite and > 1, got {omega}"
            )));
        }
        options.omega = Some(omega);
    }
    let prediction =
        classify_and_predict(args.n, args.k, &options).map_err(CliError::validation)?;

    match args.format {
        Format::Json => {
            let out = PredictOutput {
                n: args.n,
                k: args.k,
                prediction,
            };
            println!(
                "{}",
                serde_json::to_string(&out).map_err(CliError::runtime)?
            );
        }
        Format::Human => {
            println!(
                "case:      {:?} ({})",
                prediction.case,
                case_name(prediction.case)
            );
            println!("estimate:  {:.4} rounds", prediction.estimate);
            if let (Some(lo), Some(hi)) = (prediction.lower, prediction.upper) {
                if prediction.case == RegimeCase::G {
                    println!("outcomes:  {{{lo:.0}, {hi:.0}}}");
                } else {
                    println!("interval:  [{lo:.4}, {hi:.4}]");
                }
            }
            println!("c = k/n:   {:.6}", prediction.c);
            if let Some(x) = prediction.x {
                println!("x:         {x:.6}");
            }
            if let Some(ratio) = prediction.threshold_ratio {
                println!("(k/n)^i / (n ln n): {ratio:.6}");
            }
            if let Some(note) = &prediction.note {
                println!("note:      {note}");
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateOutput {
    graph: String,
    n: usize,
    m: usize,
    d: Option<f64>,
    k: usize,
    jump_over: bool,
    engine: &'static str,
    seed: u64,
    max_rounds: u64,
    status: RunStatus,
    /// Broadcasting time; absent when the round cap was hit.
    broadcast_time: Option<u64>,
    rounds: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<usize>>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    if args.k < 2 {
        return Err(CliError::Validation(format!(
            "--k must be at least 2, got {}",
            args.k
        )));
    }
    let source = GraphSource::parse(&args.graph)?;
    let started = Instant::now();
    let out = match args.engine {
        EngineArg::KnFast => {
            let n = match source {
                GraphSource::Complete(n) => n,
                _ => {
                    return Err(CliError::Validation(
                        "--engine kn-fast needs --graph complete:N".into(),
                    ))
                }
            };
            if args.jump_over {
                return Err(CliError::Validation(
                    "--engine kn-fast does not support --jump-over".into(),
                ));
            }
            if args.discretize.is_some() {
                return Err(CliError::Validation(
                    "--engine kn-fast does not take --discretize".into(),
                ));
            }
            let outcome =
                kn_fast::simulate_kn_opts(n, args.k, args.seed, args.max_rounds, args.trace)
                    .map_err(CliError::validation)?;
            SimulateOutput {
                graph: source.label(),
                n,
                m: n * (n - 1) / 2,
                d: None,
                k: args.k,
                jump_over: false,
                engine: "kn_fast",
                seed: args.seed,
                max_rounds: args
                    .max_rounds
                    .unwrap_or_else(|| default_round_cap(n, args.k)),
                status: outcome.status,
                broadcast_time: (outcome.status == RunStatus::Finished).then_some(outcome.rounds),
                rounds: outcome.rounds,
                trace: args.trace.then_some(outcome.informed_trace),
            }
        }
        EngineArg::General => {
            let base = source.build()?;
            let (g, d): (RoadGraph, Option<f64>) = match args.discretize {
                Some(d) => (graph::discretize(&base, d)?.0, Some(d)),
                None => (base, None),
            };
            let cfg = ProcessConfig {
                k: args.k,
                jump_over: args.jump_over,
                max_rounds: args.max_rounds,
                seed: args.seed,
                record_trace: args.trace,
            };
            let cap = args
                .max_rounds
                .unwrap_or_else(|| default_round_cap(g.vertex_count(), args.k));
            let outcome = process::run(&g, &cfg);
            SimulateOutput {
                graph: source.label(),
                n: g.vertex_count(),
                m: g.edge_count(),
                d,
                k: args.k,
                jump_over: args.jump_over,
                engine: "general",
                seed: args.seed,
                max_rounds: cap,
                status: outcome.status,
                broadcast_time: (outcome.status == RunStatus::Finished).then_some(outcome.rounds),
                rounds: outcome.rounds,
                trace: args.trace.then_some(outcome.informed_trace),
            }
        }
    };
    eprintln!(
        "simulated in {:.1} ms",
        started.elapsed().as_secs_f64() * 1e3
    );

    match args.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string(&out).map_err(CliError::runtime)?
        ),
        Format::Human => {
            println!("graph:      {} (n={}, m={})", out.graph, out.n, out.m);
            if let Some(d) = out.d {
                println!("discretize: {d}");
            }
            println!(
                "agents:     k={}  jump-over={}  engine={}  seed={}",
                out.k,
                if out.jump_over { "yes" } else { "no" },
                out.engine,
                out.seed
            );
            match out.status {
                RunStatus::Finished => println!("finished:   broadcast time = {} rounds", out.rounds),
                RunStatus::RoundCapReached => println!(
                    "round cap reached: no broadcast time measured within {} rounds \
                     (the informed set never covered all agents; raise --max-rounds to push further)",
                    out.max_rounds
                ),
            }
            if let Some(trace) = &out.trace {
                let rendered: Vec<String> = trace.iter().map(|c| c.to_string()).collect();
                println!("trace:      {}", rendered.join(","));
            }
        }
    }
    Ok(())
}

fn thread_count(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var("WALKCAST_THREADS") {
        Ok(value) => value.trim().parse().map_err(|_| {
            CliError::Validation(format!(
                "WALKCAST_THREADS must be an integer, got '{value}'"
            ))
        }),
        Err(_) => Ok(0),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    if !args.spec.exists() {
        return Err(CliError::Validation(format!(
            "spec file {} does not exist",
            args.spec.display()
        )));
    }
    let spec = SweepSpec::load(&args.spec)?;
    let threads = thread_count(args.threads)?;

    let started = Instant::now();
    let output = run_sweep(&spec, threads)?;
    let elapsed = started.elapsed();

    std::fs::create_dir_all(&args.out).map_err(CliError::runtime)?;
    let results_path = args.out.join("results.csv");
    let file = std::fs::File::create(&results_path).map_err(CliError::runtime)?;
    write_results_csv(&output.records, std::io::BufWriter::new(file), args.timing)
        .map_err(CliError::runtime)?;

    let summaries = summarize(&output.records);
    let summary_path = args.out.join("summary.csv");
    let file = std::fs::File::create(&summary_path).map_err(CliError::runtime)?;
    write_summary_csv(&summaries, std::io::BufWriter::new(file)).map_err(CliError::runtime)?;

    if spec.trace_quantiles {
        let file =
            std::fs::File::create(args.out.join("trace_bands.csv")).map_err(CliError::runtime)?;
        write_trace_bands_csv(&output.trace_bands, std::io::BufWriter::new(file))
            .map_err(CliError::runtime)?;
    }

    let cap_hits: usize = summaries.iter().map(|s| s.stats.cap_hits).sum();
    eprintln!(
        "{} runs in {:.2} s ({} configurations, {} cap hits) -> {}",
        output.records.len(),
        elapsed.as_secs_f64(),
        summaries.len(),
        cap_hits,
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct CorrelationOutput {
    engine: &'static str,
    jump_over: bool,
    groups: usize,
    pearson_r: f64,
    slope: f64,
    intercept: f64,
}

#[derive(Serialize)]
struct ReportOutput {
    summaries: Vec<ConfigSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    correlations: Vec<CorrelationOutput>,
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let results_path = args.input.join("results.csv");
    if !results_path.exists() {
        return Err(CliError::Validation(format!(
            "no results.csv in {}",
            args.input.display()
        )));
    }
    let file = std::fs::File::open(&results_path).map_err(CliError::runtime)?;
    let records = read_results_csv(std::io::BufReader::new(file))?;
    if records.is_empty() {
        return Err(CliError::Validation("results.csv contains no runs".into()));
    }
    let summaries = summarize(&records);

    let summary_path = args.input.join("summary.csv");
    let file = std::fs::File::create(&summary_path).map_err(CliError::runtime)?;
    write_summary_csv(&summaries, std::io::BufWriter::new(file)).map_err(CliError::runtime)?;

    let mut correlations = Vec::new();
    if args.correlate {
        for engine in [EngineKind::General, EngineKind::KnFast] {
            for jump in [false, true] {
                let subset: Vec<ConfigSummary> = summaries
                    .iter()
                    .filter(|s| s.engine == engine && s.jump_over == jump)
                    .cloned()
                    .collect();
                if subset.len() < 3 {
                    continue;
                }
                let report = correlate(&subset)?;
                correlations.push(CorrelationOutput {
                    engine: engine.as_str(),
                    jump_over: jump,
                    groups: subset.len(),
                    pearson_r: report.pearson_r,
                    slope: report.slope,
                    intercept: report.intercept,
                });
            }
        }
    }

    match args.format {
        Format::Json => {
            let out = ReportOutput {
                summaries,
                correlations,
            };
            println!(
                "{}",
                serde_json::to_string(&out).map_err(CliError::runtime)?
            );
        }
        Format::Human => {
            println!("{}", experiment::SUMMARY_HEADER);
            let mut rendered = Vec::new();
            write_summary_csv(&summaries, &mut rendered).map_err(CliError::runtime)?;
            let text = String::from_utf8_lossy(&rendered);
            for line in text.lines().skip(1) {
                println!("{line}");
            }
            for c in &correlations {
                println!(
                    "correlation vs n ln k / k  engine={} jump-over={}: r = {:.5} \
                     (fit rounds = {:.4} * x + {:.4}, {} groups)",
                    c.engine,
                    if c.jump_over { "yes" } else { "no" },
                    c.pearson_r,
                    c.slope,
                    c.intercept,
                    c.groups
                );
            }
            eprintln!("wrote {}", summary_path.display());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DiscretizeOutput {
    input: String,
    output: String,
    #[serde(flatten)]
    report: graph::DiscretizationReport,
}

fn cmd_discretize(args: DiscretizeArgs) -> Result<(), CliError> {
    let g = graph::load_network(&args.input)?;
    let (out_graph, report) = graph::discretize(&g, args.d)?;
    graph::save_network(&out_graph, &args.out)?;

    match args.format {
        Format::Json => {
            let out = DiscretizeOutput {
                input: args.input.display().to_string(),
                output: args.out.display().to_string(),
                report,
            };
            println!(
                "{}",
                serde_json::to_string(&out).map_err(CliError::runtime)?
            );
        }
        Format::Human => {
            println!(
                "discretized {} at d = {}: vertices {} -> {}, edges {} -> {} ({} edges split)",
                args.input.display(),
                report.d,
                report.vertices_before,
                report.vertices_after,
                report.edges_before,
                report.edges_after,
                report.added_per_edge.len()
            );
            println!("wrote {}", args.out.display());
        }
    }
    Ok(())
}
