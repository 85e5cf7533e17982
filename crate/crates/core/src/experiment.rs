//! Reproducible Monte Carlo campaigns: sweep specifications, deterministic
//! per-run seeding, parallel execution with scheduling-independent output,
//! summary statistics with empirical 90% bands, and the predictor
//! correlation report.
//!
//! Determinism contract: every run's seed is derived from the master seed
//! and the run's flattened index, records are aggregated in enumeration
//! order, and the canonical output files contain no volatile fields, so a
//! sweep produces byte-identical files regardless of thread count.
//!
//! The jump-over axis deliberately does not enter the seed derivation:
//! the yes/no runs of a replication share one movement trajectory, which
//! makes the jump-over comparison a paired one.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{self, GraphError, RoadGraph};
use crate::kn_fast;
use crate::process::{self, ProcessConfig, RunStatus};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("results parse error at line {line}: {message}")]
    ResultsParse { line: usize, message: String },
    #[error("correlation needs at least 3 valid groups, got {0}")]
    NotEnoughGroups(usize),
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Simulation engine selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EngineKind {
    /// Agent-level engine on an arbitrary graph.
    General,
    /// O(k)/round engine, complete graphs only, no jump-over.
    KnFast,
}

impl EngineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineKind::General => "general",
            EngineKind::KnFast => "kn_fast",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        match s {
            "general" => Ok(EngineKind::General),
            "kn_fast" | "kn-fast" => Ok(EngineKind::KnFast),
            other => Err(ExperimentError::Spec(format!(
                "unknown engine '{other}' (expected 'general' or 'kn_fast')"
            ))),
        }
    }
}

/// Where the sweep graph comes from; mirrors the CLI mini-language
/// `complete:N`, `cycle:N`, `torus:WxH`, `file:PATH`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSource {
    Complete(usize),
    Cycle(usize),
    Torus(usize, usize),
    File(PathBuf),
}

impl GraphSource {
    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        let bad = |msg: String| ExperimentError::Spec(msg);
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| bad(format!("graph spec '{s}' needs the form kind:arg")))?;
        match kind {
            "complete" => {
                let n = arg
                    .parse()
                    .map_err(|_| bad(format!("bad vertex count in '{s}'")))?;
                Ok(GraphSource::Complete(n))
            }
            "cycle" => {
                let n = arg
                    .parse()
                    .map_err(|_| bad(format!("bad vertex count in '{s}'")))?;
                Ok(GraphSource::Cycle(n))
            }
            "torus" => {
                let (w, h) = arg
                    .split_once('x')
                    .ok_or_else(|| bad(format!("torus spec '{s}' needs WxH")))?;
                let w = w
                    .parse()
                    .map_err(|_| bad(format!("bad torus width in '{s}'")))?;
                let h = h
                    .parse()
                    .map_err(|_| bad(format!("bad torus height in '{s}'")))?;
                Ok(GraphSource::Torus(w, h))
            }
            "file" => Ok(GraphSource::File(PathBuf::from(arg))),
            other => Err(bad(format!(
                "unknown graph kind '{other}' (expected complete, cycle, torus, or file)"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            GraphSource::Complete(n) => format!("complete:{n}"),
            GraphSource::Cycle(n) => format!("cycle:{n}"),
            GraphSource::Torus(w, h) => format!("torus:{w}x{h}"),
            GraphSource::File(p) => format!("file:{}", p.display()),
        }
    }

    pub fn build(&self) -> Result<RoadGraph, GraphError> {
        match self {
            GraphSource::Complete(n) => graph::build_complete(*n),
            GraphSource::Cycle(n) => graph::build_cycle(*n),
            GraphSource::Torus(w, h) => graph::build_torus_grid(*w, *h),
            GraphSource::File(p) => graph::load_network(p),
        }
    }
}

/// One full sweep: graph variants x k values x jump-over x replications.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub graph: GraphSource,
    /// Discretization distances; empty runs the graph as-is.
    pub discretize: Vec<f64>,
    pub k_values: Vec<usize>,
    pub jump_over: Vec<bool>,
    pub replications: usize,
    pub master_seed: u64,
    pub engine: EngineKind,
    pub max_rounds: Option<u64>,
    /// Also aggregate per-round informed-count bands (memory heavy for
    /// long runs; off by default).
    pub trace_quantiles: bool,
}

/// On-disk sweep spec (TOML). `jump_over` entries are booleans.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    graph: String,
    #[serde(default)]
    discretize: Vec<f64>,
    k: Vec<usize>,
    #[serde(default)]
    jump_over: Option<Vec<bool>>,
    replications: usize,
    master_seed: u64,
    #[serde(default)]
    engine: Option<String>,
    #[serde(default)]
    max_rounds: Option<u64>,
    #[serde(default)]
    trace_quantiles: bool,
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let file: SpecFile =
            toml::from_str(text).map_err(|e| ExperimentError::Spec(e.to_string()))?;
        let spec = SweepSpec {
            graph: GraphSource::parse(&file.graph)?,
            discretize: file.discretize,
            k_values: file.k,
            jump_over: file.jump_over.unwrap_or_else(|| vec![false]),
            replications: file.replications,
            master_seed: file.master_seed,
            engine: match file.engine.as_deref() {
                None => EngineKind::General,
                Some(s) => EngineKind::parse(s)?,
            },
            max_rounds: file.max_rounds,
            trace_quantiles: file.trace_quantiles,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Spec(msg));
        if self.k_values.is_empty() {
            return bad("k list must be non-empty".into());
        }
        if let Some(&k) = self.k_values.iter().find(|&&k| k < 2) {
            return bad(format!("every k must be >= 2, got {k}"));
        }
        if self.jump_over.is_empty() {
            return bad("jump_over list must be non-empty".into());
        }
        if self.replications < 1 {
            return bad("replications must be >= 1".into());
        }
        if let Some(&d) = self
            .discretize
            .iter()
            .find(|&&d| !(d.is_finite() && d > 0.0))
        {
            return bad(format!(
                "discretization distances must be positive, got {d}"
            ));
        }
        if let Some(r) = self.max_rounds {
            if r < 1 {
                return bad("max_rounds must be >= 1".into());
            }
        }
        if self.engine == EngineKind::KnFast {
            match self.graph {
                GraphSource::Complete(n) if n >= 3 => {}
                _ => return bad("engine kn_fast requires graph complete:N with N >= 3".into()),
            }
            if !self.discretize.is_empty() {
                return bad("engine kn_fast does not take discretization".into());
            }
            if self.jump_over.iter().any(|&j| j) {
                return bad("engine kn_fast does not support jump-over".into());
            }
        }
        Ok(())
    }
}

/// One simulation run's persisted outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub d: Option<f64>,
    pub k: usize,
    pub jump_over: bool,
    pub engine: EngineKind,
    /// Flattened (graph variant, k, replication) index. The jump-over axis
    /// shares it, and hence shares the seed, so the yes/no comparison is
    /// paired.
    pub run_index: u64,
    pub seed: u64,
    pub status: RunStatus,
    pub rounds: u64,
    /// Measured wall time; written to canonical files only on request
    /// (timing breaks byte-for-byte reproducibility).
    pub wall_ms: f64,
}

/// Per-round informed-count band for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct TraceBand {
    pub graph: String,
    pub d: Option<f64>,
    pub k: usize,
    pub jump_over: bool,
    pub rows: Vec<TraceBandRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceBandRow {
    pub round: u64,
    pub q05: usize,
    pub mean: f64,
    pub q95: usize,
}

/// Everything a sweep produces.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<RunRecord>,
    pub trace_bands: Vec<TraceBand>,
}

/// SplitMix64 finalization of `master_seed XOR (run_index * golden)`.
/// `derive_seed(0, 0)` equals the first SplitMix64 output from state 0;
/// the constants are the published ones and the mapping is frozen by a
/// golden test.
pub fn derive_seed(master_seed: u64, run_index: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = (master_seed ^ run_index.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct GraphVariant {
    label: String,
    d: Option<f64>,
    n: usize,
    m: usize,
    /// Absent for the kn_fast engine, which only needs n.
    graph: Option<RoadGraph>,
}

fn resolve_variants(spec: &SweepSpec) -> Result<Vec<GraphVariant>, ExperimentError> {
    let label = spec.graph.label();
    if spec.engine == EngineKind::KnFast {
        let n = match spec.graph {
            GraphSource::Complete(n) => n,
            _ => unreachable!("validated"),
        };
        return Ok(vec![GraphVariant {
            label,
            d: None,
            n,
            m: n * (n - 1) / 2,
            graph: None,
        }]);
    }
    let base = spec.graph.build()?;
    if spec.discretize.is_empty() {
        return Ok(vec![GraphVariant {
            label,
            d: None,
            n: base.vertex_count(),
            m: base.edge_count(),
            graph: Some(base),
        }]);
    }
    let mut variants = Vec::with_capacity(spec.discretize.len());
    for &d in &spec.discretize {
        let (g, _) = graph::discretize(&base, d)?;
        variants.push(GraphVariant {
            label: label.clone(),
            d: Some(d),
            n: g.vertex_count(),
            m: g.edge_count(),
            graph: Some(g),
        });
    }
    Ok(variants)
}

struct Job {
    variant: usize,
    k: usize,
    jump_over: bool,
    run_index: u64,
    seed: u64,
}

/// Executes the sweep. `threads = 0` uses the library default; any thread
/// count yields identical records because seeds come from run indices and
/// aggregation preserves enumeration order.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<SweepOutput, ExperimentError> {
    spec.validate()?;
    let variants = resolve_variants(spec)?;

    let mut jobs = Vec::new();
    for (gi, _) in variants.iter().enumerate() {
        for (ki, &k) in spec.k_values.iter().enumerate() {
            for rep in 0..spec.replications {
                let run_index = ((gi * spec.k_values.len() + ki) * spec.replications + rep) as u64;
                let seed = derive_seed(spec.master_seed, run_index);
                for &jump_over in &spec.jump_over {
                    jobs.push(Job {
                        variant: gi,
                        k,
                        jump_over,
                        run_index,
                        seed,
                    });
                }
            }
        }
    }

    let run_all = || -> Vec<(RunRecord, Option<Vec<usize>>)> {
        jobs.par_iter()
            .map(|job| run_one(spec, &variants, job))
            .collect()
    };
    let results = if threads == 0 {
        run_all()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
        pool.install(run_all)
    };

    let mut records = Vec::with_capacity(results.len());
    let mut traces = Vec::new();
    for (record, trace) in results {
        if let Some(trace) = trace {
            traces.push((records.len(), trace));
        }
        records.push(record);
    }
    let trace_bands = if spec.trace_quantiles {
        aggregate_trace_bands(&records, &traces)
    } else {
        Vec::new()
    };
    Ok(SweepOutput {
        records,
        trace_bands,
    })
}

fn run_one(
    spec: &SweepSpec,
    variants: &[GraphVariant],
    job: &Job,
) -> (RunRecord, Option<Vec<usize>>) {
    let variant = &variants[job.variant];
    let started = Instant::now();
    let outcome = match spec.engine {
        EngineKind::KnFast => kn_fast::simulate_kn_opts(
            variant.n,
            job.k,
            job.seed,
            spec.max_rounds,
            spec.trace_quantiles,
        )
        .expect("spec validation guarantees kn_fast preconditions"),
        EngineKind::General => {
            let cfg = ProcessConfig {
                k: job.k,
                jump_over: job.jump_over,
                max_rounds: spec.max_rounds,
                seed: job.seed,
                record_trace: spec.trace_quantiles,
            };
            process::run(
                variant.graph.as_ref().expect("general engine has a graph"),
                &cfg,
            )
        }
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let record = RunRecord {
        graph: variant.label.clone(),
        n: variant.n,
        m: variant.m,
        d: variant.d,
        k: job.k,
        jump_over: job.jump_over,
        engine: spec.engine,
        run_index: job.run_index,
        seed: job.seed,
        status: outcome.status,
        rounds: outcome.rounds,
        wall_ms,
    };
    let trace = spec.trace_quantiles.then_some(outcome.informed_trace);
    (record, trace)
}

/// Trace grouping key: (graph label, d bits, k, jump_over).
type TraceKey = (String, Option<u64>, usize, bool);

fn aggregate_trace_bands(records: &[RunRecord], traces: &[(usize, Vec<usize>)]) -> Vec<TraceBand> {
    let mut order: Vec<TraceKey> = Vec::new();
    let mut grouped: HashMap<TraceKey, Vec<&Vec<usize>>> = HashMap::new();
    for (idx, trace) in traces {
        let r = &records[*idx];
        let key = (r.graph.clone(), r.d.map(f64::to_bits), r.k, r.jump_over);
        let entry = grouped.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(trace);
    }

    let mut bands = Vec::new();
    for key in order {
        let group = &grouped[&key];
        let k = key.2;
        let max_len = group.iter().map(|t| t.len()).max().unwrap_or(0);
        if max_len == 0 {
            continue;
        }
        let step = (max_len / 1000).max(1);
        let mut rows = Vec::new();
        let mut round = 0usize;
        while round < max_len {
            // A finished run keeps all k agents informed from then on.
            let mut values: Vec<usize> = group
                .iter()
                .map(|t| t.get(round).copied().unwrap_or(k))
                .collect();
            values.sort_unstable();
            let mean = values.iter().sum::<usize>() as f64 / values.len() as f64;
            rows.push(TraceBandRow {
                round: round as u64,
                q05: nearest_rank(&values, 0.05),
                mean,
                q95: nearest_rank(&values, 0.95),
            });
            round += step;
        }
        bands.push(TraceBand {
            graph: key.0,
            d: key.1.map(f64::from_bits),
            k,
            jump_over: key.3,
            rows,
        });
    }
    bands
}

/// Aggregated statistics for one configuration's finished runs. When a
/// group is entirely cap-hit, `count` is 0 and the moments are NaN.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryStats {
    pub count: usize,
    pub cap_hits: usize,
    pub mean: f64,
    pub std: f64,
    pub min: u64,
    pub max: u64,
    pub q05: u64,
    pub q95: u64,
}

impl SummaryStats {
    pub fn is_valid(&self) -> bool {
        self.count > 0
    }

    /// Moments and nearest-rank quantiles of the finished rounds;
    /// cap-hit runs are excluded and counted separately.
    pub fn from_rounds(finished: &[u64], cap_hits: usize) -> Self {
        if finished.is_empty() {
            return SummaryStats {
                count: 0,
                cap_hits,
                mean: f64::NAN,
                std: f64::NAN,
                min: 0,
                max: 0,
                q05: 0,
                q95: 0,
            };
        }
        let mut sorted = finished.to_vec();
        sorted.sort_unstable();
        let count = sorted.len();
        let mean = sorted.iter().map(|&r| r as f64).sum::<f64>() / count as f64;
        let std = if count > 1 {
            let ss: f64 = sorted.iter().map(|&r| (r as f64 - mean).powi(2)).sum();
            (ss / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        SummaryStats {
            count,
            cap_hits,
            mean,
            std,
            min: sorted[0],
            max: sorted[count - 1],
            q05: nearest_rank(&sorted, 0.05),
            q95: nearest_rank(&sorted, 0.95),
        }
    }
}

/// Nearest-rank quantile on sorted data: the value at rank
/// `ceil(q * N)` (1-based), clamped to the first element for tiny q.
fn nearest_rank<T: Copy>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    debug_assert!(n > 0);
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// One configuration's identity plus its statistics.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigSummary {
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub d: Option<f64>,
    pub k: usize,
    pub jump_over: bool,
    pub engine: EngineKind,
    pub stats: SummaryStats,
    /// Predictor value `n ln k / k` for this configuration.
    pub n_lnk_over_k: f64,
}

/// Groups records by configuration (first-appearance order) and
/// summarizes each group.
pub fn summarize(records: &[RunRecord]) -> Vec<ConfigSummary> {
    type Key = (String, usize, usize, Option<u64>, usize, bool, EngineKind);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: HashMap<Key, (Vec<u64>, usize)> = HashMap::new();
    for r in records {
        let key: Key = (
            r.graph.clone(),
            r.n,
            r.m,
            r.d.map(f64::to_bits),
            r.k,
            r.jump_over,
            r.engine,
        );
        let entry = groups.entry(key.clone()).or_default();
        if entry.0.is_empty() && entry.1 == 0 {
            order.push(key);
        }
        match r.status {
            RunStatus::Finished => entry.0.push(r.rounds),
            RunStatus::RoundCapReached => entry.1 += 1,
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (finished, cap_hits) = &groups[&key];
            let (graph, n, m, d, k, jump_over, engine) = key;
            ConfigSummary {
                graph,
                n,
                m,
                d: d.map(f64::from_bits),
                k,
                jump_over,
                engine,
                stats: SummaryStats::from_rounds(finished, *cap_hits),
                n_lnk_over_k: n as f64 * (k as f64).ln() / k as f64,
            }
        })
        .collect()
}

/// Pearson correlation and least-squares line between a predictor and the
/// observed group means.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    /// `(predictor, mean rounds)` per group.
    pub points: Vec<(f64, f64)>,
    pub pearson_r: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// Pearson r and least-squares fit for paired samples.
pub fn pearson_fit(xs: &[f64], ys: &[f64]) -> Result<CorrelationReport, ExperimentError> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        syy += (y - mean_y) * (y - mean_y);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(ExperimentError::UndefinedCorrelation(
            "predictor values have zero variance".into(),
        ));
    }
    if syy == 0.0 {
        return Err(ExperimentError::UndefinedCorrelation(
            "response values have zero variance".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok(CorrelationReport {
        points: xs.iter().copied().zip(ys.iter().copied()).collect(),
        pearson_r: sxy / (sxx.sqrt() * syy.sqrt()),
        slope,
        intercept: mean_y - slope * mean_x,
    })
}

/// Correlates group mean rounds against the `n ln k / k` predictor over
/// the given summaries (groups with no finished runs are skipped).
/// Needs at least 3 valid groups.
pub fn correlate(groups: &[ConfigSummary]) -> Result<CorrelationReport, ExperimentError> {
    let valid: Vec<&ConfigSummary> = groups.iter().filter(|g| g.stats.is_valid()).collect();
    if valid.len() < 3 {
        return Err(ExperimentError::NotEnoughGroups(valid.len()));
    }
    let xs: Vec<f64> = valid.iter().map(|g| g.n_lnk_over_k).collect();
    let ys: Vec<f64> = valid.iter().map(|g| g.stats.mean).collect();
    pearson_fit(&xs, &ys)
}

pub const RESULTS_HEADER: &str =
    "graph,n,m,d,k,jump_over,engine,run_index,seed,status,rounds,wall_ms";
pub const SUMMARY_HEADER: &str =
    "graph,n,m,d,k,jump_over,engine,count,cap_hits,mean,std,min,max,q05,q95,n_lnk_over_k";

fn fmt_d(d: Option<f64>) -> String {
    match d {
        None => "none".into(),
        Some(d) => format!("{d}"),
    }
}

fn fmt_jump(jump: bool) -> &'static str {
    if jump {
        "yes"
    } else {
        "no"
    }
}

fn fmt_status(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Finished => "finished",
        RunStatus::RoundCapReached => "round_cap",
    }
}

/// Writes the canonical results file. `include_timing` fills the wall_ms
/// column with measured values; by default it is written as 0 so reruns
/// and different thread counts produce byte-identical files.
pub fn write_results_csv(
    records: &[RunRecord],
    mut out: impl Write,
    include_timing: bool,
) -> io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in records {
        let wall = if include_timing {
            format!("{:.3}", r.wall_ms)
        } else {
            "0".into()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.graph,
            r.n,
            r.m,
            fmt_d(r.d),
            r.k,
            fmt_jump(r.jump_over),
            r.engine.as_str(),
            r.run_index,
            r.seed,
            fmt_status(r.status),
            r.rounds,
            wall
        )?;
    }
    Ok(())
}

/// Reads a results file back into records.
pub fn read_results_csv(input: impl std::io::Read) -> Result<Vec<RunRecord>, ExperimentError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let bad = |line: usize, message: String| ExperimentError::ResultsParse { line, message };

    let (_, header) = lines
        .next()
        .ok_or_else(|| bad(0, "empty results file".into()))?;
    let header = header?;
    if header.trim() != RESULTS_HEADER {
        return Err(bad(1, format!("unexpected header '{header}'")));
    }

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(bad(
                line_no,
                format!("expected 12 fields, got {}", fields.len()),
            ));
        }
        let parse_num = |s: &str, what: &str| -> Result<u64, ExperimentError> {
            s.parse()
                .map_err(|_| bad(line_no, format!("bad {what} '{s}'")))
        };
        records.push(RunRecord {
            graph: fields[0].to_string(),
            n: parse_num(fields[1], "n")? as usize,
            m: parse_num(fields[2], "m")? as usize,
            d: match fields[3] {
                "none" => None,
                s => Some(
                    s.parse()
                        .map_err(|_| bad(line_no, format!("bad discretization '{s}'")))?,
                ),
            },
            k: parse_num(fields[4], "k")? as usize,
            jump_over: match fields[5] {
                "yes" => true,
                "no" => false,
                s => return Err(bad(line_no, format!("bad jump_over '{s}'"))),
            },
            engine: EngineKind::parse(fields[6])
                .map_err(|_| bad(line_no, format!("bad engine '{}'", fields[6])))?,
            run_index: parse_num(fields[7], "run_index")?,
            seed: parse_num(fields[8], "seed")?,
            status: match fields[9] {
                "finished" => RunStatus::Finished,
                "round_cap" => RunStatus::RoundCapReached,
                s => return Err(bad(line_no, format!("bad status '{s}'"))),
            },
            rounds: parse_num(fields[10], "rounds")?,
            wall_ms: fields[11]
                .parse()
                .map_err(|_| bad(line_no, format!("bad wall_ms '{}'", fields[11])))?,
        });
    }
    Ok(records)
}

/// Writes one row per configuration with its statistics and the
/// predictor column.
pub fn write_summary_csv(summaries: &[ConfigSummary], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{},{},{},{},{:.6}",
            s.graph,
            s.n,
            s.m,
            fmt_d(s.d),
            s.k,
            fmt_jump(s.jump_over),
            s.engine.as_str(),
            s.stats.count,
            s.stats.cap_hits,
            s.stats.mean,
            s.stats.std,
            s.stats.min,
            s.stats.max,
            s.stats.q05,
            s.stats.q95,
            s.n_lnk_over_k
        )?;
    }
    Ok(())
}

/// Writes per-round informed-count bands, downsampled to at most ~1000
/// rows per configuration.
pub fn write_trace_bands_csv(bands: &[TraceBand], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "graph,d,k,jump_over,round,q05,mean,q95")?;
    for band in bands {
        for row in &band.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.6},{}",
                band.graph,
                fmt_d(band.d),
                band.k,
                fmt_jump(band.jump_over),
                row.round,
                row.q05,
                row.mean,
                row.q95
            )?;
        }
    }
    Ok(())
}
