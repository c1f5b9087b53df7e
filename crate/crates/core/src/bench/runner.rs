//! Trial runner, per-trial reports, CSV output and summaries.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use tempfile::NamedTempFile;

use super::generator::{generate_instance, Generated, GeneratorSpec};
use crate::error::{invalid, Error, Result};
use crate::graph::{degree_sampler, estimate_avg_degree, Graph};
use crate::hybrid::{
    coupon_collect, harmonic_estimate, hybrid_estimate, no_advice_hybrid_estimate, set_size_estimate,
    HarmonicConfig, DEFAULT_ABORT_CONSTANT,
};
use crate::proportional::{no_advice_prop_estimate, prop_estimate};
use crate::rng::{stream, Lane};
use crate::sampling::{SamplerHandle, WeightedInstance};
use crate::stats::{percentile, wilson_interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Prop,
    NoAdviceProp,
    Hybrid,
    NoAdviceHybrid,
    Harmonic,
    Coupon,
    SetSize,
    GraphEdges,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Self::Prop,
        Self::NoAdviceProp,
        Self::Hybrid,
        Self::NoAdviceHybrid,
        Self::Harmonic,
        Self::Coupon,
        Self::SetSize,
        Self::GraphEdges,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Self::Prop => "prop",
            Self::NoAdviceProp => "no-advice-prop",
            Self::Hybrid => "hybrid",
            Self::NoAdviceHybrid => "no-advice-hybrid",
            Self::Harmonic => "harmonic",
            Self::Coupon => "coupon",
            Self::SetSize => "set-size",
            Self::GraphEdges => "graph-edges",
        }
    }

    fn uses_advice(&self) -> bool {
        matches!(self, Self::Prop | Self::Hybrid | Self::Harmonic)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| invalid(format!("unknown algorithm `{s}`")))
    }
}

/// What the estimator is told about the universe.
///
/// `prop` and `hybrid` receive the size advice `n` or `⌈f·n⌉`. `harmonic`
/// receives the average-weight advice `W/n` or `f·W/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdvicePolicy {
    ExactN,
    InflatedN(f64),
    None,
}

impl AdvicePolicy {
    fn factor(&self) -> Option<f64> {
        match *self {
            Self::ExactN => Some(1.0),
            Self::InflatedN(f) => Some(f),
            Self::None => None,
        }
    }
}

impl fmt::Display for AdvicePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ExactN => f.write_str("exact-n"),
            Self::InflatedN(x) => write!(f, "inflated-n:{x}"),
            Self::None => f.write_str("none"),
        }
    }
}

/// Accepts `exact-n`, `inflated-n:<factor>` and `none`.
impl FromStr for AdvicePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-n" => Ok(Self::ExactN),
            "none" => Ok(Self::None),
            _ => {
                let factor = s
                    .strip_prefix("inflated-n:")
                    .and_then(|f| f.parse::<f64>().ok())
                    .ok_or_else(|| invalid(format!("unknown advice policy `{s}`")))?;
                if !(factor >= 1.0 && factor.is_finite()) {
                    return Err(invalid(format!("inflation factor must be at least 1, got {factor}")));
                }
                Ok(Self::InflatedN(factor))
            }
        }
    }
}

/// Where the instance of a run comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Generator(GeneratorSpec),
    /// An instance file, or a graph file for `graph-edges`.
    File(PathBuf),
}

impl fmt::Display for InstanceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Generator(spec) => spec.kind.fmt(f),
            Self::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

impl From<GeneratorSpec> for InstanceSource {
    fn from(spec: GeneratorSpec) -> Self {
        Self::Generator(spec)
    }
}

/// Loads or generates the instance a run of `algorithm` needs.
pub fn load_instance(source: &InstanceSource, algorithm: Algorithm) -> Result<Generated> {
    match source {
        InstanceSource::Generator(spec) => generate_instance(spec),
        InstanceSource::File(path) if algorithm == Algorithm::GraphEdges => Ok(Generated::Graph(Graph::load(path)?)),
        InstanceSource::File(path) => Ok(Generated::Weights(WeightedInstance::load(path)?)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub algorithm: Algorithm,
    pub source: InstanceSource,
    pub eps: f64,
    pub advice: AdvicePolicy,
    pub trials: u64,
    pub master_seed: u64,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    /// Multiplier of the hybrid abort budget.
    pub abort_constant: f64,
    /// Harmonic weight threshold; defaults to the smallest positive weight.
    pub phi: Option<f64>,
    /// Fill the `wall_time_s` column. Off by default so that reruns produce
    /// identical files.
    pub record_time: bool,
}

impl TrialConfig {
    pub fn new(
        algorithm: Algorithm,
        source: impl Into<InstanceSource>,
        eps: f64,
        trials: u64,
        master_seed: u64,
    ) -> Self {
        let advice = if algorithm.uses_advice() {
            AdvicePolicy::ExactN
        } else {
            AdvicePolicy::None
        };
        Self {
            algorithm,
            source: source.into(),
            eps,
            advice,
            trials,
            master_seed,
            threads: None,
            abort_constant: DEFAULT_ABORT_CONSTANT,
            phi: None,
            record_time: false,
        }
    }
}

/// One trial's outcome. `prop_draws`/`unif_draws` count oracle calls; on
/// graphs they equal the edge and vertex query counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub algorithm: Algorithm,
    pub n: u64,
    pub eps: f64,
    pub advice: String,
    pub trial: u64,
    pub seed: u64,
    pub estimate: f64,
    pub true_value: f64,
    pub prop_draws: u64,
    pub unif_draws: u64,
    pub vertex_queries: u64,
    pub edge_queries: u64,
    pub degree_queries: u64,
    pub success: bool,
    pub aborted: bool,
    pub wall_time_s: Option<f64>,
}

impl TrialReport {
    pub fn draws(&self) -> u64 {
        self.prop_draws + self.unif_draws
    }
}

pub const CSV_HEADER: [&str; 16] = [
    "algorithm",
    "n",
    "eps",
    "advice",
    "trial",
    "seed",
    "estimate",
    "true_value",
    "prop_draws",
    "unif_draws",
    "vertex_queries",
    "edge_queries",
    "degree_queries",
    "success",
    "aborted",
    "wall_time_s",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub source: String,
    pub n: u64,
    pub eps: f64,
    pub advice: String,
    pub trials: u64,
    pub failures: u64,
    pub failure_rate: f64,
    /// 95% Wilson interval of the failure rate.
    pub failure_ci: (f64, f64),
    pub aborts: u64,
    pub abort_rate: f64,
    pub mean_draws: f64,
    pub p95_draws: Option<u64>,
    pub max_draws: Option<u64>,
}

impl Summary {
    pub fn from_reports(config: &TrialConfig, n: u64, reports: &[TrialReport]) -> Self {
        let trials = reports.len() as u64;
        let failures = reports.iter().filter(|r| !r.success).count() as u64;
        let aborts = reports.iter().filter(|r| r.aborted).count() as u64;
        let draws: Vec<u64> = reports.iter().map(TrialReport::draws).collect();
        let rate = |k: u64| if trials == 0 { 0.0 } else { k as f64 / trials as f64 };
        let total: u128 = draws.iter().map(|&d| d as u128).sum();
        Summary {
            algorithm: config.algorithm,
            source: config.source.to_string(),
            n,
            eps: config.eps,
            advice: effective_advice(config),
            trials,
            failures,
            failure_rate: rate(failures),
            failure_ci: wilson_interval(failures, trials),
            aborts,
            abort_rate: rate(aborts),
            mean_draws: if trials == 0 { 0.0 } else { total as f64 / trials as f64 },
            p95_draws: percentile(&draws, 0.95),
            max_draws: draws.iter().copied().max(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialRun {
    pub reports: Vec<TrialReport>,
    pub summary: Summary,
}

fn effective_advice(config: &TrialConfig) -> String {
    if config.algorithm.uses_advice() {
        config.advice.to_string()
    } else {
        AdvicePolicy::None.to_string()
    }
}

/// Loads the instance of `config` and runs its trials.
pub fn run_trials(config: &TrialConfig) -> Result<TrialRun> {
    let generated = load_instance(&config.source, config.algorithm)?;
    run_trials_on(config, &generated)
}

/// Runs the trials of `config` on an already loaded instance.
///
/// Trial `i` draws from the streams of `(master_seed, i)`, so the reports do
/// not depend on the thread count. Reports come back in trial order.
pub fn run_trials_on(config: &TrialConfig, generated: &Generated) -> Result<TrialRun> {
    let advice = effective_advice(config);
    if config.algorithm.uses_advice() && config.advice == AdvicePolicy::None {
        return Err(invalid(format!("{} requires advice", config.algorithm)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| invalid(e.to_string()))?;
    let reports = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let start = Instant::now();
                let mut report = match generated {
                    Generated::Weights(inst) => weight_trial(config, inst, trial),
                    Generated::Graph(g) => graph_trial(config, g, trial),
                }?;
                report.advice = advice.clone();
                if config.record_time {
                    report.wall_time_s = Some(start.elapsed().as_secs_f64());
                }
                Ok(report)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = Summary::from_reports(config, generated.size(), &reports);
    Ok(TrialRun { reports, summary })
}

fn blank_report(config: &TrialConfig, n: u64, trial: u64) -> TrialReport {
    TrialReport {
        algorithm: config.algorithm,
        n,
        eps: config.eps,
        advice: String::new(),
        trial,
        seed: config.master_seed,
        estimate: f64::NAN,
        true_value: f64::NAN,
        prop_draws: 0,
        unif_draws: 0,
        vertex_queries: 0,
        edge_queries: 0,
        degree_queries: 0,
        success: false,
        aborted: false,
        wall_time_s: None,
    }
}

fn within(estimate: f64, truth: f64, eps: f64) -> bool {
    (estimate - truth).abs() <= eps * truth
}

fn weight_trial(config: &TrialConfig, inst: &WeightedInstance, trial: u64) -> Result<TrialReport> {
    let n = inst.len() as u64;
    let eps = config.eps;
    let total = inst.total();
    let mut oracle = SamplerHandle::new(inst, stream(config.master_seed, trial, Lane::Oracle));
    let mut coins = stream(config.master_seed, trial, Lane::Estimator);
    let factor = config.advice.factor().unwrap_or(1.0);
    let mut report = blank_report(config, n, trial);
    report.true_value = total;

    match config.algorithm {
        Algorithm::Prop => {
            report.estimate = prop_estimate(&mut oracle, factor * n as f64, eps)?;
        }
        Algorithm::NoAdviceProp => {
            report.estimate = no_advice_prop_estimate(&mut oracle, eps, &mut coins)?.w_hat;
        }
        Algorithm::Hybrid => {
            let advised = (factor * n as f64).ceil() as u64;
            let trace = hybrid_estimate(&mut oracle, advised, eps, config.abort_constant)?;
            report.aborted = trace.aborted();
            report.estimate = trace.w_hat.unwrap_or(f64::NAN);
        }
        Algorithm::NoAdviceHybrid => {
            report.estimate = no_advice_hybrid_estimate(&mut oracle, eps)?.w_hat;
        }
        Algorithm::Harmonic => {
            let phi = match config.phi {
                Some(phi) => phi,
                None => inst.weights().iter().copied().filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min),
            };
            let mean = total / n as f64;
            let cfg = HarmonicConfig::new(eps, factor * mean, phi)?;
            report.true_value = mean;
            report.estimate = harmonic_estimate(&mut oracle, &cfg)?.theta_hat;
        }
        Algorithm::Coupon => {
            report.estimate = coupon_collect(&mut oracle)?.sum;
        }
        Algorithm::SetSize => {
            report.true_value = n as f64;
            report.estimate = set_size_estimate(&mut oracle)?.n_hat as f64;
        }
        Algorithm::GraphEdges => {
            return Err(invalid("graph-edges needs a graph generator"));
        }
    }

    report.success = !report.aborted
        && match config.algorithm {
            Algorithm::Coupon => report.estimate == report.true_value,
            Algorithm::SetSize => report.estimate >= report.true_value,
            _ => within(report.estimate, report.true_value, eps),
        };
    let counters = oracle.counters();
    report.prop_draws = counters.proportional;
    report.unif_draws = counters.uniform;
    Ok(report)
}

fn graph_trial(config: &TrialConfig, graph: &Graph, trial: u64) -> Result<TrialReport> {
    if config.algorithm != Algorithm::GraphEdges {
        return Err(invalid(format!("{} needs a weighted instance generator", config.algorithm)));
    }
    let mut oracle = degree_sampler(graph, stream(config.master_seed, trial, Lane::Oracle));
    let trace = estimate_avg_degree(&mut oracle, config.eps)?;
    let q = oracle.counters();
    let mut report = blank_report(config, graph.vertex_count() as u64, trial);
    report.true_value = graph.average_degree();
    report.estimate = trace.d_hat;
    report.success = within(trace.d_hat, report.true_value, config.eps);
    report.prop_draws = q.edge;
    report.unif_draws = q.vertex;
    report.vertex_queries = q.vertex;
    report.edge_queries = q.edge;
    report.degree_queries = q.degree;
    Ok(report)
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the header and one row per report.
pub fn write_csv_to<W: Write>(out: W, reports: &[TrialReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record([
            r.algorithm.to_string(),
            r.n.to_string(),
            float(r.eps),
            r.advice.clone(),
            r.trial.to_string(),
            r.seed.to_string(),
            float(r.estimate),
            float(r.true_value),
            r.prop_draws.to_string(),
            r.unif_draws.to_string(),
            r.vertex_queries.to_string(),
            r.edge_queries.to_string(),
            r.degree_queries.to_string(),
            r.success.to_string(),
            r.aborted.to_string(),
            r.wall_time_s.map(float).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_csv(path: impl AsRef<Path>, reports: &[TrialReport]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    write_csv_to(&mut tmp, reports)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Reads a CSV produced by [`write_csv`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<TrialReport>> {
    let text = fs::read_to_string(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(invalid("unexpected CSV header"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |field: &str| Error::Parse {
            line: i + 2,
            msg: format!("invalid {field}"),
        };
        let get = |k: usize| rec.get(k).unwrap_or("");
        let num = |k: usize| get(k).parse::<u64>().map_err(|_| bad(CSV_HEADER[k]));
        let real = |k: usize| get(k).parse::<f64>().map_err(|_| bad(CSV_HEADER[k]));
        let flag = |k: usize| get(k).parse::<bool>().map_err(|_| bad(CSV_HEADER[k]));
        out.push(TrialReport {
            algorithm: get(0).parse()?,
            n: num(1)?,
            eps: real(2)?,
            advice: get(3).to_owned(),
            trial: num(4)?,
            seed: num(5)?,
            estimate: real(6)?,
            true_value: real(7)?,
            prop_draws: num(8)?,
            unif_draws: num(9)?,
            vertex_queries: num(10)?,
            edge_queries: num(11)?,
            degree_queries: num(12)?,
            success: flag(13)?,
            aborted: flag(14)?,
            wall_time_s: if get(15).is_empty() { None } else { Some(real(15)?) },
        });
    }
    Ok(out)
}
