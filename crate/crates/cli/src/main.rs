use std::io;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sumest::bench::{
    load_instance, run_trials_on, write_csv, write_csv_to, AdvicePolicy, Algorithm, GeneratorKind, GeneratorSpec,
    InstanceSource, Summary, TrialConfig, TrialReport,
};
use sumest::hybrid::DEFAULT_ABORT_CONSTANT;

/// Sublinear sum estimation under proportional and hybrid sampling.
#[derive(Parser)]
#[command(name = "sumest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimator once and print the trial report as JSON.
    Estimate(EstimateArgs),
    /// Monte Carlo grid over universe sizes and accuracies.
    Bench(BenchArgs),
    /// Estimate the average degree and edge count of a graph.
    GraphEdges(GraphArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed; trial i uses streams derived from (seed, i).
    #[arg(long, env = "SUMEST_SEED", default_value_t = 1)]
    seed: u64,
    /// Seed of randomized generators.
    #[arg(long, default_value_t = 0)]
    gen_seed: u64,
    /// Multiplier of the hybrid abort budget.
    #[arg(long, default_value_t = DEFAULT_ABORT_CONSTANT)]
    abort_constant: f64,
    /// Harmonic weight threshold (default: smallest positive weight).
    #[arg(long)]
    phi: Option<f64>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Instance file with `<id> <weight>` lines.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    instance: Option<PathBuf>,
    /// Generator, e.g. `uniform:1000` or `two-level:1010,10,100,1`.
    #[arg(long)]
    gen: Option<GeneratorKind>,
    #[arg(long)]
    algo: Algorithm,
    #[arg(long)]
    eps: f64,
    /// exact-n, inflated-n:<factor> or none.
    #[arg(long)]
    advice: Option<AdvicePolicy>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    algo: Algorithm,
    /// Generator; its size is replaced by each value of --n.
    #[arg(long)]
    gen: GeneratorKind,
    /// Universe sizes (comma separated); defaults to the generator's own.
    #[arg(long, value_delimiter = ',')]
    n: Vec<u64>,
    /// Accuracies (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    #[arg(long)]
    advice: Option<AdvicePolicy>,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// CSV output; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summaries, one per grid cell; stderr if absent.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    parallel: Option<usize>,
    /// Fill the wall_time_s column.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GraphArgs {
    /// Graph file: `n <count>` header, then `u v` per edge.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    graph: Option<PathBuf>,
    /// Generator: er:<n>,<p>, star:<n> or path:<n>.
    #[arg(long)]
    gen: Option<GeneratorKind>,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallel: Option<usize>,
    #[command(flatten)]
    common: Common,
}

fn source(file: Option<PathBuf>, gen: Option<GeneratorKind>, gen_seed: u64) -> InstanceSource {
    match (file, gen) {
        (Some(path), _) => InstanceSource::File(path),
        (None, Some(kind)) => InstanceSource::Generator(GeneratorSpec::new(kind, gen_seed)),
        (None, None) => unreachable!("clap requires one of them"),
    }
}

fn configure(config: &mut TrialConfig, advice: Option<AdvicePolicy>, common: &Common) {
    if let Some(advice) = advice {
        config.advice = advice;
    }
    config.abort_constant = common.abort_constant;
    config.phi = common.phi;
}

fn emit_csv(out: Option<&PathBuf>, reports: &[TrialReport]) -> Result<()> {
    match out {
        Some(path) => write_csv(path, reports).with_context(|| format!("writing {}", path.display())),
        None => Ok(write_csv_to(io::stdout().lock(), reports)?),
    }
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let src = source(args.instance, args.gen, args.common.gen_seed);
    let mut config = TrialConfig::new(args.algo, src, args.eps, 1, args.common.seed);
    configure(&mut config, args.advice, &args.common);
    config.record_time = true;
    let instance = load_instance(&config.source, config.algorithm)?;
    let run = run_trials_on(&config, &instance)?;
    println!("{}", serde_json::to_string_pretty(&run.reports[0])?);
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    if args.algo == Algorithm::GraphEdges && !args.gen.is_graph() {
        bail!("graph-edges needs a graph generator");
    }
    let sizes = if args.n.is_empty() { vec![args.gen.size()] } else { args.n.clone() };
    let mut reports = Vec::new();
    let mut summaries: Vec<Summary> = Vec::new();
    for &n in &sizes {
        let kind = args.gen.with_size(n)?;
        let spec = GeneratorSpec::new(kind, args.common.gen_seed);
        let instance = load_instance(&spec.into(), args.algo)?;
        for &eps in &args.eps {
            let mut config = TrialConfig::new(args.algo, spec, eps, args.trials, args.common.seed);
            configure(&mut config, args.advice, &args.common);
            config.threads = args.parallel;
            config.record_time = args.timing;
            let run = run_trials_on(&config, &instance).with_context(|| format!("n = {n}, eps = {eps}"))?;
            reports.extend(run.reports);
            summaries.push(run.summary);
        }
    }
    emit_csv(args.out.as_ref(), &reports)?;
    let lines: Vec<String> = summaries.iter().map(serde_json::to_string).collect::<Result<_, _>>()?;
    match &args.summary {
        Some(path) => std::fs::write(path, lines.join("\n") + "\n")?,
        None => lines.iter().for_each(|l| eprintln!("{l}")),
    }
    Ok(())
}

fn graph_edges(args: GraphArgs) -> Result<()> {
    if let Some(kind) = &args.gen {
        if !kind.is_graph() {
            bail!("`{kind}` is not a graph generator");
        }
    }
    let src = source(args.graph, args.gen, args.common.gen_seed);
    let mut config = TrialConfig::new(Algorithm::GraphEdges, src, args.eps, args.trials, args.common.seed);
    config.threads = args.parallel;
    let instance = load_instance(&config.source, config.algorithm)?;
    let run = run_trials_on(&config, &instance)?;
    if let Some(path) = &args.out {
        emit_csv(Some(path), &run.reports)?;
    }
    if let [report] = &run.reports[..] {
        let m_hat = report.estimate * report.n as f64 / 2.0;
        let out = serde_json::json!({ "report": report, "m_hat": m_hat });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("{}", serde_json::to_string_pretty(&run.summary)?);
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Estimate(args) => estimate(args),
        Command::Bench(args) => bench(args),
        Command::GraphEdges(args) => graph_edges(args),
    }
}
