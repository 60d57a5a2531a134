use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dualprop::harness::{
    run_experiment, sweep, write_sweep, Algorithm, DistributionSource, ExperimentConfig,
    GeneratorSpec, NoiseKind, NoiseSpec, ReportFormat, SweepAxis,
};
use dualprop::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dualprop",
    version,
    about = "Seeded experiments for distribution testing under dual access"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test D against the uniform distribution.
    TestUniformity(Common),
    /// Test D against a known reference (--reference, uniform by default).
    TestIdentity(Common),
    /// Test two unknown distributions (D and --reference) for equality.
    TestCloseness(Common),
    /// Tolerant tester for tv(D, reference) <= eps1 versus >= eps2.
    TolerantL1(Common),
    /// Additive entropy estimate under SAMP + EVAL.
    EstimateEntropy(Common),
    /// Entropy of a monotone distribution under SAMP + CEVAL.
    EstimateEntropyMonotone(Common),
    /// Support size up to an additive eps * n.
    EstimateSupport(Common),
    /// Write a generated distribution (and its certificate, if any).
    GenInstance(GenArgs),
    /// Run one experiment per value of a parameter axis.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct Source {
    /// Domain size for generated distributions.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Read D from a JSON or .bin file instead of generating it.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Distribution family used when --dist is absent.
    #[arg(long, default_value = "uniform")]
    family: String,
    /// Family parameter as key=value (repeatable), e.g. --param k=100.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Seed for randomized families.
    #[arg(long, default_value_t = 0)]
    family_seed: u64,
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    source: Source,
    /// Reference distribution file (D* or D2); uniform when absent.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Multiplicative EVAL noise level; switches to the robust variants.
    #[arg(long)]
    noise: Option<f64>,
    /// random, inflate or deflate.
    #[arg(long, default_value = "random")]
    noise_mode: String,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record wall-clock times (makes reports non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    eps: Option<f64>,
    /// Output path for the distribution; the certificate goes to <stem>.meta.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Algorithm name, e.g. test-uniformity.
    #[arg(long)]
    algorithm: String,
    /// epsilon, delta or n.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v
        .parse::<f64>()
        .map_err(|e| format!("bad value for `{k}`: {e}"))?;
    Ok((k.to_string(), v))
}

fn generator(source: &Source, eps: Option<f64>) -> GeneratorSpec {
    let mut spec = GeneratorSpec::new(&source.family, source.n).with_seed(source.family_seed);
    for (k, v) in &source.params {
        spec = spec.with(k, *v);
    }
    if let Some(e) = eps {
        spec.params.entry("epsilon".into()).or_insert(e);
    }
    spec
}

fn config(algorithm: Algorithm, c: &Common) -> Result<ExperimentConfig> {
    let source = match &c.source.dist {
        Some(path) => DistributionSource::File(path.clone()),
        None => DistributionSource::Generator(generator(&c.source, c.eps)),
    };
    let mut cfg = ExperimentConfig::new(algorithm, source);
    cfg.reference = c.reference.clone().map(DistributionSource::File);
    cfg.epsilon = c.eps;
    cfg.eps1 = c.eps1;
    cfg.eps2 = c.eps2;
    cfg.delta = c.delta;
    cfg.trials = c.trials;
    cfg.master_seed = c.seed;
    cfg.timing = c.timing;
    if let Some(tau) = c.noise {
        cfg.noise = Some(NoiseSpec {
            tau,
            kind: c.noise_mode.parse::<NoiseKind>()?,
        });
    }
    Ok(cfg)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn experiment(algorithm: Algorithm, c: &Common) -> Result<()> {
    let format: ReportFormat = c.format.parse()?;
    let report = run_experiment(&config(algorithm, c)?)?;
    let mut out = output(&c.out)?;
    report.write(&mut out, format)?;
    out.flush()?;
    Ok(())
}

fn gen_instance(g: &GenArgs) -> Result<()> {
    let spec = generator(&g.source, g.eps);
    let (dist, instance) = spec.instance()?;
    match instance {
        Some(inst) => {
            inst.write(&g.out)?;
            println!("{}", serde_json::to_string(&inst.certificate)?);
        }
        None => dist.write_json(&g.out)?,
    }
    Ok(())
}

fn run_sweep(s: &SweepArgs) -> Result<()> {
    let algorithm: Algorithm = s.algorithm.parse()?;
    let axis: SweepAxis = s.axis.parse()?;
    let format: ReportFormat = s.common.format.parse()?;
    let rows = sweep(&config(algorithm, &s.common)?, axis, &s.values)?;
    let mut out = output(&s.common.out)?;
    write_sweep(&rows, &mut out, format)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::TestUniformity(c) => experiment(Algorithm::TestUniformity, c),
        Command::TestIdentity(c) => experiment(Algorithm::TestIdentity, c),
        Command::TestCloseness(c) => experiment(Algorithm::TestCloseness, c),
        Command::TolerantL1(c) => experiment(Algorithm::TolerantL1, c),
        Command::EstimateEntropy(c) => experiment(Algorithm::EstimateEntropy, c),
        Command::EstimateEntropyMonotone(c) => experiment(Algorithm::EstimateEntropyMonotone, c),
        Command::EstimateSupport(c) => experiment(Algorithm::EstimateSupport, c),
        Command::GenInstance(g) => gen_instance(g),
        Command::Sweep(s) => run_sweep(s),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
