use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dragen::adt::build_cdg;
use dragen::optimize::derive_generator;
use dragen::predict::extinction_probability;
use dragen::sample::sample_spec;
use dragen::{
    empirical_stats, parse_universe, predict, verify, CostFunction, GenSpec, ProbMap,
    SearchConfig, Strategy, Universe,
};
use serde_json::{json, Value as Json};

/// Tune, inspect and run size-bounded random generators for algebraic data
/// types.
///
/// Reports go to stdout as JSON (CSV for `histogram`), diagnostics to stderr.
/// Exit status: 0 on success, 1 when the input is rejected, 2 on bad usage.
#[derive(Parser)]
#[command(name = "dragen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse declarations and summarize the universe under a root type.
    Check(UniverseArgs),
    /// Expected constructor counts for a generator of the given size.
    Predict {
        #[command(flatten)]
        universe: UniverseArgs,
        /// Generation size.
        #[arg(long, default_value_t = 10)]
        size: usize,
        /// JSON file with `{"probabilities": {...}}`; uniform when absent.
        #[arg(long)]
        probs: Option<PathBuf>,
    },
    /// Search for probabilities that minimize a cost function.
    Optimize {
        #[command(flatten)]
        universe: UniverseArgs,
        /// Generation size.
        #[arg(long, default_value_t = 10)]
        size: usize,
        /// uniform, weighted(T.C=w,...), only(...), without(...),
        /// onlyTypes(...) or withoutTypes(...).
        #[arg(long, default_value = "uniform")]
        cost: String,
        /// Probability step between neighbouring candidates.
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Stop once a move improves the cost by no more than this.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Upper bound on accepted moves.
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Print generated values, one per line.
    Sample {
        #[command(flatten)]
        gen: GenArgs,
        /// Number of values.
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        #[arg(long, value_enum, default_value_t = Format::Sexp)]
        format: Format,
    },
    /// Compare observed constructor means with their predictions.
    Verify {
        #[command(flatten)]
        gen: GenArgs,
        /// Number of samples.
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
    },
    /// Distribution of value sizes (constructor counts) as CSV.
    Histogram {
        #[command(flatten)]
        gen: GenArgs,
        /// Number of samples.
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
    },
}

#[derive(Args)]
struct UniverseArgs {
    /// File with data declarations.
    #[arg(short = 'f', long)]
    file: PathBuf,
    /// Type to generate.
    #[arg(long)]
    root: String,
}

/// Where a generator comes from: a spec file written by `optimize`, or
/// declarations plus flags.
#[derive(Args)]
struct GenArgs {
    /// Generator spec (the output of `optimize` works as is).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Declarations; required without `--spec`, checked against it otherwise.
    #[arg(short = 'f', long)]
    file: Option<PathBuf>,
    /// Root type when building a generator from declarations.
    #[arg(long)]
    root: Option<String>,
    /// Overrides the spec's size [default without a spec: 10].
    #[arg(long)]
    size: Option<usize>,
    /// Overrides the spec's strategy [default without a spec: dragen].
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Probabilities file when building from declarations.
    #[arg(long)]
    probs: Option<PathBuf>,
    /// Constructor budget for the derive strategy [default: 1000000].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    budget: Option<u64>,
    /// Random seed.
    #[arg(long, env = "DRAGEN_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Dragen,
    Megadeth,
    Derive,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Dragen => Strategy::Dragen,
            StrategyArg::Megadeth => Strategy::Megadeth,
            StrategyArg::Derive => Strategy::Derive,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Sexp,
    Json,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_universe(file: &Path, root: &str) -> Result<Universe> {
    let source = read(file)?;
    parse_universe(&source, root).with_context(|| format!("in {}", file.display()))
}

fn load_probs(path: Option<&Path>, u: &Universe) -> Result<ProbMap> {
    match path {
        Some(p) => {
            let text = read(p)?;
            ProbMap::from_json(&text, u).with_context(|| format!("in {}", p.display()))
        }
        None => Ok(dragen::uniform_probmap(u)),
    }
}

fn load_generator(args: &GenArgs) -> Result<(Universe, GenSpec)> {
    let (u, mut spec) = match &args.spec {
        Some(path) => {
            let spec = GenSpec::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))?;
            let u = match &args.file {
                Some(file) => load_universe(file, &spec.root)?,
                None => spec.universe()?,
            };
            spec.check(&u)?;
            (u, spec)
        }
        None => {
            let (Some(file), Some(root)) = (&args.file, &args.root) else {
                bail!("either --spec or both --file and --root are required");
            };
            let u = load_universe(file, root)?;
            let p = load_probs(args.probs.as_deref(), &u)?;
            let strategy = args.strategy.map_or(Strategy::Dragen, Into::into);
            let spec = GenSpec::new(&u, args.size.unwrap_or(10), strategy, &p)?;
            (u, spec)
        }
    };
    if let Some(s) = args.strategy {
        spec.strategy = s.into();
    }
    if let Some(n) = args.size {
        spec.size = n;
    }
    if args.budget.is_some() {
        spec.budget = args.budget;
    }
    spec.check(&u)?;
    Ok((u, spec))
}

fn check(args: &UniverseArgs) -> Result<Json> {
    let u = load_universe(&args.file, &args.root)?;
    let types: Vec<Json> = u
        .types()
        .iter()
        .map(|t| {
            let ctors: Vec<Json> = t
                .ctors
                .iter()
                .map(|&c| {
                    json!({
                        "name": u.qualified(c),
                        "arity": u.ctor(c).fields.len(),
                        "terminal": u.is_terminal(c),
                    })
                })
                .collect();
            json!({"name": t.name, "family": t.in_family, "constructors": ctors})
        })
        .collect();
    let family: Vec<&str> = u.family().iter().map(|&t| u.type_name(t)).collect();
    let terminals: serde_json::Map<String, Json> = u
        .family()
        .iter()
        .map(|&t| {
            let names: Vec<&str> = u.terminals_of(t).unwrap_or_default().iter().map(|&c| u.qualified(c)).collect();
            (u.type_name(t).to_string(), json!(names))
        })
        .collect();
    let cdg = build_cdg(&u)?;
    let edges: Vec<Json> = cdg
        .named_edges(&u)
        .into_iter()
        .map(|(from, to, m)| json!({"from": from, "to": to, "multiplicity": m}))
        .collect();
    Ok(json!({
        "root": u.root_name(),
        "types": types,
        "family": family,
        "terminals": terminals,
        "cdgEdges": edges,
        "declarations": u.print(),
    }))
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Check(args) => {
            writeln!(out, "{}", serde_json::to_string_pretty(&check(&args)?)?)?;
        }
        Command::Predict { universe, size, probs } => {
            let u = load_universe(&universe.file, &universe.root)?;
            let p = load_probs(probs.as_deref(), &u)?;
            let full = dragen::uniform_probmap(&u).merged_with(&p);
            let report = predict(&u, &full, size)?;
            let q = extinction_probability(&u, &full)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json(Some(&q)))?)?;
        }
        Command::Optimize { universe, size, cost, delta, epsilon, max_steps } => {
            let u = load_universe(&universe.file, &universe.root)?;
            let cost = CostFunction::parse(&u, &cost)?;
            let cfg = SearchConfig { delta, epsilon, max_steps, ..SearchConfig::default() };
            cfg.validate()?;
            let (spec, trace) = derive_generator(&u, size, &cost, &cfg)?;
            let report = predict(&u, &spec.probmap(), size)?;
            log::info!("{} moves, final cost {}", trace.moves(), trace.final_cost());
            let doc = json!({
                "spec": spec.to_json(),
                "prediction": report.to_json(None),
                "trace": trace.summary_json(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        Command::Sample { gen, count, format } => {
            let (u, spec) = load_generator(&gen)?;
            let mut exhausted = 0u64;
            for i in 0..count {
                match sample_spec(&u, &spec, gen.seed, i)?.value() {
                    Some(v) => match format {
                        Format::Sexp => writeln!(out, "{}", v.to_sexp(&u))?,
                        Format::Json => writeln!(out, "{}", v.to_json_string(&u))?,
                    },
                    None => {
                        exhausted += 1;
                        match format {
                            Format::Sexp => writeln!(out, "#budget-exhausted")?,
                            Format::Json => writeln!(out, "{{\"budgetExhausted\":true}}")?,
                        }
                    }
                }
            }
            if exhausted > 0 {
                eprintln!("{exhausted} of {count} runs exhausted the budget of {}", spec.budget());
            }
        }
        Command::Verify { gen, count } => {
            let (u, spec) = load_generator(&gen)?;
            let report = verify(&u, &spec, count, gen.seed)?;
            if !report.pass {
                eprintln!("some observations lie outside {} standard errors", report.sigmas);
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Histogram { gen, count } => {
            let (u, spec) = load_generator(&gen)?;
            let stats = empirical_stats(&u, &spec, count, gen.seed)?;
            if stats.budget_exhausted > 0 {
                eprintln!("{} runs exhausted the budget and are not counted", stats.budget_exhausted);
            }
            write!(out, "{}", stats.histogram_csv())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
