use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pgp_bench::curve::{first_below_half, success_curve};
use pgp_bench::suite::{read_program, read_samples, write_samples};
use pgp_bench::{audit, make_evidence, plot, run_suite, write_csv, write_json, write_report, BenchSuite, RunOptions};
use pgplang::baseline::{generate_random, GenConfig};
use pgplang::gof::Metric;
use pgplang::regression::{search, Mode, SearchConfig};
use pgplang::synth::{synthesize_with, RuleWeights};
use pgplang::typecheck::{check, infer, TypingContext};
use pgplang::{print_program, sample_many, DualBound, RngStream, SampleSet};
use serde::Serialize;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pgp", version, about = "Typed synthesis and regression for a small probabilistic language")]
struct Cli {
    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct SeedArg {
    /// Master seed.
    #[arg(long, env = "PGP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Infer a program's type, or check it against --target.
    Typecheck {
        file: PathBuf,
        #[arg(long)]
        target: Option<DualBound>,
    },
    /// Draw samples from a program, one per line.
    Sample {
        file: PathBuf,
        #[arg(short, default_value_t = 10_000)]
        n: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Synthesize programs of a given type.
    Synth {
        #[arg(long, default_value = "«∅,[-inf,inf]»")]
        target: DualBound,
        #[arg(long)]
        budget: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Number of programs; program i uses substream i.
        #[arg(short, default_value_t = 1)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// The type-agnostic random generator.
    Baseline {
        #[command(subcommand)]
        command: BaselineCommand,
    },
    /// Search for a program that reproduces some evidence.
    Regress(RegressArgs),
    /// Benchmark suites.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BaselineCommand {
    /// Generate random programs.
    Gen {
        #[arg(long)]
        budget: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(short, default_value_t = 1)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fraction of random programs that typecheck, per budget.
    SuccessCurve(CurveArgs),
}

#[derive(Args)]
struct CurveArgs {
    /// Budgets as `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "1..40")]
    budgets: String,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(short, long, default_value = "curve.csv")]
    output: PathBuf,
    /// Also write an SVG chart.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct RegressArgs {
    #[arg(long)]
    evidence: PathBuf,
    #[arg(long, default_value = "typed")]
    mode: Mode,
    #[arg(long, default_value_t = 31)]
    budget: usize,
    /// Time limit in seconds.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value = "ks")]
    metric: Metric,
    #[arg(long, default_value_t = 1000)]
    n_candidate: usize,
    #[arg(long, default_value = "«∅,[-inf,inf]»")]
    target: DualBound,
    /// Request «∅,[min,max]» of the evidence instead of --target.
    #[arg(long)]
    target_from_evidence: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Run every (test, seed, mode, budget) cell of a suite.
    Run {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the suite's budgets.
        #[arg(long)]
        budgets: Option<String>,
        /// Comma list of modes.
        #[arg(long, default_value = "typed,baseline")]
        modes: String,
        /// Override the suite's seeds (`a..b` or comma list).
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        time: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Write one evidence file per test.
    Evidence {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Same as `baseline success-curve`.
    SuccessCurve(CurveArgs),
}

/// Parses `a..b` (inclusive), `a..=b` or `a,b,c`.
fn parse_list(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let b = b.trim_start_matches('=');
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty range {s:?}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',').filter(|x| !x.trim().is_empty()).map(|x| Ok(x.trim().parse()?)).collect()
}

fn parse_budgets(s: &str) -> Result<Vec<usize>> {
    Ok(parse_list(s).with_context(|| format!("bad budget list {s:?}"))?.into_iter().map(|b| b as usize).collect())
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn programs_text(programs: impl Iterator<Item = String>) -> String {
    let mut text = programs.collect::<Vec<_>>().join("\n\n");
    text.push('\n');
    text
}

/// `out.json` -> `out.meta.json`
fn metadata_path(p: &Path) -> PathBuf {
    let stem = p.file_stem().unwrap_or_default().to_string_lossy();
    p.with_file_name(format!("{stem}.meta.json"))
}

#[derive(Serialize)]
struct RegressOutput<'a> {
    version: u32,
    evidence: String,
    evidence_points: usize,
    config: &'a SearchConfig,
    result: &'a pgplang::SearchResult,
}

#[derive(Serialize)]
struct RegressMetadata<'a> {
    finished_at_unix: f64,
    elapsed_seconds: f64,
    iteration_timestamps: &'a [f64],
}

fn curve(args: &CurveArgs) -> Result<()> {
    let budgets = parse_budgets(&args.budgets)?;
    let rows = success_curve(&budgets, args.trials, args.seed.seed);
    write_csv(&args.output, &rows)?;
    if let Some(p) = &args.plot {
        plot::success_plot(&rows, p)?;
    }
    match first_below_half(&rows) {
        Some(b) => eprintln!("success rate first drops below 0.5 at budget {b}"),
        None => eprintln!("success rate stays at or above 0.5"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    match cli.command {
        Command::Typecheck { file, target } => {
            let e = read_program(&file)?;
            let ctx = TypingContext::new();
            match target {
                None => match infer(&ctx, &e) {
                    Ok(t) => println!("{t}"),
                    Err(err) => {
                        println!("ill-typed: {err}");
                        return Ok(ExitCode::FAILURE);
                    }
                },
                Some(t) => match check(&ctx, &e, &t) {
                    Ok(true) => println!("ok: {} <: {t}", infer(&ctx, &e)?),
                    Ok(false) => {
                        println!("not a subtype: {} is not <: {t}", infer(&ctx, &e)?);
                        return Ok(ExitCode::FAILURE);
                    }
                    Err(err) => {
                        println!("ill-typed: {err}");
                        return Ok(ExitCode::FAILURE);
                    }
                },
            }
        }
        Command::Sample { file, n, seed, output } => {
            let e = read_program(&file)?;
            let (s, errors) = sample_many(&e, n, &mut RngStream::new(seed.seed));
            let s = SampleSet::new(s.into_values(), file.display().to_string());
            match &output {
                Some(p) => write_samples(p, &s)?,
                None => s.write_to(io::stdout().lock())?,
            }
            if errors > 0 {
                eprintln!("{errors} of {n} executions raised a runtime error");
            }
        }
        Command::Synth { target, budget, seed, n, output } => {
            let master = RngStream::new(seed.seed);
            let ctx = TypingContext::new();
            let weights = RuleWeights::default();
            let programs = (0..n as u64)
                .map(|i| synthesize_with(&ctx, &target, budget, &weights, &mut master.substream(i)).map(|e| print_program(&e)))
                .collect::<Result<Vec<_>, _>>()?;
            emit(output.as_deref(), &programs_text(programs.into_iter()))?;
        }
        Command::Baseline { command: BaselineCommand::Gen { budget, seed, n, output } } => {
            let master = RngStream::new(seed.seed);
            let cfg = GenConfig::with_budget(budget);
            let programs = (0..n as u64).map(|i| print_program(&generate_random(&cfg, &mut master.substream(i))));
            emit(output.as_deref(), &programs_text(programs))?;
        }
        Command::Baseline { command: BaselineCommand::SuccessCurve(args) } => curve(&args)?,
        Command::Bench { command: BenchCommand::SuccessCurve(args) } => curve(&args)?,
        Command::Regress(a) => {
            let evidence = read_samples(&a.evidence)?;
            let mut cfg = SearchConfig::new(a.mode, a.budget, evidence);
            cfg.time_limit = a.time;
            cfg.max_iterations = a.iterations;
            if a.time.is_none() && a.iterations.is_none() {
                cfg.max_iterations = Some(1000);
            }
            cfg.seed = a.seed.seed;
            cfg.metric = a.metric;
            cfg.n_candidate = a.n_candidate;
            cfg.target = a.target;
            cfg.target_from_evidence = a.target_from_evidence;
            let result = search(&cfg)?;
            let out = RegressOutput {
                version: 1,
                evidence: a.evidence.display().to_string(),
                evidence_points: cfg.evidence.len(),
                config: &cfg,
                result: &result,
            };
            let meta = RegressMetadata {
                finished_at_unix: pgp_bench::unix_time(),
                elapsed_seconds: result.elapsed.as_secs_f64(),
                iteration_timestamps: &result.timestamps,
            };
            match &a.output {
                Some(p) => {
                    write_json(p, &out)?;
                    write_json(&metadata_path(p), &meta)?;
                }
                None => println!("{}", serde_json::to_string_pretty(&out)?),
            }
            eprintln!("best score {} after {} iterations:\n{}", result.best_score, result.iterations, result.best_program);
        }
        Command::Bench { command: BenchCommand::Evidence { suite, out, seed } } => {
            let suite = BenchSuite::load(&suite)?;
            let outcome = make_evidence(&suite, &out, seed.seed)?;
            for (id, why) in &outcome.skipped {
                eprintln!("skipped {id}: {why}");
            }
            eprintln!("wrote {} evidence files to {}", outcome.written.len(), out.display());
        }
        Command::Bench { command: BenchCommand::Run { suite, out, budgets, modes, seeds, time, iterations } } => {
            let mut s = BenchSuite::load(&suite)?;
            if let Some(list) = seeds {
                s.seeds = parse_list(&list)?;
            }
            let mut opts = RunOptions::from_suite(&s);
            opts.threads = cli.threads;
            if let Some(b) = budgets {
                opts.budgets = parse_budgets(&b)?;
            }
            opts.modes = modes.split(',').map(|m| m.trim().parse()).collect::<Result<_, _>>()?;
            if time.is_some() || iterations.is_some() {
                opts.time_limit = time;
                opts.max_iterations = iterations;
            }
            if opts.time_limit.is_none() && opts.max_iterations.is_none() {
                bail!("the suite sets no time limit or iteration limit; pass --time or --iterations");
            }
            let report = run_suite(&s, &opts)?;
            audit(&report)?;
            write_report(&report, &s.source_text, &out)?;
            for f in &report.failures {
                eprintln!("failed {}: {}", f.test, f.error);
            }
            for (b, t) in &report.aggregates.by_budget {
                eprintln!(
                    "budget {b}: typed wins {}/{} cells ({:.1}%), {} ties",
                    t.typed_wins,
                    t.cells,
                    100.0 * t.typed_win_fraction(),
                    t.ties
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
