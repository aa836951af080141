use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mtlo::harness::bench::{bench_one, BenchRow, BenchSpec};
use mtlo::harness::generate::{generate, GenSpec, Profile, COMPONENT};
use mtlo::harness::run::{check_messages, compare_messages, read_log, run_stream, run_stream_pipelined, Sinks};
use mtlo::harness::{shuffle, ShuffleSpec};
use mtlo::ingestion::{Line, Message};
use mtlo::{Compiled, MonitorConfig, Verdict};

#[derive(Parser)]
#[command(name = "mtlo", version, about = "Out-of-order monitoring of metric temporal properties with freeze quantifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic in-order log for a benchmark profile.
    Gen {
        #[arg(long)]
        profile: Profile,
        /// Approximate events per second.
        #[arg(long, default_value_t = 100)]
        rate: u32,
        /// Log length in seconds.
        #[arg(long, default_value_t = 60)]
        duration: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Probability that a pending obligation is deliberately broken.
        #[arg(long, default_value_t = 0.05)]
        violation_fraction: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reorder a log by normally distributed delivery delays.
    Shuffle {
        #[arg(long, default_value_t = 10.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monitor a log, printing verdicts as they are settled.
    Monitor {
        #[command(flatten)]
        formula: FormulaArgs,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Print graph statistics and throughput to stderr at the end.
        #[arg(long)]
        stats: bool,
        /// Print every transformation to stderr.
        #[arg(long)]
        trace: bool,
        /// Run ingestion on a separate thread.
        #[arg(long)]
        pipelined: bool,
        /// Compare the graph against the reference evaluator after every step.
        #[arg(long)]
        check_invariants: bool,
    },
    /// Evaluate the finished log with the reference evaluator.
    Check {
        #[command(flatten)]
        formula: FormulaArgs,
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Replay a log, checking the monitor against the reference evaluator after every step.
    Compare {
        #[command(flatten)]
        formula: FormulaArgs,
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Time generation-independent monitoring over profiles, rates and delay deviations.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "P1")]
        profile: Vec<Profile>,
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        rates: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,5,10")]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 60)]
        duration: u32,
        #[arg(long, default_value_t = 10.0)]
        mu: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Monitor the policy under an outer unbounded ALWAYS.
        #[arg(long)]
        outer_always: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct FormulaArgs {
    /// File holding the formula text.
    #[arg(long)]
    formula: Option<PathBuf>,
    /// Formula text given inline.
    #[arg(long)]
    expr: Option<String>,
    /// A built-in benchmark policy.
    #[arg(long = "policy")]
    policy: Option<Profile>,
    /// With --policy, wrap the policy in an outer unbounded ALWAYS.
    #[arg(long, requires = "policy")]
    outer_always: bool,
}

impl FormulaArgs {
    fn compile(&self) -> Result<Compiled> {
        let text = match (&self.formula, &self.expr, self.policy) {
            (Some(path), _, _) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            (_, Some(text), _) => text.clone(),
            (_, _, Some(p)) => p.formula(self.outer_always),
            _ => bail!("no formula given"),
        };
        Compiled::parse(text.trim()).map_err(|e| anyhow::anyhow!("formula: {e}"))
    }
}

fn reader(path: &Option<PathBuf>) -> Result<Box<dyn BufRead + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?)),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_log(out: &mut dyn Write, components: Option<Vec<String>>, log: Vec<Message>) -> Result<()> {
    if let Some(components) = components {
        writeln!(out, "{}", Line::Config { components }.to_json())?;
    }
    for m in log {
        writeln!(out, "{}", m.to_json())?;
    }
    out.flush()?;
    Ok(())
}

fn load(path: &Option<PathBuf>) -> Result<(Option<Vec<String>>, Vec<Message>)> {
    Ok(read_log(reader(path)?)?)
}

fn print_verdicts(verdicts: impl IntoIterator<Item = Verdict>) -> Result<()> {
    let mut out = BufWriter::new(io::stdout());
    for v in verdicts {
        writeln!(out, "{}", v.to_json())?;
    }
    out.flush()?;
    Ok(())
}

fn monitor(
    formula: &FormulaArgs,
    input: &Option<PathBuf>,
    stats: bool,
    trace: bool,
    pipelined: bool,
    check_invariants: bool,
) -> Result<()> {
    let f = formula.compile()?;
    let config = MonitorConfig { check_invariants, ..MonitorConfig::default() };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut failed: Option<io::Error> = None;
    let mut on_verdict = |v: &Verdict| {
        if failed.is_none() {
            if let Err(e) = writeln!(out, "{}", v.to_json()) {
                failed = Some(e);
            }
        }
    };
    let stderr = io::stderr();
    let mut on_step = |t: &mtlo::Transformation| {
        let _ = writeln!(stderr.lock(), "{}", t.to_json());
    };
    let sinks = Sinks { verdict: &mut on_verdict, trace: if trace { Some(&mut on_step) } else { None } };
    let input = reader(input)?;
    let summary = if pipelined { run_stream_pipelined(f, input, config, sinks)? } else { run_stream(f, input, config, sinks)? };
    if let Some(e) = failed {
        return Err(e.into());
    }
    out.flush()?;
    if stats {
        let mut report = summary.stats.to_json();
        report["messages"] = summary.messages.into();
        report["seconds"] = summary.wall.as_secs_f64().into();
        report["events_per_second"] = summary.events_per_second().into();
        report["verdicts"] = summary.verdicts.len().into();
        eprintln!("{report}");
    }
    Ok(())
}

fn compare(formula: &FormulaArgs, input: &Option<PathBuf>) -> Result<bool> {
    let f = formula.compile()?;
    let (components, log) = load(input)?;
    let report = compare_messages(&f, components, &log, MonitorConfig::default())?;
    let mut out = BufWriter::new(io::stdout());
    for m in &report.mismatches {
        writeln!(out, "{m}")?;
    }
    for e in &report.errors {
        writeln!(out, "error: {e}")?;
    }
    writeln!(
        out,
        "{} transformations, {} soundness and {} completeness violations, {} errors",
        report.steps,
        report.count(mtlo::harness::MismatchKind::Soundness),
        report.count(mtlo::harness::MismatchKind::Completeness),
        report.errors.len()
    )?;
    out.flush()?;
    Ok(report.is_clean())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    profiles: &[Profile],
    rates: &[u32],
    sigmas: &[f64],
    duration: u32,
    mu: f64,
    seed: u64,
    outer_always: bool,
    csv: &Option<PathBuf>,
) -> Result<()> {
    let spec = BenchSpec { duration, mu, seed, outer_always };
    let mut out = writer(csv)?;
    writeln!(out, "{}", BenchRow::CSV_HEADER)?;
    for &p in profiles {
        for &rate in rates {
            for &sigma in sigmas {
                let row = bench_one(p, rate, sigma, &spec)?;
                writeln!(out, "{}", row.csv())?;
                out.flush()?;
                if csv.is_some() {
                    eprintln!("{}", row.csv());
                }
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { profile, rate, duration, seed, violation_fraction, out } => {
            if !(0.0..=1.0).contains(&violation_fraction) {
                bail!("--violation-fraction must lie in [0, 1]");
            }
            let log = generate(&GenSpec { profile, rate, duration, seed, violation_fraction });
            write_log(&mut *writer(&out)?, Some(vec![COMPONENT.to_string()]), log)?;
        }
        Command::Shuffle { mu, sigma, seed, input, out } => {
            if sigma < 0.0 {
                bail!("--sigma must be nonnegative");
            }
            let (components, log) = load(&input)?;
            let log = shuffle(&log, &ShuffleSpec { mu, sigma, seed });
            write_log(&mut *writer(&out)?, components, log)?;
        }
        Command::Monitor { formula, input, stats, trace, pipelined, check_invariants } => {
            monitor(&formula, &input, stats, trace, pipelined, check_invariants)?;
        }
        Command::Check { formula, input } => {
            let f = formula.compile()?;
            let (components, log) = load(&input)?;
            let verdicts = check_messages(&f, components, &log)?;
            print_verdicts(verdicts.into_iter().map(|(ts, value)| Verdict { ts, value }))?;
        }
        Command::Compare { formula, input } => return compare(&formula, &input),
        Command::Bench { profile, rates, sigmas, duration, mu, seed, outer_always, csv } => {
            bench(&profile, &rates, &sigmas, duration, mu, seed, outer_always, &csv)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

