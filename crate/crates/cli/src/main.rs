use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fleetq::report::{self, ReportOptions};
use fleetq::trace::ingest_trace;
use fleetq::{Error, Scenario};

/// Capacity planning for CI runner fleets.
#[derive(Debug, Parser)]
#[command(name = "fleetq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file, or `builtin:case_study` / `builtin:sensitivity`.
    #[arg(long, global = true)]
    scenario: Option<String>,

    /// Overrides the scenario's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the scenario's replication count.
    #[arg(long, global = true)]
    replications: Option<u32>,

    /// Overrides the simulated horizon, in minutes.
    #[arg(long = "horizon-min", global = true)]
    horizon_min: Option<f64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Exit with status 2 when the SLA is not met.
    #[arg(long = "strict-sla", global = true)]
    strict_sla: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form metrics only.
    Analyze,
    /// Discrete-event simulation only.
    Simulate,
    /// Cost-optimal runner counts.
    Optimize,
    /// Fit a CSV job trace and print a scenario fragment.
    Ingest {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Policy variants under common random numbers.
    Compare,
    /// Analytic and simulated metrics side by side.
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Serialize)]
struct IngestSummary {
    records: usize,
    lambda: f64,
    ca2: f64,
    cs2: f64,
    fragment: String,
}

struct Output {
    body: String,
    sla_met: Option<bool>,
}

fn load(cli: &Cli) -> anyhow::Result<Scenario> {
    let spec =
        cli.scenario.as_deref().ok_or_else(|| Error::Validation("--scenario is required for this command".into()))?;
    let mut s = Scenario::resolve(spec)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(r) = cli.replications {
        s.replications = r;
    }
    if let Some(h) = cli.horizon_min {
        s.horizon_min = h;
    }
    s.validate()?;
    Ok(s)
}

fn render<T: Serialize>(format: Format, value: &T, text: impl FnOnce(&T) -> String) -> String {
    match format {
        Format::Json => report::to_json(value) + "\n",
        Format::Text => text(value),
    }
}

fn run(cli: &Cli) -> anyhow::Result<Output> {
    let out = match &cli.command {
        Command::Analyze | Command::Simulate | Command::Report => {
            let opts = match cli.command {
                Command::Analyze => ReportOptions::ANALYTIC,
                Command::Simulate => ReportOptions::SIMULATE,
                _ => ReportOptions::FULL,
            };
            let r = report::run_report(&load(cli)?, opts)?;
            Output { body: render(cli.format, &r, |r| r.to_text()), sla_met: r.sla.met() }
        }
        Command::Optimize => {
            let r = report::optimize(&load(cli)?)?;
            Output { body: render(cli.format, &r, |r| r.to_text()), sla_met: None }
        }
        Command::Compare => {
            let s = load(cli)?;
            let variants = if s.variants.is_empty() { report::default_variants() } else { s.variants.clone() };
            let c = report::compare_policies(&s, &variants)?;
            let met = c.rows.iter().map(|r| r.sla_pass).collect::<Option<Vec<_>>>().map(|v| v.iter().all(|p| *p));
            Output { body: render(cli.format, &c, |c| c.to_text()), sla_met: met }
        }
        Command::Ingest { trace } => {
            let fit = ingest_trace(trace)?;
            let summary = IngestSummary {
                records: fit.records.len(),
                lambda: fit.lambda,
                ca2: fit.ca2,
                cs2: fit.cs2,
                fragment: fit.scenario_fragment()?,
            };
            Output { body: render(cli.format, &summary, |s| s.fragment.clone()), sla_met: None }
        }
    };
    Ok(out)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_input_error() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let output = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &output.body).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{}", output.body);
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if cli.strict_sla && output.sla_met == Some(false) {
        eprintln!("error: SLA not met");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
