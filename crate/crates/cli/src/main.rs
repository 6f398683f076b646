use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use liegroupoid::suite::{self, parse_tolerance_override, Report, RunConfig, ToleranceClass};
use liegroupoid::zoo::Outcome;

/// Sampled verification of Lie groupoid connections and principal bundles.
#[derive(Debug, Parser)]
#[command(name = "liegroupoid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the check suite and compare outcomes with each example's table.
    Run(RunArgs),
    /// List the shipped examples.
    List,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// TOML config file; command-line flags override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Example to run (repeatable); default is every example.
    #[arg(long = "example", value_name = "NAME")]
    examples: Vec<String>,
    /// Samples per check.
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Tolerance override for a class: algebraic, derivative or subspace.
    #[arg(long = "tol", value_name = "CLASS=VALUE", value_parser = parse_tol)]
    tolerances: Vec<(ToleranceClass, f64)>,
    /// Report path. Defaults to $GROUPOID_REPORT_DIR/groupoid-report.json
    /// when that variable is set.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Print only mismatches and the summary.
    #[arg(long)]
    quiet: bool,
}

fn parse_tol(s: &str) -> Result<(ToleranceClass, f64), String> {
    parse_tolerance_override(s).map_err(|e| e.to_string())
}

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn config_from(args: &RunArgs) -> liegroupoid::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_toml_file(path)?,
        None => RunConfig::default(),
    };
    if !args.examples.is_empty() {
        cfg.examples = args.examples.clone();
        if cfg.examples.iter().any(|e| e == "all") {
            cfg.examples.clear();
        }
    }
    if let Some(n) = args.samples {
        cfg.n_samples = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    for &(class, value) in &args.tolerances {
        cfg.tolerances.set(class, value)?;
    }
    if args.report.is_some() {
        cfg.report_path = args.report.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_residual(r: Option<f64>) -> String {
    r.map_or_else(|| "non-finite".to_string(), |v| format!("{v:.3e}"))
}

fn print_report(report: &Report, quiet: bool) {
    for ex in &report.examples {
        for c in &ex.checks {
            if quiet && c.matches_expected {
                continue;
            }
            let status = if c.pass { "PASS" } else { "FAIL" };
            let expectation = match (c.expected, c.matches_expected) {
                (_, true) => String::new(),
                (Some(Outcome::Pass), false) => "  MISMATCH (expected pass)".into(),
                (Some(Outcome::Fail), false) => "  MISMATCH (expected fail)".into(),
                (None, _) => "  MISMATCH (no expectation)".into(),
            };
            let note = c.note.as_deref().map(|n| format!("  [{n}]")).unwrap_or_default();
            println!(
                "{status} {:<32} {:<44} residual {:>10}  tol {:.1e}{expectation}{note}",
                ex.name,
                c.check_name,
                fmt_residual(c.max_residual),
                c.tolerance,
            );
        }
    }
    let s = &report.summary;
    println!(
        "{} examples, {} checks: {} passed, {} failed ({} expected), {} mismatches",
        s.examples, s.checks, s.passed, s.failed, s.expected_failures, s.mismatches
    );
}

fn run(args: RunArgs) -> ExitCode {
    let cfg = match config_from(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let report = match suite::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    print_report(&report, args.quiet);
    if let Some(path) = suite::resolve_report_path(cfg.report_path.as_deref()) {
        if let Err(e) = report.write_atomic(&path) {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
        if !args.quiet {
            println!("report written to {}", path.display());
        }
    }
    if report.all_match() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_MISMATCH)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::List => {
            for (name, description) in suite::list_examples() {
                println!("{name:<32} {description}");
            }
            ExitCode::SUCCESS
        }
    }
}
