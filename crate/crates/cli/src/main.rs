//! Command-line driver: run the experiment suites from a JSON config, run a
//! single suite, or estimate the regret slope from an emitted `regret.csv`.
//!
//! Exit codes: 0 all requested suites passed, 1 a suite failed, 2 invalid
//! config or arguments, 3 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use banditlab::harness::{self, ExperimentConfig, RunSummary};
use banditlab::{Error, SuiteKind};

#[derive(Parser)]
#[command(name = "banditlab", version, about = "Bandit policy simulator and bound verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every suite named in the config.
    Run {
        /// Path to the JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's worker thread count.
        #[arg(long)]
        threads: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a single suite (bandit, bounds, mgf, theorem1, lemmas).
    Suite {
        name: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least-squares log-log slope of the median cumulative regret curve.
    Slope {
        /// Path to a regret.csv produced by `run`.
        #[arg(long)]
        input: PathBuf,
        /// Lower end of the fit window (rounds).
        #[arg(long)]
        tmin: u64,
        /// Upper end of the fit window (rounds).
        #[arg(long)]
        tmax: u64,
    },
}

const EXIT_SUITE_FAILURE: u8 = 1;
const EXIT_CONFIG_ERROR: u8 = 2;
const EXIT_IO_ERROR: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, seed, threads, out } => run_command(&config, seed, threads, out, None),
        Command::Suite { name, config, seed, threads, out } => match name.parse::<SuiteKind>() {
            Ok(kind) => run_command(&config, seed, threads, out, Some(kind)),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG_ERROR);
            }
        },
        Command::Slope { input, tmin, tmax } => slope_command(&input, tmin, tmax),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io(_) => EXIT_IO_ERROR,
                _ => EXIT_CONFIG_ERROR,
            })
        }
    }
}

fn run_command(
    config_path: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    only_suite: Option<SuiteKind>,
) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(config_path)?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    if let Some(threads) = threads {
        config.threads = Some(threads);
    }
    if let Some(out) = out {
        config.output_dir = out;
    }
    if let Some(kind) = only_suite {
        config.suites = vec![kind];
    }
    config.validate()?;

    let summary = harness::run(&config)?;
    print_summary(&summary);
    Ok(if summary.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SUITE_FAILURE)
    })
}

fn print_summary(summary: &RunSummary) {
    for (suite, report) in &summary.suites {
        for (check, c) in &report.checks {
            let mut fields = Vec::new();
            if let Some(rate) = c.rate {
                fields.push(format!("rate={rate:.6}"));
            }
            if let Some(value) = c.value {
                fields.push(format!("value={value:.6}"));
            }
            if let Some(se) = c.std_err {
                fields.push(format!("se={se:.2e}"));
            }
            if let Some(n) = c.n {
                fields.push(format!("n={n}"));
            }
            println!(
                "[{}] {suite}/{check} {}",
                if c.pass { "PASS" } else { "FAIL" },
                fields.join(" ")
            );
        }
        println!(
            "[{}] suite {suite}",
            if report.pass { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "[{}] run (seed {})",
        if summary.pass { "PASS" } else { "FAIL" },
        summary.master_seed
    );
}

fn slope_command(input: &Path, tmin: u64, tmax: u64) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(input)?;
    let rows = parse_regret_csv(&text)?;
    let curve = harness::median_curve_from_rows(&rows);
    let slope = harness::estimate_regret_slope(&curve, tmin, tmax)?;
    println!("slope {slope:.6} over [{tmin}, {tmax}] ({} rounds)", curve.len());
    Ok(ExitCode::SUCCESS)
}

fn parse_regret_csv(text: &str) -> Result<Vec<(u32, u64, f64)>, Error> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == harness::REGRET_CSV_HEADER => {}
        other => {
            return Err(Error::InvalidConfig(format!(
                "unexpected regret.csv header: {:?}",
                other.unwrap_or_default()
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let parse_err =
            |what: &str| Error::InvalidConfig(format!("regret.csv line {}: bad {what}", i + 2));
        let replica: u32 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("replica"))?;
        let t: u64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("t"))?;
        let _instant: f64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("instant_regret"))?;
        let cumulative: f64 = cols
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("cumulative_regret"))?;
        rows.push((replica, t, cumulative));
    }
    Ok(rows)
}
