use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use ccsim::config::Config;
use ccsim::harness::{self, RunOptions};
use ccsim::scenario::{Scenario, Scheme};
use ccsim::verify::{self, AdaptiveCase, Status, VerifyOptions};
use ccsim::{CliError, Result};
use clap::{Args, Parser, Subcommand};

/// Coded caching simulator: rate curves, Monte Carlo runs and verification
#[derive(Parser, Debug)]
#[command(name = "ccsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (default: CCSIM_THREADS, else all CPUs)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Formula, bound and measured rate per memory grid point
    RateCurve(ScenarioArgs),
    /// Per-trial measured rates; summary on stderr
    Simulate(ScenarioArgs),
    /// Rate curves over every combination of --vary values
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,

        /// KEY=v1,v2,... (repeatable; combinations are crossed)
        #[arg(long = "vary", value_name = "KEY=VALUES")]
        vary: Vec<String>,
    },
    /// Run the acceptance battery
    Verify {
        /// Adaptive-check overrides (N, K, d, rho, t0, t, trials, M_grid, seed)
        #[arg(long)]
        config: Option<PathBuf>,

        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,

        /// Only these criteria, e.g. 1,2,7
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<usize>>,

        /// Corrupt one cached byte before decoding (negative control)
        #[arg(long)]
        fault_inject: bool,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(long, value_enum)]
    scheme: Option<Scheme>,

    /// Flat key=value scenario file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override one key (repeatable); applied after --config
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    trials: Option<usize>,

    /// Requested file size in bytes, rounded up to the scheme's multiple
    #[arg(long)]
    file_size: Option<usize>,

    /// Output CSV path (default stdout)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Corrupt one cached byte before decoding (scheme=man only)
    #[arg(long)]
    fault_inject: bool,
}

impl ScenarioArgs {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        for s in &self.set {
            cfg.apply(s)?;
        }
        if let Some(s) = self.scheme {
            cfg.set("scheme", s.name())?;
        }
        if let Some(s) = self.seed {
            cfg.set("seed", &s.to_string())?;
        }
        if let Some(t) = self.trials {
            cfg.set("trials", &t.to_string())?;
        }
        if let Some(f) = self.file_size {
            cfg.set("F", &f.to_string())?;
        }
        Ok(cfg)
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    let threads = harness::default_threads(cli.threads);
    let mut err = io::stderr().lock();
    match cli.command {
        Command::RateCurve(a) => {
            let sc = Scenario::from_config(&a.config()?)?;
            let opts = RunOptions {
                threads,
                fault_inject: a.fault_inject,
            };
            let mut out = a.output()?;
            let res = harness::rate_curve(&sc, &opts, &mut out, &mut err);
            out.flush()?;
            res
        }
        Command::Simulate(a) => {
            let sc = Scenario::from_config(&a.config()?)?;
            let opts = RunOptions {
                threads,
                fault_inject: a.fault_inject,
            };
            let mut out = a.output()?;
            let res = harness::simulate(&sc, &opts, &mut out, &mut err);
            out.flush()?;
            res
        }
        Command::Sweep { scenario, vary } => {
            let cfg = scenario.config()?;
            let vary = vary
                .iter()
                .map(|v| harness::parse_vary(v))
                .collect::<Result<Vec<_>>>()?;
            let opts = RunOptions {
                threads,
                fault_inject: scenario.fault_inject,
            };
            let mut out = scenario.output()?;
            let res = harness::sweep(&cfg, &vary, &opts, &mut out, &mut err);
            out.flush()?;
            res
        }
        Command::Verify {
            config,
            set,
            only,
            fault_inject,
        } => {
            let mut cfg = match config {
                Some(p) => Config::load(&p)?,
                None => Config::default(),
            };
            for s in &set {
                cfg.apply(s)?;
            }
            if let Some(bad) = only
                .iter()
                .flatten()
                .find(|&&c| c == 0 || c > verify::CRITERIA)
            {
                return Err(CliError::Usage(format!("no criterion {bad}")));
            }
            let opts = VerifyOptions {
                fault_inject,
                threads,
                only,
                adaptive: AdaptiveCase::from_config(&cfg)?,
            };
            let results = verify::run(&opts, &mut err);
            let mut out = io::stdout().lock();
            for c in &results {
                writeln!(out, "{}", c.line())?;
            }
            let failed: Vec<String> = results
                .iter()
                .filter(|c| c.status == Status::Fail)
                .map(|c| c.id.to_string())
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Verification(format!(
                    "failed criteria: {}",
                    failed.join(",")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(first.to_string()).one_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::from(e.exit_code())
        }
    }
}
