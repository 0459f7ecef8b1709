use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbc_core::adversary::{lemma_cheat_bound, OptimizerConfig};
use qbc_harness::config::{parse_directions, parse_suites, Suite};
use qbc_harness::{emit_report, load_report, run_suite, HarnessError, OutputFormat, Report, RunConfig};

#[derive(Parser)]
#[command(name = "qbc", version, about = "Simulate and verify the AME(3,d) quantum bit-commitment protocol")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and report pass/fail per property.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of hiding,structure,bounds,nogo,attack,lemma.
        #[arg(long, default_value = "hiding,structure,bounds,nogo,lemma")]
        suites: String,
        /// Permutations sampled when d > 4.
        #[arg(long, default_value_t = 64)]
        permutation_samples: usize,
        /// Random density matrices for the channel-level hiding check.
        #[arg(long, default_value_t = 50)]
        random_states: usize,
        /// Random instance/channel pairs for the bounds suite.
        #[arg(long, default_value_t = 1000)]
        bound_samples: usize,
    },
    /// Search for the best separable cheating channel on a protocol instance.
    Attack {
        #[command(flatten)]
        common: Common,
    },
    /// Print the analytic cheating bound for n qudits of dimension d.
    Lemma {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        d: usize,
    },
    /// Summarize a saved JSON report, optionally re-emitting it.
    Report {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 0to1, 1to0 or both.
    #[arg(long, default_value = "both")]
    direction: String,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Largest environment dimension per side of the cut.
    #[arg(long)]
    kraus_rank: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json, or csv for optimizer traces.
    #[arg(long, default_value = "json")]
    format: String,
    /// Record per-suite wall-clock time (reports are then not reproducible).
    #[arg(long)]
    timings: bool,
}

impl Common {
    fn into_config(self, suites: Vec<Suite>) -> Result<RunConfig, HarnessError> {
        let mut c = RunConfig::new(self.d, self.seed, suites);
        c.directions = parse_directions(&self.direction)?;
        let defaults = OptimizerConfig::default();
        c.optimizer.restarts = self.restarts.unwrap_or(defaults.restarts);
        c.optimizer.iterations = self.iterations.unwrap_or(defaults.iterations);
        c.optimizer.kraus_rank = self.kraus_rank.unwrap_or(defaults.kraus_rank);
        c.format = self.format.parse()?;
        c.output = self.out;
        c.timings = self.timings;
        c.validate()?;
        Ok(c)
    }
}

fn print_summary(report: &Report) {
    for s in &report.suites {
        println!(
            "{} {} measured={:e} tolerance={:e} n={}",
            if s.pass { "PASS" } else { "FAIL" },
            s.name,
            s.measured,
            s.tolerance,
            s.samples
        );
    }
    for a in &report.attacks {
        println!(
            "attack {} pi={:?} m={} achieved_p={:.9} bound={} cut={} ranks={}x{}",
            a.direction, a.pi, a.m, a.achieved_p, a.bound, a.cut, a.ranks[0], a.ranks[1]
        );
    }
}

fn finish(report: &Report, out: Option<&PathBuf>, format: OutputFormat) -> Result<ExitCode, HarnessError> {
    print_summary(report);
    if let Some(path) = out {
        for p in emit_report(report, path, format)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Verify { common, suites, permutation_samples, random_states, bound_samples } => {
            let mut config = common.into_config(parse_suites(&suites)?)?;
            config.permutation_samples = permutation_samples;
            config.random_states = random_states;
            config.bound_samples = bound_samples;
            config.validate()?;
            let report = run_suite(&config)?;
            finish(&report, config.output.as_ref(), config.format)
        }
        Command::Attack { common } => {
            let config = common.into_config(vec![Suite::Attack])?;
            let report = run_suite(&config)?;
            finish(&report, config.output.as_ref(), config.format)
        }
        Command::Lemma { n, d } => {
            let bound = lemma_cheat_bound(n, d).map_err(|e| HarnessError::Usage(e.to_string()))?;
            println!("{bound}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { input, out, format } => {
            let format: OutputFormat = format.parse()?;
            let report = load_report(&input)?;
            finish(&report, out.as_ref(), format)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e @ HarnessError::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
