use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use ccp_core::bench::{self, BenchConfig, GenOptions, Mode};
use ccp_core::presolve::PresolveConfig;
use ccp_core::{
    brute_force_solve, run_pipeline, solve, Adjustment, CcpError, IndexSet, PbpInstance, Result, SolveResult,
    SolveStatus, SolverConfig,
};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_ERROR: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

/// Exact solver and presolve for chance-constrained ball projection.
#[derive(Parser)]
#[command(name = "ccp", version)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, env = "CCP_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance.
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        p: u8,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random scenario probabilities instead of equal ones.
        #[arg(long)]
        random_mass: bool,
        /// Linf constraint balls instead of L1.
        #[arg(long)]
        linf: bool,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance file.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Presolve)]
        mode: ModeArg,
        /// Wall-clock budget in seconds, presolve included.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Result file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the presolve report (presolve mode only).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run seeded trials in several modes and tabulate them.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        p: u8,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "presolve,direct")]
        modes: Vec<ModeArg>,
        /// Per-trial budget in seconds (default 500 for p=2, 720 for p=3).
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        random_mass: bool,
        #[arg(long)]
        linf: bool,
        /// CSV output; the text table always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Presolve,
    Direct,
    Brute,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Presolve => Mode::Presolve,
            ModeArg::Direct => Mode::Direct,
            ModeArg::Brute => Mode::Brute,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("ccp: cannot size thread pool: {e}");
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ccp: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| CcpError::Config(format!("time limit must be a positive number of seconds, got {s}")))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n"))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Gen {
            p,
            n,
            tau,
            seed,
            random_mass,
            linf,
            out,
        } => {
            if n == 0 || !(0.0..1.0).contains(&tau) {
                return Err(CcpError::Config("need n >= 1 and 0 <= tau < 1".into()));
            }
            let inst = bench::generate_instance(p as usize, n, tau, seed, GenOptions { random_mass, linf });
            emit(out.as_deref(), &inst.to_json()?)?;
            Ok(0)
        }
        Command::Solve {
            input,
            mode,
            time_limit,
            out,
            report,
        } => {
            let raw = PbpInstance::from_json(&fs::read_to_string(&input)?)?;
            let (inst, log) = raw.normalize()?;
            for adj in &log {
                eprintln!("ccp: normalized: {}", serde_json::to_string(adj)?);
            }
            let limit = time_limit.map(seconds).transpose()?;
            let mut result = solve_mode(&inst, mode, limit, report.as_deref())?;
            restore_indices(&mut result, raw.n(), &log);
            emit(out.as_deref(), &result.to_json()?)?;
            Ok(match result.status {
                SolveStatus::Optimal => 0,
                SolveStatus::Infeasible => EXIT_INFEASIBLE,
                SolveStatus::TimeLimit => EXIT_TIMEOUT,
            })
        }
        Command::Bench {
            p,
            n,
            tau,
            trials,
            seed,
            modes,
            time_limit,
            random_mass,
            linf,
            out,
        } => {
            let limit = seconds(time_limit.unwrap_or(if p == 2 { 500.0 } else { 720.0 }))?;
            let mut records = Vec::new();
            for mode in modes {
                let config = BenchConfig {
                    p: p as usize,
                    n,
                    tau,
                    mode: mode.into(),
                    seed,
                    time_limit: limit,
                    trials,
                    gen: GenOptions { random_mass, linf },
                };
                records.push(bench::run(&config)?);
            }
            bench::fill_gaps(&mut records);
            print!("{}", bench::render_table(&records));
            if let Some(path) = out {
                fs::write(path, bench::render_csv(&records))?;
            }
            Ok(0)
        }
    }
}

fn solve_mode(inst: &PbpInstance, mode: ModeArg, limit: Option<Duration>, report_out: Option<&Path>) -> Result<SolveResult> {
    let start = std::time::Instant::now();
    match mode {
        ModeArg::Brute => brute_force_solve(inst),
        ModeArg::Direct => solve(
            inst,
            None,
            &SolverConfig {
                time_limit: limit,
                node_limit: None,
            },
        ),
        ModeArg::Presolve => {
            let mut pconf = PresolveConfig::default();
            if let Some(l) = limit {
                pconf.separability_time_limit = Some(l.min(pconf.separability_budget(inst.dim())));
            }
            let report = run_pipeline(inst, &pconf)?;
            if let Some(path) = report_out {
                fs::write(path, format!("{}\n", report.to_json()?))?;
            }
            let left = limit.map(|l| l.saturating_sub(start.elapsed()).max(Duration::from_millis(1)));
            solve(
                inst,
                Some(&report),
                &SolverConfig {
                    time_limit: left,
                    node_limit: None,
                },
            )
        }
    }
}

/// Maps a selection on the normalized instance back to the caller's indices.
fn restore_indices(result: &mut SolveResult, n: usize, log: &[Adjustment]) {
    let dropped: Vec<usize> = log
        .iter()
        .filter_map(|a| match a {
            Adjustment::DroppedZeroMass { scenario } | Adjustment::DroppedInfeasible { scenario, .. } => {
                Some(scenario - 1)
            }
            _ => None,
        })
        .collect();
    if dropped.is_empty() {
        return;
    }
    let kept: Vec<usize> = (0..n).filter(|s| !dropped.contains(s)).collect();
    result.selection = result.selection.iter().map(|s| kept[s]).collect::<IndexSet>();
}
