//! Seeded instance generation and the presolve / direct / brute-force
//! comparison harness.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{CcpError, Result};
use crate::instance::{Norm, PbpInstance, ScenarioSet};
use crate::minimal::{brute_force_solve, ENUMERATION_LIMIT};
use crate::presolve::{run_pipeline, PresolveConfig};
use crate::solver::{solve, SolveStatus, SolverConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GenOptions {
    /// Dirichlet-uniform probabilities instead of equal ones.
    pub random_mass: bool,
    /// Linf constraint balls (meaningful for `p = 3`); L1 otherwise.
    pub linf: bool,
}

/// Instance with `n` standard-normal scenarios scaled to unit max-norm,
/// `R = 23/25 * p * max ||xi||_inf`, box radius `2 * max ||xi||_inf`, and
/// `x_bar` uniform in the box. Deterministic in `seed`.
pub fn generate_instance(p: usize, n: usize, tau: f64, seed: u64, opts: GenOptions) -> PbpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let scale = points
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for v in points.iter_mut().flatten() {
        *v /= scale;
    }
    let max_inf = points
        .iter()
        .map(|x| Norm::Linf.eval(x))
        .fold(0.0f64, f64::max);
    let box_radius = 2.0 * max_inf;
    let x_bar = (0..p).map(|_| rng.gen_range(-box_radius..=box_radius)).collect();
    let probs = if opts.random_mass {
        let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = w.iter().sum();
        w.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    };
    PbpInstance {
        scenarios: ScenarioSet::new(p, points, probs),
        x_bar,
        radius: 23.0 / 25.0 * p as f64 * max_inf,
        box_radius,
        objective: Norm::L2,
        constraint: if opts.linf { Norm::Linf } else { Norm::L1 },
        tau,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Presolve,
    Direct,
    Brute,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Presolve => "presolve",
            Mode::Direct => "direct",
            Mode::Brute => "brute",
        })
    }
}

impl FromStr for Mode {
    type Err = CcpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "presolve" => Ok(Mode::Presolve),
            "direct" => Ok(Mode::Direct),
            "brute" => Ok(Mode::Brute),
            other => Err(CcpError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchConfig {
    pub p: usize,
    pub n: usize,
    pub tau: f64,
    pub mode: Mode,
    pub seed: u64,
    pub time_limit: Duration,
    pub trials: usize,
    pub gen: GenOptions,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CcpError::Config("trials must be at least 1".into()));
        }
        if self.time_limit.is_zero() {
            return Err(CcpError::Config("time limit must be positive".into()));
        }
        if !(self.p == 2 || self.p == 3) {
            return Err(CcpError::Config(format!("p must be 2 or 3, got {}", self.p)));
        }
        if self.mode == Mode::Brute && self.n > ENUMERATION_LIMIT {
            return Err(CcpError::Config(format!(
                "brute mode is limited to N <= {ENUMERATION_LIMIT}, got {}",
                self.n
            )));
        }
        Ok(())
    }

    /// Seed of trial `i`.
    pub fn trial_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub seed: u64,
    pub status: Option<SolveStatus>,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub nodes: u64,
    pub wall_ms: u64,
    /// Presolve stage timings (presolve mode only).
    pub presolve_ms: Option<f64>,
    pub safe: usize,
    pub pruned: usize,
    /// `(UB - F*) / F*` once the optimum is known.
    pub gap: Option<f64>,
    pub error: Option<String>,
}

impl TrialSummary {
    pub fn solved(&self) -> bool {
        matches!(self.status, Some(SolveStatus::Optimal | SolveStatus::Infeasible))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub config: BenchConfig,
    pub trials: Vec<TrialSummary>,
    pub solved: usize,
    /// Mean wall time in seconds over solved trials.
    pub avg_time_solved: Option<f64>,
    pub avg_gap: Option<f64>,
}

fn relative_gap(upper: f64, optimum: f64) -> f64 {
    if upper <= optimum {
        0.0
    } else if optimum > 0.0 {
        (upper - optimum) / optimum
    } else {
        f64::INFINITY
    }
}

fn run_trial(cfg: &BenchConfig, i: usize) -> Result<TrialSummary> {
    let seed = cfg.trial_seed(i);
    let inst = generate_instance(cfg.p, cfg.n, cfg.tau, seed, cfg.gen);
    let start = Instant::now();
    let mut presolve_ms = None;
    let (mut safe, mut pruned) = (0, 0);
    let result = match cfg.mode {
        Mode::Brute => brute_force_solve(&inst)?,
        Mode::Direct => solve(
            &inst,
            None,
            &SolverConfig {
                time_limit: Some(cfg.time_limit),
                node_limit: None,
            },
        )?,
        Mode::Presolve => {
            let pconf = PresolveConfig {
                separability_time_limit: Some(cfg.time_limit.min(PresolveConfig::default().separability_budget(cfg.p))),
                ..PresolveConfig::default()
            };
            let report = run_pipeline(&inst, &pconf)?;
            presolve_ms = Some(report.timings_ms.values().sum());
            safe = report.partition.safe.len();
            pruned = report.partition.pruned.len();
            let remaining = cfg.time_limit.saturating_sub(start.elapsed());
            solve(
                &inst,
                Some(&report),
                &SolverConfig {
                    time_limit: Some(remaining),
                    node_limit: None,
                },
            )?
        }
    };
    Ok(TrialSummary {
        seed,
        status: Some(result.status),
        value: result.value,
        lower: result.lower,
        upper: result.upper,
        nodes: result.nodes,
        wall_ms: start.elapsed().as_millis() as u64,
        presolve_ms,
        safe,
        pruned,
        gap: (result.status == SolveStatus::Optimal).then_some(0.0),
        error: None,
    })
}

fn aggregate(config: BenchConfig, trials: Vec<TrialSummary>) -> BenchRecord {
    let solved: Vec<&TrialSummary> = trials.iter().filter(|t| t.solved()).collect();
    let avg_time_solved = (!solved.is_empty())
        .then(|| solved.iter().map(|t| t.wall_ms as f64 / 1e3).sum::<f64>() / solved.len() as f64);
    let gaps: Vec<f64> = trials.iter().filter_map(|t| t.gap).collect();
    let avg_gap = (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64);
    BenchRecord {
        solved: solved.len(),
        config,
        trials,
        avg_time_solved,
        avg_gap,
    }
}

/// Runs every trial of one configuration. Failures are recorded per trial.
pub fn run(config: &BenchConfig) -> Result<BenchRecord> {
    config.validate()?;
    let trials = (0..config.trials)
        .map(|i| {
            run_trial(config, i).unwrap_or_else(|e| TrialSummary {
                seed: config.trial_seed(i),
                status: None,
                value: f64::NAN,
                lower: f64::NAN,
                upper: f64::NAN,
                nodes: 0,
                wall_ms: 0,
                presolve_ms: None,
                safe: 0,
                pruned: 0,
                gap: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(aggregate(config.clone(), trials))
}

/// Fills relative gaps of unsolved trials from optima found by other records
/// on the same seeds, then refreshes the aggregates.
pub fn fill_gaps(records: &mut [BenchRecord]) {
    let optimum = |seed: u64, recs: &[BenchRecord]| -> Option<f64> {
        recs.iter()
            .flat_map(|r| r.trials.iter())
            .find(|t| t.seed == seed && t.status == Some(SolveStatus::Optimal))
            .map(|t| t.value)
    };
    let snapshot = records.to_vec();
    for rec in records.iter_mut() {
        for t in rec.trials.iter_mut() {
            if t.gap.is_none() && t.upper.is_finite() {
                if let Some(opt) = optimum(t.seed, &snapshot) {
                    t.gap = Some(relative_gap(t.upper, opt));
                }
            }
        }
        *rec = aggregate(rec.config.clone(), std::mem::take(&mut rec.trials));
    }
}

fn fmt_gap(g: Option<f64>) -> String {
    match g {
        None => "-".into(),
        Some(g) if g == 0.0 => "0%".into(),
        Some(g) if g.is_infinite() => "inf".into(),
        Some(g) => format!("{:.2}%", 100.0 * g),
    }
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "-".into(), |t| format!("{t:.3}"))
}

/// Fixed-width comparison table, one row per record.
pub fn render_table(records: &[BenchRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<9} {:>2} {:>6} {:>7} {:>16} {:>8} {:>10}",
        "method", "p", "N", "tau", "avg time [s]", "solved", "avg gap"
    );
    for r in records {
        let c = &r.config;
        let _ = writeln!(
            out,
            "{:<9} {:>2} {:>6} {:>7.3} {:>16} {:>8} {:>10}",
            c.mode.to_string(),
            c.p,
            c.n,
            c.tau,
            fmt_time(r.avg_time_solved),
            format!("{}/{}", r.solved, c.trials),
            fmt_gap(r.avg_gap),
        );
    }
    out
}

/// CSV twin of [`render_table`].
pub fn render_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from("method,p,n,tau,avg_time_solved_s,solved,trials,avg_gap\n");
    for r in records {
        let c = &r.config;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.mode,
            c.p,
            c.n,
            c.tau,
            r.avg_time_solved.map_or(String::new(), |t| t.to_string()),
            r.solved,
            c.trials,
            r.avg_gap.map_or(String::new(), |g| g.to_string()),
        );
    }
    out
}
