//! Scenario presolve: bounds, safe/pruned fixings with replayable
//! certificates, tightened big-M values and hull inequalities.

mod certificate;
mod stages;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::instance::{IndexSet, PbpInstance};
use crate::oracle::{self, big_m, BigMBound};
use crate::solver::Incumbent;
use crate::tol;

pub use certificate::{replay_certificate, Certificate};
pub use stages::{
    expand_safe_hull, generate_inequalities, positivity_pass, safe_by_separability,
    singleton_bounds, suboptimality_pass, Positivity,
};

/// Disjoint safe (fixed on) and pruned (fixed off) scenario sets.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PartitionState {
    pub safe: IndexSet,
    pub pruned: IndexSet,
}

impl PartitionState {
    pub fn selectable(&self, n: usize) -> IndexSet {
        IndexSet::full(n).difference(&self.safe).difference(&self.pruned)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
    /// Feasible point attaining `upper`, when one is known.
    pub incumbent: Option<Incumbent>,
}

impl Bounds {
    pub fn unbounded() -> Self {
        Bounds {
            lower: 0.0,
            upper: f64::INFINITY,
            incumbent: None,
        }
    }

    pub(crate) fn offer(&mut self, inc: Incumbent) {
        if inc.value < self.upper {
            self.upper = inc.value;
            self.incumbent = Some(inc);
        }
        self.lower = self.lower.min(self.upper);
    }

    pub(crate) fn raise_lower(&mut self, v: f64) {
        self.lower = self.lower.max(v.min(self.upper));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    /// `z_target >= sum_{V} z - rhs`.
    HullInduction,
    /// `sum_{V} z <= rhs`.
    HullCut,
}

/// A hull inequality over the vertex set `V`; `rhs = |V| - 1` for both kinds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidInequality {
    pub kind: InequalityKind,
    #[serde(serialize_with = "opt_one_based")]
    pub target: Option<usize>,
    pub vertex_set: IndexSet,
    pub rhs: i64,
}

fn opt_one_based<S: Serializer>(t: &Option<usize>, ser: S) -> std::result::Result<S::Ok, S::Error> {
    match t {
        Some(t) => ser.serialize_some(&(t + 1)),
        None => ser.serialize_none(),
    }
}

impl ValidInequality {
    /// Whether the 0/1 selection satisfies the inequality.
    pub fn holds(&self, selection: &IndexSet) -> bool {
        let on = self.vertex_set.iter().filter(|&s| selection.contains(s)).count() as i64;
        match self.kind {
            InequalityKind::HullInduction => {
                let t = i64::from(selection.contains(self.target.expect("target")));
                t >= on - self.rhs
            }
            InequalityKind::HullCut => on <= self.rhs,
        }
    }
}

/// Certificate classes that can be switched independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Toggles {
    pub non_separability: bool,
    pub hull_expansion: bool,
    pub non_positivity: bool,
    pub strict_positivity: bool,
    /// Singleton and safe-set-based exclusions against the upper bound.
    pub sub_optimality: bool,
    pub hull_induction: bool,
    pub hull_cut: bool,
}

impl Toggles {
    pub const ALL: Toggles = Toggles {
        non_separability: true,
        hull_expansion: true,
        non_positivity: true,
        strict_positivity: true,
        sub_optimality: true,
        hull_induction: true,
        hull_cut: true,
    };

    pub const NONE: Toggles = Toggles {
        non_separability: false,
        hull_expansion: false,
        non_positivity: false,
        strict_positivity: false,
        sub_optimality: false,
        hull_induction: false,
        hull_cut: false,
    };

    /// One toggle set per class, each enabling only that class.
    pub fn each_alone() -> Vec<(&'static str, Toggles)> {
        let one = |f: fn(&mut Toggles)| {
            let mut t = Toggles::NONE;
            f(&mut t);
            t
        };
        vec![
            ("non_separability", one(|t| t.non_separability = true)),
            ("hull_expansion", one(|t| t.hull_expansion = true)),
            ("non_positivity", one(|t| t.non_positivity = true)),
            ("strict_positivity", one(|t| t.strict_positivity = true)),
            ("sub_optimality", one(|t| t.sub_optimality = true)),
            ("hull_induction", one(|t| t.hull_induction = true)),
            ("hull_cut", one(|t| t.hull_cut = true)),
        ]
    }
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles::ALL
    }
}

#[derive(Debug, Clone, Default)]
pub struct PresolveConfig {
    /// Total budget of the separability stage; defaults to 60 s in 2D and
    /// 120 s in 3D.
    pub separability_time_limit: Option<Duration>,
    pub toggles: Toggles,
}

impl PresolveConfig {
    pub fn separability_budget(&self, dim: usize) -> Duration {
        self.separability_time_limit
            .unwrap_or(Duration::from_secs(if dim == 2 { 60 } else { 120 }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresolveReport {
    pub partition: PartitionState,
    pub bounds: Bounds,
    /// Tightened big-M per selectable scenario (0-based index).
    pub big_m: Vec<(usize, BigMBound)>,
    pub inequalities: Vec<ValidInequality>,
    pub certificates: Vec<Certificate>,
    /// Stage durations in milliseconds.
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct BigMJson {
    s: usize,
    value: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    safe: &'a IndexSet,
    pruned: &'a IndexSet,
    lower: f64,
    upper: f64,
    big_m: Vec<BigMJson>,
    inequalities: &'a [ValidInequality],
    certificates: &'a [Certificate],
    timings_ms: &'a BTreeMap<String, f64>,
}

impl PresolveReport {
    /// Report JSON; indices are 1-based and infinite bounds become `null`.
    pub fn to_json(&self) -> Result<String> {
        let doc = ReportJson {
            safe: &self.partition.safe,
            pruned: &self.partition.pruned,
            lower: self.bounds.lower,
            upper: self.bounds.upper,
            big_m: self
                .big_m
                .iter()
                .map(|(s, m)| BigMJson { s: s + 1, value: m.value })
                .collect(),
            inequalities: &self.inequalities,
            certificates: &self.certificates,
            timings_ms: &self.timings_ms,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// Once the safe set carries enough mass, its projection is optimal.
fn settle_sound_safe_set(inst: &PbpInstance, part: &PartitionState, bounds: &mut Bounds) -> Result<()> {
    if part.safe.is_empty() || !tol::mass_reaches(inst.scenarios.mass(&part.safe), inst.tau) {
        return Ok(());
    }
    let res = oracle::project(inst, &part.safe)?;
    match res.status {
        oracle::ProjectionStatus::Feasible => {
            bounds.offer(Incumbent {
                value: res.value,
                x: res.point,
                selection: part.safe.clone(),
            });
            bounds.raise_lower(res.value);
        }
        oracle::ProjectionStatus::Empty => bounds.raise_lower(f64::INFINITY),
        oracle::ProjectionStatus::MaxIter => {}
    }
    Ok(())
}

struct Clock {
    timings: BTreeMap<String, f64>,
    at: Instant,
}

impl Clock {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        *self.timings.entry(stage.to_string()).or_default() +=
            now.duration_since(self.at).as_secs_f64() * 1e3;
        self.at = now;
    }
}

/// Runs the presolve stages in order: singleton bounds, separability, hull
/// expansion with sub-optimality, positivity, big-M tightening and
/// inequality generation.
pub fn run_pipeline(inst: &PbpInstance, config: &PresolveConfig) -> Result<PresolveReport> {
    let tg = config.toggles;
    let mut clock = Clock {
        timings: BTreeMap::new(),
        at: Instant::now(),
    };
    let mut certificates = Vec::new();

    let (mut bounds, mut part, certs) = singleton_bounds(inst)?;
    if tg.sub_optimality {
        certificates.extend(certs);
    } else {
        part.pruned = IndexSet::new();
    }
    clock.lap("singleton_bounds");

    if tg.non_separability {
        let (p, c) = safe_by_separability(inst, &part, config.separability_budget(inst.dim()));
        part = p;
        certificates.extend(c);
        settle_sound_safe_set(inst, &part, &mut bounds)?;
    }
    clock.lap("separability");

    if tg.hull_expansion {
        let (p, c) = expand_safe_hull(inst, &part)?;
        part = p;
        certificates.extend(c);
        settle_sound_safe_set(inst, &part, &mut bounds)?;
    }
    clock.lap("hull_expansion");

    if tg.sub_optimality {
        let (p, b, c) = suboptimality_pass(inst, &part, &bounds)?;
        part = p;
        bounds = b;
        certificates.extend(c);
    }
    clock.lap("suboptimality");

    let which = Positivity {
        non_positive: tg.non_positivity,
        strict_positive: tg.strict_positivity,
    };
    if which.non_positive || which.strict_positive {
        let before = part.safe.len();
        let (p, c) = positivity_pass(inst, &part, &bounds, which)?;
        part = p;
        certificates.extend(c);
        if tg.hull_expansion && part.safe.len() > before {
            let (p, c) = expand_safe_hull(inst, &part)?;
            part = p;
            certificates.extend(c);
        }
        settle_sound_safe_set(inst, &part, &mut bounds)?;
    }
    clock.lap("positivity");

    // Tightened big-M shares its computation with the non-positivity test, so
    // it is produced (and acted on) only when that class is enabled.
    let mut big_ms = Vec::new();
    if tg.non_positivity {
        let f_cap = stages::cap(bounds.upper);
        let snap = part.safe.clone();
        for s in part.selectable(inst.n()).iter() {
            match big_m(inst, s, &snap, f_cap) {
                Ok(m) if m.value <= 0.0 => {
                    part.safe.insert(s);
                    certificates.push(Certificate::NonPositive {
                        s,
                        big_m: m.value,
                        safe: snap.clone(),
                        f_cap,
                    });
                }
                Ok(m) => big_ms.push((s, m)),
                Err(e) if bounds.upper.is_finite() => return Err(e),
                Err(_) => {}
            }
        }
        settle_sound_safe_set(inst, &part, &mut bounds)?;
    }
    clock.lap("big_m");

    let inequalities = if tg.hull_induction || tg.hull_cut {
        generate_inequalities(inst, &part, inst.tau)
            .into_iter()
            .filter(|v| match v.kind {
                InequalityKind::HullInduction => tg.hull_induction,
                InequalityKind::HullCut => tg.hull_cut,
            })
            .collect()
    } else {
        Vec::new()
    };
    clock.lap("inequalities");

    Ok(PresolveReport {
        partition: part,
        bounds,
        big_m: big_ms,
        inequalities,
        certificates,
        timings_ms: clock.timings,
    })
}
