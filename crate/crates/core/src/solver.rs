//! Exact best-first branch-and-bound over the scenario selection.
//!
//! A node fixes some scenarios on (`ones`) and some off (`zeros`). Its bound is
//! `nu(ones)`, valid for every completion because adding constraints can only
//! raise the projection distance. A node is closed without branching when the
//! minimizer of `nu(ones)` already satisfies enough scenarios to meet the
//! chance constraint: that point is feasible with value equal to the bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{CcpError, Result};
use crate::instance::{IndexSet, PbpInstance};
use crate::minimal::minimal_reduction;
use crate::oracle::{self, ProjectionStatus};
use crate::presolve::{InequalityKind, PartitionState, PresolveReport, ValidInequality};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Optimal value, or the best upper bound at a time limit.
    pub value: f64,
    pub x: Option<Vec<f64>>,
    pub selection: IndexSet,
    pub lower: f64,
    pub upper: f64,
    pub nodes: u64,
    pub wall_ms: u64,
}

impl SolveResult {
    pub(crate) fn infeasible(nodes: u64, wall_ms: u64) -> Self {
        SolveResult {
            status: SolveStatus::Infeasible,
            value: f64::INFINITY,
            x: None,
            selection: IndexSet::new(),
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            nodes,
            wall_ms,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A feasible point with a sound selection and `value = nu(selection)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Incumbent {
    pub value: f64,
    pub x: Vec<f64>,
    pub selection: IndexSet,
}

#[derive(Debug, Clone, Default)]
pub struct SolverConfig {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
}

/// Turns a chance-feasible point into an incumbent: its satisfied scenarios
/// are reduced to a minimal subset and re-projected, which can only lower the
/// value.
pub fn refine_incumbent(inst: &PbpInstance, x: &[f64]) -> Result<Option<Incumbent>> {
    let eval = inst.chance_check(x);
    if !eval.feasible {
        return Ok(None);
    }
    let selection = minimal_reduction(&inst.scenarios, inst.tau, &eval.satisfied);
    let res = oracle::project(inst, &selection)?;
    Ok(res.is_feasible().then_some(Incumbent {
        value: res.value,
        x: res.point,
        selection,
    }))
}

/// Sound subset built from the safe set plus the selectable scenarios closest
/// to `x_bar`, evaluated by the oracle.
pub fn greedy_incumbent(inst: &PbpInstance, partition: &PartitionState) -> Result<Option<Incumbent>> {
    let mut set = partition.safe.clone();
    let mut rest: Vec<usize> = partition.selectable(inst.n()).iter().collect();
    rest.sort_by(|&a, &b| {
        let da = crate::instance::Norm::L2.dist(inst.point(a), &inst.x_bar);
        let db = crate::instance::Norm::L2.dist(inst.point(b), &inst.x_bar);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    let mut rest = rest.into_iter();
    while !tol::mass_reaches(inst.scenarios.mass(&set), inst.tau) {
        match rest.next() {
            Some(s) => {
                set.insert(s);
            }
            None => return Ok(None),
        }
    }
    let res = oracle::project(inst, &set)?;
    Ok(res.is_feasible().then_some(Incumbent {
        value: res.value,
        x: res.point,
        selection: set,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fix {
    Free,
    One,
    Zero,
}

struct Propagator<'a> {
    inst: &'a PbpInstance,
    cuts: &'a [ValidInequality],
}

impl Propagator<'_> {
    fn set(fix: &mut [Fix], s: usize, v: Fix, changed: &mut bool) -> bool {
        match fix[s] {
            Fix::Free => {
                fix[s] = v;
                *changed = true;
                true
            }
            cur => cur == v,
        }
    }

    /// Unit propagation over the mass constraint and the hull inequalities.
    /// Returns `false` on a contradiction.
    fn run(&self, fix: &mut [Fix]) -> bool {
        let probs = &self.inst.scenarios.probs;
        let tau = self.inst.tau;
        loop {
            let mut changed = false;
            let avail: f64 = (0..fix.len()).filter(|&s| fix[s] != Fix::Zero).map(|s| probs[s]).sum();
            if !tol::mass_reaches(avail, tau) {
                return false;
            }
            for s in 0..fix.len() {
                if fix[s] == Fix::Free && !tol::mass_reaches(avail - probs[s], tau) {
                    Self::set(fix, s, Fix::One, &mut changed);
                }
            }
            for cut in self.cuts {
                let v = &cut.vertex_set;
                let ones = v.iter().filter(|&s| fix[s] == Fix::One).count();
                let free: Vec<usize> = v.iter().filter(|&s| fix[s] == Fix::Free).collect();
                match cut.kind {
                    InequalityKind::HullInduction => {
                        let t = cut.target.expect("hull induction has a target");
                        if ones == v.len() {
                            if !Self::set(fix, t, Fix::One, &mut changed) {
                                return false;
                            }
                        } else if fix[t] == Fix::Zero && ones + 1 == v.len() && free.len() == 1 {
                            Self::set(fix, free[0], Fix::Zero, &mut changed);
                        }
                    }
                    InequalityKind::HullCut => {
                        if ones == v.len() {
                            return false;
                        }
                        if ones + 1 == v.len() && free.len() == 1 {
                            Self::set(fix, free[0], Fix::Zero, &mut changed);
                        }
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }
}

struct Node {
    fix: Vec<Fix>,
    bound: f64,
    /// Minimizer of `nu(ones)` when the oracle answered.
    x: Option<Vec<f64>>,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: smaller bound first, then older node first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn ones_of(fix: &[Fix]) -> IndexSet {
    (0..fix.len()).filter(|&s| fix[s] == Fix::One).collect()
}

struct Search<'a> {
    inst: &'a PbpInstance,
    prop: Propagator<'a>,
    incumbent: Option<Incumbent>,
    nodes: u64,
    seq: u64,
}

impl Search<'_> {
    fn upper(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.value)
    }

    fn offer(&mut self, cand: Option<Incumbent>) {
        if let Some(c) = cand {
            if c.value < self.upper() {
                self.incumbent = Some(c);
            }
        }
    }

    fn dominated(&self, bound: f64) -> bool {
        bound > self.upper() - tol::PRUNE
    }

    /// Bounds a node; returns it only if it still needs branching.
    fn evaluate(&mut self, fix: Vec<Fix>, parent: Option<(&[Fix], f64, &Option<Vec<f64>>)>) -> Result<Option<Node>> {
        self.nodes += 1;
        let ones = ones_of(&fix);
        let reused = parent.is_some_and(|(pfix, _, _)| ones_of(pfix) == ones);
        let (bound, x) = match parent {
            Some((_, pbound, px)) if reused => (pbound, px.clone()),
            _ => {
                let res = oracle::project(self.inst, &ones)?;
                let floor = parent.map_or(0.0, |p| p.1);
                match res.status {
                    ProjectionStatus::Empty => return Ok(None),
                    ProjectionStatus::MaxIter => (floor, None),
                    ProjectionStatus::Feasible => (res.value.max(floor), Some(res.point)),
                }
            }
        };
        if self.dominated(bound) {
            return Ok(None);
        }
        if let (Some(x), false) = (&x, reused) {
            let cand = refine_incumbent(self.inst, x)?;
            let closes = cand
                .as_ref()
                .is_some_and(|c| c.value <= bound + tol::PRUNE * (1.0 + bound.abs()));
            self.offer(cand);
            if closes {
                return Ok(None);
            }
        }
        self.seq += 1;
        Ok(Some(Node { fix, bound, x, seq: self.seq }))
    }

    /// Free scenario to branch on: largest probability, then closest to
    /// `x_bar`, then lowest index; restricted to scenarios the node minimizer
    /// violates whenever there are any.
    fn branch_var(&self, node: &Node) -> Option<usize> {
        let free = (0..node.fix.len()).filter(|&s| node.fix[s] == Fix::Free);
        let violated: Vec<usize> = match &node.x {
            Some(x) => free
                .clone()
                .filter(|&s| self.inst.constraint_value(x, s) > tol::CONSTRAINT)
                .collect(),
            None => Vec::new(),
        };
        let pool: Vec<usize> = if violated.is_empty() { free.collect() } else { violated };
        let key = |s: usize| {
            (
                self.inst.prob(s),
                crate::instance::Norm::L2.dist(self.inst.point(s), &self.inst.x_bar),
            )
        };
        pool.into_iter().min_by(|&a, &b| {
            let (pa, da) = key(a);
            let (pb, db) = key(b);
            pb.total_cmp(&pa).then(da.total_cmp(&db)).then(a.cmp(&b))
        })
    }
}

/// Solves the chance-constrained problem exactly, optionally seeded by a
/// presolve report (fixings, inequalities, bounds and incumbent).
pub fn solve(inst: &PbpInstance, report: Option<&PresolveReport>, config: &SolverConfig) -> Result<SolveResult> {
    let start = Instant::now();
    let n = inst.n();
    let no_cuts: Vec<ValidInequality> = Vec::new();
    let cuts = report.map_or(&no_cuts[..], |r| &r.inequalities[..]);
    let mut search = Search {
        inst,
        prop: Propagator { inst, cuts },
        incumbent: None,
        nodes: 0,
        seq: 0,
    };

    let mut fix = vec![Fix::Free; n];
    let partition = report.map_or_else(PartitionState::default, |r| r.partition.clone());
    if let Some(r) = report {
        if !partition.safe.is_disjoint(&partition.pruned) {
            return Err(CcpError::Inconsistent("safe and pruned sets overlap".into()));
        }
        for s in partition.safe.iter() {
            fix[s] = Fix::One;
        }
        for s in partition.pruned.iter() {
            fix[s] = Fix::Zero;
        }
        for (s, m) in &r.big_m {
            if m.value <= 0.0 && fix[*s] == Fix::Free {
                fix[*s] = Fix::One;
            }
        }
        if let Some(inc) = &r.bounds.incumbent {
            search.offer(Some(inc.clone()));
        }
    }
    let greedy = greedy_incumbent(inst, &partition)?;
    search.offer(greedy);

    let mut queue = BinaryHeap::new();
    let mut timed_out = false;
    if search.prop.run(&mut fix) {
        if let Some(root) = search.evaluate(fix, None)? {
            queue.push(root);
        }
    }
    while let Some(node) = queue.pop() {
        if search.dominated(node.bound) {
            continue;
        }
        let over_time = config.time_limit.is_some_and(|t| start.elapsed() >= t);
        let over_nodes = config.node_limit.is_some_and(|m| search.nodes >= m);
        if over_time || over_nodes {
            queue.push(node);
            timed_out = true;
            break;
        }
        let Some(s) = search.branch_var(&node) else {
            continue;
        };
        for v in [Fix::One, Fix::Zero] {
            let mut child = node.fix.clone();
            child[s] = v;
            if !search.prop.run(&mut child) {
                continue;
            }
            if let Some(c) = search.evaluate(child, Some((&node.fix, node.bound, &node.x)))? {
                queue.push(c);
            }
        }
    }

    let wall_ms = start.elapsed().as_millis() as u64;
    let upper = search.upper();
    let open_lower = queue.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let (status, lower) = if timed_out {
        (SolveStatus::TimeLimit, open_lower.min(upper))
    } else if search.incumbent.is_some() {
        (SolveStatus::Optimal, upper)
    } else {
        return Ok(SolveResult::infeasible(search.nodes, wall_ms));
    };
    let (x, selection) = match search.incumbent {
        Some(i) => (Some(i.x), i.selection),
        None => (None, IndexSet::new()),
    };
    Ok(SolveResult {
        status,
        value: upper,
        x,
        selection,
        lower,
        upper,
        nodes: search.nodes,
        wall_ms,
    })
}

/// Independent check of an optimal result: chance feasibility of the
/// minimizer, feasibility of every selected constraint, and
/// `nu(selection) = value`.
pub fn verify(inst: &PbpInstance, result: &SolveResult) -> bool {
    if result.status != SolveStatus::Optimal {
        return false;
    }
    let Some(x) = &result.x else {
        return false;
    };
    if x.len() != inst.dim() || x.iter().any(|v| v.abs() > inst.box_radius + tol::FEASIBLE) {
        return false;
    }
    if !inst.chance_check(x).feasible
        || !tol::mass_reaches(inst.scenarios.mass(&result.selection), inst.tau)
        || result.selection.iter().any(|s| s >= inst.n())
        || result
            .selection
            .iter()
            .any(|s| inst.constraint_value(x, s) > tol::FEASIBLE)
    {
        return false;
    }
    if !tol::rel_close(inst.objective_value(x), result.value, 1e-6) {
        return false;
    }
    match oracle::project(inst, &result.selection) {
        Ok(r) if r.is_feasible() => tol::rel_close(r.value, result.value, 1e-6),
        _ => false,
    }
}
