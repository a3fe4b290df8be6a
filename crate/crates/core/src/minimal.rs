//! Minimal subsets: the selections induced by optimal solutions that cannot
//! drop any scenario without violating the chance constraint, and the
//! brute-force optimum obtained by enumerating them.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CcpError, Result};
use crate::instance::{IndexSet, PbpInstance, ScenarioSet};
use crate::oracle::{self, ProjectionStatus};
use crate::solver::{SolveResult, SolveStatus};
use crate::tol;

/// Largest support size accepted by the enumerators.
pub const ENUMERATION_LIMIT: usize = 25;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MinimalSubsetFamily {
    pub subsets: Vec<IndexSet>,
    pub exhausted: bool,
}

/// `1 - tau <= mass(S) < 1 - tau + min_{s in S} pi_s`, with the symmetric mass
/// slack on both sides.
pub fn is_minimal(scen: &ScenarioSet, tau: f64, set: &IndexSet) -> bool {
    if set.is_empty() {
        return false;
    }
    let mass = scen.mass(set);
    let min_p = set.iter().map(|s| scen.probs[s]).fold(f64::INFINITY, f64::min);
    tol::mass_reaches(mass, tau) && mass < 1.0 - tau + min_p - tol::MASS
}

/// Size of every minimal subset of an equiprobable support of size `n`.
pub fn equiprobable_size(n: usize, tau: f64) -> usize {
    let k = (n as f64 * (1.0 - tau) - n as f64 * tol::MASS).ceil();
    (k.max(1.0) as usize).min(n)
}

/// All subsets of size `ceil(N (1 - tau))` in lexicographic order.
pub fn enumerate_equiprobable(n: usize, tau: f64) -> Result<MinimalSubsetFamily> {
    if n > ENUMERATION_LIMIT {
        return Err(CcpError::Config(format!(
            "refusing to enumerate minimal subsets for N = {n} > {ENUMERATION_LIMIT}"
        )));
    }
    Ok(MinimalSubsetFamily {
        subsets: Combinations::new(n, equiprobable_size(n, tau)).collect(),
        exhausted: true,
    })
}

/// Lexicographic `k`-combinations of `0..n`.
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = IndexSet;

    fn next(&mut self) -> Option<IndexSet> {
        if self.done {
            return None;
        }
        let out = IndexSet::from(self.idx.clone());
        let k = self.idx.len();
        let mut i = k;
        while i > 0 && self.idx[i - 1] == self.n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            self.done = true;
        } else {
            self.idx[i - 1] += 1;
            for j in i..k {
                self.idx[j] = self.idx[j - 1] + 1;
            }
        }
        Some(out)
    }
}

/// Depth-first generator of minimal subsets for arbitrary probabilities.
///
/// Scenarios are visited by decreasing probability (ties by index) and
/// included before being excluded. A branch is cut when the remaining mass can
/// no longer reach `1 - tau`, and closed as soon as the selection reaches it:
/// further inclusions would only add mass while lowering the minimum
/// probability, so they can never be minimal.
pub struct MinimalSubsetIter<'a> {
    scen: &'a ScenarioSet,
    tau: f64,
    order: Vec<usize>,
    /// `suffix[i]` = mass of `order[i..]`.
    suffix: Vec<f64>,
    stack: Vec<usize>,
    mass: f64,
    next_pos: usize,
    done: bool,
}

impl<'a> MinimalSubsetIter<'a> {
    pub fn new(scen: &'a ScenarioSet, tau: f64) -> Self {
        let mut order: Vec<usize> = (0..scen.len()).collect();
        order.sort_by(|&a, &b| scen.probs[b].total_cmp(&scen.probs[a]).then(a.cmp(&b)));
        let mut suffix = vec![0.0; order.len() + 1];
        for i in (0..order.len()).rev() {
            suffix[i] = suffix[i + 1] + scen.probs[order[i]];
        }
        MinimalSubsetIter {
            scen,
            tau,
            order,
            suffix,
            stack: Vec::new(),
            mass: 0.0,
            next_pos: 0,
            done: false,
        }
    }

    fn current(&self) -> IndexSet {
        self.stack.iter().map(|&pos| self.order[pos]).collect()
    }

    fn pop(&mut self) -> bool {
        match self.stack.pop() {
            Some(pos) => {
                self.mass -= self.scen.probs[self.order[pos]];
                self.next_pos = pos + 1;
                true
            }
            None => false,
        }
    }
}

impl Iterator for MinimalSubsetIter<'_> {
    type Item = IndexSet;

    fn next(&mut self) -> Option<IndexSet> {
        while !self.done {
            let n = self.order.len();
            let reachable = self.next_pos < n
                && tol::mass_reaches(self.mass + self.suffix[self.next_pos], self.tau);
            if !reachable {
                if !self.pop() {
                    self.done = true;
                }
                continue;
            }
            let pos = self.next_pos;
            self.stack.push(pos);
            self.mass += self.scen.probs[self.order[pos]];
            self.next_pos = pos + 1;
            let set = self.current();
            if tol::mass_reaches(self.scen.mass(&set), self.tau) {
                self.pop();
                if is_minimal(self.scen, self.tau, &set) {
                    return Some(set);
                }
            }
        }
        None
    }
}

/// The first minimal subset, in generator order, that is not in `seen`.
pub fn next_minimal_subset(
    scen: &ScenarioSet,
    tau: f64,
    seen: &MinimalSubsetFamily,
) -> Option<IndexSet> {
    MinimalSubsetIter::new(scen, tau).find(|s| !seen.subsets.contains(s))
}

/// Every minimal subset, through the closed form when probabilities are equal.
pub fn minimal_subsets(scen: &ScenarioSet, tau: f64) -> Box<dyn Iterator<Item = IndexSet> + Send + '_> {
    if scen.is_equiprobable() {
        Box::new(Combinations::new(scen.len(), equiprobable_size(scen.len(), tau)))
    } else {
        Box::new(MinimalSubsetIter::new(scen, tau))
    }
}

/// Repeatedly drops the selected scenario of smallest probability (highest
/// index among ties) until the selection is minimal. The mass stays at least
/// `1 - tau` throughout.
pub fn minimal_reduction(scen: &ScenarioSet, tau: f64, set: &IndexSet) -> IndexSet {
    let mut out = set.clone();
    while out.len() > 1 && !is_minimal(scen, tau, &out) {
        let drop = out
            .iter()
            .min_by(|&a, &b| scen.probs[a].total_cmp(&scen.probs[b]).then(b.cmp(&a)))
            .unwrap();
        let candidate = out.difference(&IndexSet::singleton(drop));
        if !tol::mass_reaches(scen.mass(&candidate), tau) {
            break;
        }
        out = candidate;
    }
    out
}

/// Optimum by enumerating every minimal subset and evaluating `nu(S)`.
pub fn brute_force_solve(inst: &PbpInstance) -> Result<SolveResult> {
    let n = inst.n();
    if n > ENUMERATION_LIMIT {
        return Err(CcpError::Config(format!(
            "brute force is limited to N <= {ENUMERATION_LIMIT}, got {n}"
        )));
    }
    let start = Instant::now();
    type Best = Option<(f64, IndexSet, Vec<f64>)>;
    let better = |a: Best, b: Best| -> Best {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => {
                if (b.0, &b.1) < (a.0, &a.1) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        }
    };
    let (best, count) = minimal_subsets(&inst.scenarios, inst.tau)
        .par_bridge()
        .map(|set| -> Result<(Best, u64)> {
            let res = oracle::project(inst, &set)?;
            match res.status {
                ProjectionStatus::Feasible => Ok((Some((res.value, set, res.point)), 1)),
                ProjectionStatus::Empty => Ok((None, 1)),
                ProjectionStatus::MaxIter => Err(CcpError::OracleMaxIter {
                    subset: set.one_based(),
                }),
            }
        })
        .try_reduce(|| (None, 0), |a, b| Ok((better(a.0, b.0), a.1 + b.1)))?;
    let wall_ms = start.elapsed().as_millis() as u64;
    Ok(match best {
        Some((value, selection, x)) => SolveResult {
            status: SolveStatus::Optimal,
            value,
            x: Some(x),
            selection,
            lower: value,
            upper: value,
            nodes: count,
            wall_ms,
        },
        None => SolveResult::infeasible(count, wall_ms),
    })
}
