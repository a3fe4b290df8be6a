//! The individual presolve stages. Each reads an immutable snapshot of the
//! partition and returns the fixings it could certify.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{CcpError, Result};
use crate::geometry::{enclosed_indices, separability_check, vertex_indices};
use crate::instance::{IndexSet, PbpInstance};
use crate::oracle::{self, big_m, min_distance_lb, ProjectionStatus};
use crate::solver::refine_incumbent;
use crate::tol;

use super::certificate::{exceeds, Certificate};
use super::{Bounds, InequalityKind, PartitionState, ValidInequality};

/// Objective cap used for enclosures: the upper bound plus the pruning slack,
/// so that rounding in `upper` can never cut off an optimal point.
pub(crate) fn cap(upper: f64) -> f64 {
    if upper.is_finite() {
        upper + tol::PRUNE * (1.0 + upper.abs())
    } else {
        upper
    }
}

fn nu_value(status: ProjectionStatus, value: f64) -> Option<f64> {
    match status {
        ProjectionStatus::Feasible => Some(value),
        ProjectionStatus::Empty => Some(f64::INFINITY),
        ProjectionStatus::MaxIter => None,
    }
}

/// Solves every singleton subproblem. The smallest value is a lower bound,
/// chance-feasible minimizers give upper bounds, and scenarios whose singleton
/// value already exceeds the upper bound are pruned.
pub fn singleton_bounds(inst: &PbpInstance) -> Result<(Bounds, PartitionState, Vec<Certificate>)> {
    let solved: Vec<_> = (0..inst.n())
        .into_par_iter()
        .map(|s| oracle::project(inst, &IndexSet::singleton(s)))
        .collect::<Result<_>>()?;
    let mut bounds = Bounds::unbounded();
    let mut complete = true;
    let mut lower = f64::INFINITY;
    for res in &solved {
        match nu_value(res.status, res.value) {
            Some(v) => lower = lower.min(v),
            None => complete = false,
        }
        if res.is_feasible() {
            if let Some(inc) = refine_incumbent(inst, &res.point)? {
                bounds.offer(inc);
            }
        }
    }
    if complete {
        bounds.raise_lower(lower);
    }
    let mut partition = PartitionState::default();
    let mut certs = Vec::new();
    for (s, res) in solved.iter().enumerate() {
        if let Some(v) = nu_value(res.status, res.value) {
            if exceeds(v, bounds.upper) {
                partition.pruned.insert(s);
                certs.push(Certificate::SingletonExclusion {
                    s,
                    nu: v,
                    upper: bounds.upper,
                });
            }
        }
    }
    Ok((bounds, partition, certs))
}

/// Adds every selectable scenario that cannot be separated from a sound
/// subset, in rounds over partition snapshots until nothing changes or the
/// time budget for the whole stage is spent.
pub fn safe_by_separability(
    inst: &PbpInstance,
    partition: &PartitionState,
    time_limit: Duration,
) -> (PartitionState, Vec<Certificate>) {
    let start = Instant::now();
    let mut part = partition.clone();
    let mut certs = Vec::new();
    loop {
        if tol::mass_reaches(inst.scenarios.mass(&part.safe), inst.tau) {
            break;
        }
        let snap = part.clone();
        let found: Vec<usize> = snap
            .selectable(inst.n())
            .as_slice()
            .par_iter()
            .copied()
            .filter(|&s| {
                start.elapsed() < time_limit
                    && !separability_check(&inst.scenarios, s, &snap.safe, &snap.pruned, inst.tau)
                        .separable
            })
            .collect();
        if found.is_empty() {
            break;
        }
        for s in found {
            part.safe.insert(s);
            certs.push(Certificate::NonSeparable {
                s,
                safe: snap.safe.clone(),
                pruned: snap.pruned.clone(),
            });
        }
        if start.elapsed() >= time_limit {
            break;
        }
    }
    (part, certs)
}

/// Adds every scenario lying in the closed hull of the safe set. Hitting a
/// pruned scenario means an upstream fixing was unsound, which is reported.
pub fn expand_safe_hull(inst: &PbpInstance, partition: &PartitionState) -> Result<(PartitionState, Vec<Certificate>)> {
    let mut part = partition.clone();
    let mut certs = Vec::new();
    if part.safe.is_empty() {
        return Ok((part, certs));
    }
    let inside = enclosed_indices(&inst.scenarios.points, &part.safe);
    if let Some(bad) = inside.iter().find(|&s| part.pruned.contains(s)) {
        return Err(CcpError::Inconsistent(format!(
            "pruned scenario {} lies in the hull of the safe set",
            bad + 1
        )));
    }
    for s in inside.difference(&part.safe).iter() {
        certs.push(Certificate::HullExpansion {
            s,
            generators: partition.safe.clone(),
        });
        part.safe.insert(s);
    }
    Ok((part, certs))
}

/// Which of the two positivity tests to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Positivity {
    pub non_positive: bool,
    pub strict_positive: bool,
}

/// Safe-adds scenarios whose big-M bound is nonpositive and prunes those whose
/// constraint is provably violated over the capped safe region.
///
/// Without a finite upper bound an empty safe region only means the problem
/// is infeasible, so it yields no fixing.
pub fn positivity_pass(
    inst: &PbpInstance,
    partition: &PartitionState,
    bounds: &Bounds,
    which: Positivity,
) -> Result<(PartitionState, Vec<Certificate>)> {
    let f_cap = cap(bounds.upper);
    let snap = partition.clone();
    let certs: Vec<Option<Certificate>> = snap
        .selectable(inst.n())
        .as_slice()
        .par_iter()
        .map(|&s| -> Result<Option<Certificate>> {
            if which.non_positive {
                match big_m(inst, s, &snap.safe, f_cap) {
                    Ok(m) if m.value <= 0.0 => {
                        return Ok(Some(Certificate::NonPositive {
                            s,
                            big_m: m.value,
                            safe: snap.safe.clone(),
                            f_cap,
                        }))
                    }
                    Ok(_) => {}
                    Err(e) if bounds.upper.is_finite() => return Err(e),
                    Err(_) => return Ok(None),
                }
            }
            if which.strict_positive {
                let lb = min_distance_lb(inst, s, &snap.safe, f_cap);
                if lb > 0.0 && (lb.is_finite() || bounds.upper.is_finite()) {
                    return Ok(Some(Certificate::StrictPositive {
                        s,
                        lower_bound: lb,
                        safe: snap.safe.clone(),
                        f_cap,
                    }));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let mut part = snap.clone();
    let certs: Vec<Certificate> = certs.into_iter().flatten().collect();
    for c in &certs {
        if c.marks_safe() {
            part.safe.insert(c.scenario());
        } else {
            part.pruned.insert(c.scenario());
        }
    }
    Ok((part, certs))
}

/// Evaluates `nu(safe + s)` for every selectable `s`: minimizers may improve
/// the upper bound, values above it prune `s`, and their minimum is a lower
/// bound whenever the safe set is not yet sound.
pub fn suboptimality_pass(
    inst: &PbpInstance,
    partition: &PartitionState,
    bounds: &Bounds,
) -> Result<(PartitionState, Bounds, Vec<Certificate>)> {
    let mut part = partition.clone();
    let mut bounds = bounds.clone();
    let mut certs = Vec::new();
    if tol::mass_reaches(inst.scenarios.mass(&part.safe), inst.tau) {
        return Ok((part, bounds, certs));
    }
    let selectable = partition.selectable(inst.n());
    let solved: Vec<_> = selectable
        .as_slice()
        .par_iter()
        .map(|&s| oracle::project(inst, &partition.safe.with(s)))
        .collect::<Result<_>>()?;
    let mut complete = !selectable.is_empty();
    let mut lower = f64::INFINITY;
    for res in &solved {
        match nu_value(res.status, res.value) {
            Some(v) => lower = lower.min(v),
            None => complete = false,
        }
        if res.is_feasible() {
            if let Some(inc) = refine_incumbent(inst, &res.point)? {
                bounds.offer(inc);
            }
        }
    }
    if complete {
        bounds.raise_lower(lower);
    }
    for (s, res) in selectable.iter().zip(&solved) {
        if let Some(v) = nu_value(res.status, res.value) {
            if exceeds(v, bounds.upper) {
                part.pruned.insert(s);
                certs.push(Certificate::SubOptimal {
                    s,
                    nu: v,
                    safe: partition.safe.clone(),
                    upper: bounds.upper,
                });
            }
        }
    }
    Ok((part, bounds, certs))
}

/// Hull inequalities from two seed subsets: the safe set (when it spans a
/// full-dimensional simplex or more) and every non-pruned scenario.
///
/// For a seed `S` with vertex indices `V` and enclosed indices `E`, each
/// `t in E \ V` gets `z_t >= sum_V z - |V| + 1`: enforcing all vertices
/// enforces everything in their hull. The cut `sum_V z <= |V| - 1` is added
/// for the non-pruned seed when probabilities are equal, `E` carries at least
/// `1 - tau + 1/N` of the mass, and some vertex lies outside the hull of the
/// safe set (so an optimal selection can drop it without touching fixings).
pub fn generate_inequalities(inst: &PbpInstance, partition: &PartitionState, tau: f64) -> Vec<ValidInequality> {
    let pts = &inst.scenarios.points;
    let n = inst.n();
    let all = IndexSet::full(n).difference(&partition.pruned);
    let mut seeds: Vec<IndexSet> = Vec::new();
    if partition.safe.len() > inst.dim() {
        seeds.push(partition.safe.clone());
    }
    if !all.is_empty() && !seeds.contains(&all) {
        seeds.push(all.clone());
    }
    let mut out = Vec::new();
    for seed in &seeds {
        let verts = vertex_indices(pts, seed);
        let enclosed = enclosed_indices(pts, seed);
        let rhs = verts.len() as i64 - 1;
        for t in enclosed.difference(&verts).iter() {
            out.push(ValidInequality {
                kind: InequalityKind::HullInduction,
                target: Some(t),
                vertex_set: verts.clone(),
                rhs,
            });
        }
        if seed == &all && inst.scenarios.is_equiprobable() {
            let heavy = tol::mass_reaches(inst.scenarios.mass(&enclosed) - 1.0 / n as f64, tau);
            let safe_hull = if partition.safe.is_empty() {
                IndexSet::new()
            } else {
                enclosed_indices(pts, &partition.safe)
            };
            if heavy && !verts.is_subset(&safe_hull) {
                out.push(ValidInequality {
                    kind: InequalityKind::HullCut,
                    target: None,
                    vertex_set: verts.clone(),
                    rhs,
                });
            }
        }
    }
    out
}
