//! Continuous convex computations: the subproblem value `nu(S)`, coordinate
//! enclosures, big-M bounds and distance-based positivity tests.

mod ball;
mod dykstra;
mod polytope;

use serde::Serialize;

use crate::error::{CcpError, Result};
use crate::instance::{IndexSet, Norm, PbpInstance};
use crate::tol;

pub use ball::project_ball;
pub use dykstra::{dykstra, DykstraOutcome, MAX_CYCLES};
pub use polytope::SlabPolytope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionStatus {
    Feasible,
    /// The region is certified empty.
    Empty,
    /// No answer within the iteration budget; never a certificate.
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    /// Euclidean distance from the target to `point`; `+inf` when empty.
    pub value: f64,
    pub status: ProjectionStatus,
}

impl ProjectionResult {
    fn empty() -> Self {
        ProjectionResult {
            point: Vec::new(),
            value: f64::INFINITY,
            status: ProjectionStatus::Empty,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == ProjectionStatus::Feasible
    }
}

/// Closed coordinate box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigMBound {
    pub value: f64,
    /// Safe set the enclosure was built from.
    pub safe: IndexSet,
    /// Objective cap the enclosure was built from (`+inf` when uncapped).
    pub f_cap: f64,
}

/// The box `[-R_bar, R_bar]^p` intersected with a list of constraint balls and
/// optionally with an axis-aligned enclosure of an objective cap.
#[derive(Debug, Clone)]
pub struct Region {
    pub dim: usize,
    pub box_radius: f64,
    pub balls: Vec<(Vec<f64>, f64, Norm)>,
    pub cap: Option<(Vec<f64>, f64)>,
}

/// Half-width of the box enclosing `{x : ||x - c||_o <= f}` for any of the
/// supported norms, padded against rounding of `c_i +- f`.
fn cap_half_width(center: &[f64], f: f64) -> f64 {
    let m = center.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    f + 1e-12 * (1.0 + m + f)
}

impl Region {
    /// `X(S)`: the box intersected with the balls of the scenarios in `set`.
    pub fn new(inst: &PbpInstance, set: &IndexSet) -> Result<Self> {
        if inst.constraint == Norm::L2 {
            return Err(CcpError::InvalidInstance(vec![
                "constraint norm must be L1 or Linf".into(),
            ]));
        }
        Ok(Region {
            dim: inst.dim(),
            box_radius: inst.box_radius,
            balls: set
                .iter()
                .map(|s| (inst.point(s).to_vec(), inst.radius, inst.constraint))
                .collect(),
            cap: None,
        })
    }

    /// Adds the enclosure of `{x : F(x) <= f_cap}`; a no-op for `f_cap = inf`.
    pub fn with_cap(mut self, center: &[f64], f_cap: f64) -> Self {
        if f_cap.is_finite() {
            self.cap = Some((center.to_vec(), cap_half_width(center, f_cap)));
        }
        self
    }

    pub fn slabs(&self) -> SlabPolytope {
        let mut poly = SlabPolytope::cube(self.dim, self.box_radius);
        if let Some((c, h)) = &self.cap {
            poly.clip_box(c, *h);
        }
        for (c, r, norm) in &self.balls {
            poly.add_ball(c, *r, *norm);
        }
        poly
    }

    /// Coordinate box containing the region: the intersection of the outer
    /// box, each ball's coordinate enclosure and the cap. `None` when the
    /// intervals are disjoint, which certifies the region is empty.
    pub fn bounding_box(&self) -> Option<IntervalBox> {
        let mut lo = vec![-self.box_radius; self.dim];
        let mut hi = vec![self.box_radius; self.dim];
        let mut clip = |c: &[f64], h: f64| {
            for i in 0..lo.len() {
                lo[i] = lo[i].max(c[i] - h);
                hi[i] = hi[i].min(c[i] + h);
            }
        };
        if let Some((c, h)) = &self.cap {
            clip(c, *h);
        }
        for (c, r, _) in &self.balls {
            clip(c, *r);
        }
        lo.iter().zip(&hi).all(|(l, h)| l <= h).then_some(IntervalBox { lo, hi })
    }

    /// Membership with absolute slack `eps` on every constraint.
    pub fn contains(&self, x: &[f64], eps: f64) -> bool {
        x.iter().all(|v| v.abs() <= self.box_radius + eps)
            && self.cap.as_ref().is_none_or(|(c, h)| Norm::Linf.dist(x, c) <= h + eps)
            && self.balls.iter().all(|(c, r, n)| n.dist(x, c) <= r + eps)
    }

    /// Euclidean projection of `target` onto the region.
    ///
    /// Solved exactly on the slab form; if rounding ever leaves the answer
    /// outside the feasibility tolerance, Dykstra's method takes over.
    pub fn project(&self, target: &[f64]) -> ProjectionResult {
        match self.slabs().project(target) {
            None => ProjectionResult::empty(),
            Some(x) if self.contains(&x, tol::FEASIBLE) => ProjectionResult {
                value: Norm::L2.dist(&x, target),
                point: x,
                status: ProjectionStatus::Feasible,
            },
            Some(_) => self.dykstra(target),
        }
    }

    /// Dykstra's alternating projections onto the box (with cap) and each ball.
    /// Reports `MaxIter` unless it converges to a feasible point: the method
    /// has no finite emptiness test, so it never claims `Empty` on its own.
    pub fn dykstra(&self, target: &[f64]) -> ProjectionResult {
        let mut lo = vec![-self.box_radius; self.dim];
        let mut hi = vec![self.box_radius; self.dim];
        if let Some((c, h)) = &self.cap {
            for i in 0..self.dim {
                lo[i] = lo[i].max(c[i] - h);
                hi[i] = hi[i].min(c[i] + h);
            }
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) || self.bounding_box().is_none() {
            return ProjectionResult::empty();
        }
        let balls: Vec<(&[f64], f64, Norm)> =
            self.balls.iter().map(|(c, r, n)| (c.as_slice(), *r, *n)).collect();
        let out = dykstra(target, &lo, &hi, &balls, MAX_CYCLES);
        let status = if out.converged && self.contains(&out.point, tol::FEASIBLE) {
            ProjectionStatus::Feasible
        } else {
            ProjectionStatus::MaxIter
        };
        ProjectionResult {
            value: Norm::L2.dist(&out.point, target),
            point: out.point,
            status,
        }
    }
}

/// `nu(S)`: the closest point to `x_bar` in `X(S)` and its objective value.
pub fn project(inst: &PbpInstance, set: &IndexSet) -> Result<ProjectionResult> {
    if inst.objective != Norm::L2 {
        return Err(CcpError::UnsupportedObjective(inst.objective.to_string()));
    }
    Ok(Region::new(inst, set)?.project(&inst.x_bar))
}

/// Coordinate enclosure of `{x in X(S) : F(x) <= f_cap}`.
pub fn bounding_box(inst: &PbpInstance, set: &IndexSet, f_cap: f64) -> Result<Option<IntervalBox>> {
    Ok(Region::new(inst, set)?.with_cap(&inst.x_bar, f_cap).bounding_box())
}

/// Upper bound on `max c(x, xi_s)` over `{x in X(safe) : F(x) <= f_cap}`,
/// evaluated at the farthest corner of the coordinate enclosure.
///
/// An empty enclosure is reported as an inconsistency: if `safe` really is
/// safe and `f_cap >= F*`, the capped region holds an optimal point.
pub fn big_m(inst: &PbpInstance, s: usize, safe: &IndexSet, f_cap: f64) -> Result<BigMBound> {
    let b = bounding_box(inst, safe, f_cap)?.ok_or_else(|| {
        CcpError::Inconsistent(format!(
            "the enclosure of the safe set {:?} under the objective cap {f_cap} is empty",
            safe.one_based()
        ))
    })?;
    let xi = inst.point(s);
    let far = (0..inst.dim()).map(|i| (b.lo[i] - xi[i]).abs().max((b.hi[i] - xi[i]).abs()));
    let reach = match inst.constraint {
        Norm::Linf => far.fold(0.0, f64::max),
        _ => far.sum(),
    };
    Ok(BigMBound {
        value: reach - inst.radius,
        safe: safe.clone(),
        f_cap,
    })
}

/// Certified lower bound on `min c(x, xi_s)` over `{x in X(safe) : F(x) <= f_cap}`
/// from the Euclidean distance of `xi_s` to the (enclosed) region and norm
/// equivalence. `+inf` when the region is empty, `-inf` when the oracle gives
/// no answer.
pub fn min_distance_lb(inst: &PbpInstance, s: usize, safe: &IndexSet, f_cap: f64) -> f64 {
    let Ok(region) = Region::new(inst, safe) else {
        return f64::NEG_INFINITY;
    };
    let res = region.with_cap(&inst.x_bar, f_cap).project(inst.point(s));
    match res.status {
        ProjectionStatus::Empty => f64::INFINITY,
        ProjectionStatus::MaxIter => f64::NEG_INFINITY,
        ProjectionStatus::Feasible if res.value == 0.0 => -inst.radius,
        ProjectionStatus::Feasible => {
            let kappa = match inst.constraint {
                Norm::Linf => 1.0 / (inst.dim() as f64).sqrt(),
                _ => 1.0,
            };
            res.value * (1.0 - 1e-12) * kappa - inst.radius
        }
    }
}
