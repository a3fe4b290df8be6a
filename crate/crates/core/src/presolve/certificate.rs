use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::geometry::{hull, separability_check};
use crate::instance::{IndexSet, PbpInstance};
use crate::oracle::{self, big_m, min_distance_lb};
use crate::tol;

pub(crate) fn one_based<S: Serializer>(s: &usize, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_u64(*s as u64 + 1)
}

/// Strict `value > upper` with the pruning slack.
pub(crate) fn exceeds(value: f64, upper: f64) -> bool {
    upper.is_finite() && value > upper + tol::PRUNE * (1.0 + upper.abs())
}

/// Why a scenario was fixed, with enough data to re-check the step on its own.
/// Snapshots record the partition the step relied on.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// Pruned: the singleton subproblem alone exceeds the upper bound.
    SingletonExclusion {
        #[serde(serialize_with = "one_based")]
        s: usize,
        nu: f64,
        upper: f64,
    },
    /// Safe: no sound subset avoiding `pruned` and containing `safe` has a
    /// hull that misses the scenario.
    NonSeparable {
        #[serde(serialize_with = "one_based")]
        s: usize,
        safe: IndexSet,
        pruned: IndexSet,
    },
    /// Safe: the scenario lies in the hull of safe scenarios.
    HullExpansion {
        #[serde(serialize_with = "one_based")]
        s: usize,
        generators: IndexSet,
    },
    /// Safe: the constraint cannot be violated anywhere in the capped region.
    NonPositive {
        #[serde(serialize_with = "one_based")]
        s: usize,
        big_m: f64,
        safe: IndexSet,
        f_cap: f64,
    },
    /// Pruned: the constraint is violated everywhere in the capped region.
    StrictPositive {
        #[serde(serialize_with = "one_based")]
        s: usize,
        lower_bound: f64,
        safe: IndexSet,
        f_cap: f64,
    },
    /// Pruned: enforcing the scenario on top of the safe set already exceeds
    /// the upper bound.
    SubOptimal {
        #[serde(serialize_with = "one_based")]
        s: usize,
        nu: f64,
        safe: IndexSet,
        upper: f64,
    },
}

impl Certificate {
    pub fn scenario(&self) -> usize {
        match *self {
            Certificate::SingletonExclusion { s, .. }
            | Certificate::NonSeparable { s, .. }
            | Certificate::HullExpansion { s, .. }
            | Certificate::NonPositive { s, .. }
            | Certificate::StrictPositive { s, .. }
            | Certificate::SubOptimal { s, .. } => s,
        }
    }

    /// `true` for fixings to the safe set, `false` for prunings.
    pub fn marks_safe(&self) -> bool {
        matches!(
            self,
            Certificate::NonSeparable { .. }
                | Certificate::HullExpansion { .. }
                | Certificate::NonPositive { .. }
        )
    }
}

/// Re-evaluates the predicate behind a certificate from its recorded data.
pub fn replay_certificate(inst: &PbpInstance, cert: &Certificate) -> Result<bool> {
    let nu = |set: &IndexSet| -> Result<f64> {
        let r = oracle::project(inst, set)?;
        Ok(match r.status {
            oracle::ProjectionStatus::Feasible => r.value,
            oracle::ProjectionStatus::Empty => f64::INFINITY,
            oracle::ProjectionStatus::MaxIter => f64::NAN,
        })
    };
    Ok(match cert {
        Certificate::SingletonExclusion { s, upper, .. } => {
            exceeds(nu(&IndexSet::singleton(*s))?, *upper)
        }
        Certificate::NonSeparable { s, safe, pruned } => {
            !separability_check(&inst.scenarios, *s, safe, pruned, inst.tau).separable
        }
        Certificate::HullExpansion { s, generators } => {
            let pts: Vec<Vec<f64>> = generators.iter().map(|g| inst.point(g).to_vec()).collect();
            !pts.is_empty() && hull(&pts).contains(inst.point(*s))
        }
        Certificate::NonPositive { s, safe, f_cap, .. } => big_m(inst, *s, safe, *f_cap)?.value <= 0.0,
        Certificate::StrictPositive { s, safe, f_cap, .. } => {
            min_distance_lb(inst, *s, safe, *f_cap) > 0.0
        }
        Certificate::SubOptimal { s, safe, upper, .. } => exceeds(nu(&safe.with(*s))?, *upper),
    })
}
