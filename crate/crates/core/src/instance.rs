//! Problem data for the probabilistic ball projection family.
//!
//! An instance asks for the point closest to `x_bar` (in the objective norm)
//! inside the box `[-R_bar, R_bar]^p` that lies within distance `R` (in the
//! constraint norm) of the random scenario `xi` with probability at least
//! `1 - tau`. Scenarios have finite support.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CcpError, Result};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Norm::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Norm::Linf => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "L1",
            Norm::L2 => "L2",
            Norm::Linf => "Linf",
        })
    }
}

/// Sorted, duplicate-free set of 0-based scenario indices.
///
/// Serialized 1-based to match the `[N] = {1..N}` convention of reports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new() -> Self {
        IndexSet(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        IndexSet((0..n).collect())
    }

    pub fn singleton(s: usize) -> Self {
        IndexSet(vec![s])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, s: usize) -> bool {
        self.0.binary_search(&s).is_ok()
    }

    /// Returns true if `s` was not already present.
    pub fn insert(&mut self, s: usize) -> bool {
        match self.0.binary_search(&s) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, s);
                true
            }
        }
    }

    pub fn remove(&mut self, s: usize) -> bool {
        match self.0.binary_search(&s) {
            Ok(pos) => {
                self.0.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn with(&self, s: usize) -> Self {
        let mut out = self.clone();
        out.insert(s);
        out
    }

    pub fn union(&self, other: &IndexSet) -> Self {
        self.iter().chain(other.iter()).collect()
    }

    pub fn difference(&self, other: &IndexSet) -> Self {
        self.iter().filter(|s| !other.contains(*s)).collect()
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.iter().all(|s| !other.contains(s))
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.iter().all(|s| other.contains(s))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|s| s + 1).collect()
    }

    pub fn from_one_based(idx: &[usize]) -> Self {
        idx.iter().map(|s| s - 1).collect()
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        IndexSet(v)
    }
}

impl From<Vec<usize>> for IndexSet {
    fn from(v: Vec<usize>) -> Self {
        v.into_iter().collect()
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IndexSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<usize>::deserialize(deserializer)?;
        if raw.contains(&0) {
            return Err(serde::de::Error::custom("scenario indices are 1-based"));
        }
        Ok(IndexSet::from_one_based(&raw))
    }
}

/// Finite support of the random vector: `N` points in `R^p` with masses.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

impl ScenarioSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, probs: Vec<f64>) -> Self {
        ScenarioSet { dim, points, probs }
    }

    pub fn equiprobable(dim: usize, points: Vec<Vec<f64>>) -> Self {
        let n = points.len();
        ScenarioSet {
            dim,
            points,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mass(&self, set: &IndexSet) -> f64 {
        set.iter().map(|s| self.probs[s]).sum()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// All masses equal up to rounding.
    pub fn is_equiprobable(&self) -> bool {
        let first = self.probs[0];
        self.probs.iter().all(|p| (p - first).abs() <= 1e-12)
    }
}

/// A full problem datum.
#[derive(Debug, Clone, PartialEq)]
pub struct PbpInstance {
    pub scenarios: ScenarioSet,
    pub x_bar: Vec<f64>,
    /// Ball radius `R` of the constraint.
    pub radius: f64,
    /// Half-width `R_bar` of the deterministic box.
    pub box_radius: f64,
    /// Objective norm `o`.
    pub objective: Norm,
    /// Constraint norm `o~`.
    pub constraint: Norm,
    pub tau: f64,
}

/// Outcome of testing the probabilistic constraint at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChanceEvaluation {
    pub satisfied_mass: f64,
    pub satisfied: IndexSet,
    pub feasible: bool,
}

/// One entry of the log produced by [`PbpInstance::normalize`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Adjustment {
    /// Scenario (1-based, original numbering) with zero mass removed.
    DroppedZeroMass { scenario: usize },
    /// Scenario whose ball misses the box removed; its mass is charged to tau.
    DroppedInfeasible { scenario: usize, mass: f64 },
    /// `unnormalized` is tau minus the removed masses, measured against the
    /// original total; `renormalized` is the same budget after rescaling the
    /// surviving masses to sum to one.
    TauUpdated {
        from: f64,
        unnormalized: f64,
        renormalized: f64,
    },
}

impl PbpInstance {
    pub fn dim(&self) -> usize {
        self.scenarios.dim
    }

    pub fn n(&self) -> usize {
        self.scenarios.len()
    }

    pub fn point(&self, s: usize) -> &[f64] {
        &self.scenarios.points[s]
    }

    pub fn prob(&self, s: usize) -> f64 {
        self.scenarios.probs[s]
    }

    /// Objective `F(x) = ||x - x_bar||_o`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.dist(x, &self.x_bar)
    }

    /// Constraint `c(x, xi_s) = ||x - xi_s||_o~ - R`.
    pub fn constraint_value(&self, x: &[f64], s: usize) -> f64 {
        self.constraint.dist(x, self.point(s)) - self.radius
    }

    /// Whether the box intersects the ball of scenario `s`. Exact: the
    /// constraint norm is separable over coordinates, so the nearest box point
    /// to the center is its coordinate clamp.
    pub fn region_nonempty(&self, s: usize) -> bool {
        let gaps = self
            .point(s)
            .iter()
            .map(|c| (c.abs() - self.box_radius).max(0.0));
        let d = match self.constraint {
            Norm::L1 => gaps.sum(),
            Norm::Linf => gaps.fold(0.0, f64::max),
            Norm::L2 => gaps.map(|g| g * g).sum::<f64>().sqrt(),
        };
        d <= self.radius
    }

    /// Lists every violated invariant; empty when the instance is well formed.
    pub fn validate(&self) -> Vec<String> {
        self.violations(false)
    }

    fn violations(&self, allow_zero_mass: bool) -> Vec<String> {
        let mut out = Vec::new();
        let p = self.scenarios.dim;
        if p != 2 && p != 3 {
            out.push(format!("dimension p must be 2 or 3, got {p}"));
        }
        let n = self.scenarios.points.len();
        if n == 0 {
            out.push("at least one scenario is required".to_string());
        }
        if self.scenarios.probs.len() != n {
            out.push(format!(
                "{} probabilities given for {n} scenarios",
                self.scenarios.probs.len()
            ));
        }
        for (i, xi) in self.scenarios.points.iter().enumerate() {
            if xi.len() != p {
                out.push(format!(
                    "scenario {} has {} coordinates, expected {p}",
                    i + 1,
                    xi.len()
                ));
            } else if xi.iter().any(|c| !c.is_finite()) {
                out.push(format!("scenario {} has non-finite coordinates", i + 1));
            }
        }
        for (i, &pi) in self.scenarios.probs.iter().enumerate() {
            let bad = if allow_zero_mass { pi < 0.0 } else { pi <= 0.0 };
            if bad || !pi.is_finite() {
                out.push(format!("scenario {} has non-positive probability {pi}", i + 1));
            }
        }
        let total: f64 = self.scenarios.probs.iter().sum();
        if n > 0 && (total - 1.0).abs() > tol::MASS {
            out.push(format!("probabilities sum to {total}"));
        }
        if self.x_bar.len() != p {
            out.push(format!("x_bar has {} coordinates, expected {p}", self.x_bar.len()));
        } else if self.x_bar.iter().any(|c| !c.is_finite()) {
            out.push("x_bar has non-finite coordinates".to_string());
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            out.push(format!("R must be positive and finite, got {}", self.radius));
        }
        if !(self.box_radius > 0.0 && self.box_radius.is_finite()) {
            out.push(format!(
                "R_bar must be positive and finite, got {}",
                self.box_radius
            ));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            out.push("tau must lie in (0,1)".to_string());
        }
        if self.constraint == Norm::L2 {
            out.push("constraint norm must be L1 or Linf".to_string());
        }
        out
    }

    /// Removes zero-mass scenarios and scenarios whose ball misses the box.
    ///
    /// Each removed region-infeasible scenario lowers the violation budget by
    /// its mass. Surviving masses are rescaled to sum to one and `tau` is
    /// expressed relative to the rescaled total, which describes the same
    /// feasible set.
    pub fn normalize(&self) -> Result<(PbpInstance, Vec<Adjustment>)> {
        let issues = self.violations(true);
        if !issues.is_empty() {
            return Err(CcpError::InvalidInstance(issues));
        }
        let mut log = Vec::new();
        let mut keep = Vec::new();
        let mut removed_mass = 0.0;
        for s in 0..self.n() {
            let pi = self.prob(s);
            if pi == 0.0 {
                log.push(Adjustment::DroppedZeroMass { scenario: s + 1 });
            } else if !self.region_nonempty(s) {
                removed_mass += pi;
                log.push(Adjustment::DroppedInfeasible {
                    scenario: s + 1,
                    mass: pi,
                });
            } else {
                keep.push(s);
            }
        }
        if keep.len() == self.n() {
            return Ok((self.clone(), log));
        }

        let mut out = self.clone();
        out.scenarios.points = keep.iter().map(|&s| self.point(s).to_vec()).collect();
        out.scenarios.probs = keep.iter().map(|&s| self.prob(s)).collect();
        if removed_mass > 0.0 {
            let unnormalized = self.tau - removed_mass;
            if unnormalized <= tol::MASS {
                return Err(CcpError::TauExhausted {
                    adjusted: unnormalized,
                });
            }
            let total: f64 = out.scenarios.probs.iter().sum();
            for p in &mut out.scenarios.probs {
                *p /= total;
            }
            out.tau = unnormalized / total;
            log.push(Adjustment::TauUpdated {
                from: self.tau,
                unnormalized,
                renormalized: out.tau,
            });
        }
        Ok((out, log))
    }

    pub fn chance_check(&self, x: &[f64]) -> ChanceEvaluation {
        let satisfied: IndexSet = (0..self.n())
            .filter(|&s| self.constraint_value(x, s) <= tol::CONSTRAINT)
            .collect();
        let satisfied_mass = self.scenarios.mass(&satisfied);
        ChanceEvaluation {
            feasible: tol::mass_reaches(satisfied_mass, self.tau),
            satisfied_mass,
            satisfied,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: InstanceJson = serde_json::from_str(text)?;
        let inst = PbpInstance::from(wire);
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceJson::from(self))?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioJson {
    xi: Vec<f64>,
    pi: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    p: usize,
    tau: f64,
    o: Norm,
    o_tilde: Norm,
    #[serde(rename = "R")]
    radius: f64,
    #[serde(rename = "R_bar")]
    box_radius: f64,
    x_bar: Vec<f64>,
    scenarios: Vec<ScenarioJson>,
}

impl From<InstanceJson> for PbpInstance {
    fn from(w: InstanceJson) -> Self {
        let (points, probs) = w.scenarios.into_iter().map(|s| (s.xi, s.pi)).unzip();
        PbpInstance {
            scenarios: ScenarioSet::new(w.p, points, probs),
            x_bar: w.x_bar,
            radius: w.radius,
            box_radius: w.box_radius,
            objective: w.o,
            constraint: w.o_tilde,
            tau: w.tau,
        }
    }
}

impl From<&PbpInstance> for InstanceJson {
    fn from(i: &PbpInstance) -> Self {
        InstanceJson {
            p: i.scenarios.dim,
            tau: i.tau,
            o: i.objective,
            o_tilde: i.constraint,
            radius: i.radius,
            box_radius: i.box_radius,
            x_bar: i.x_bar.clone(),
            scenarios: i
                .scenarios
                .points
                .iter()
                .zip(&i.scenarios.probs)
                .map(|(xi, &pi)| ScenarioJson { xi: xi.clone(), pi })
                .collect(),
        }
    }
}
