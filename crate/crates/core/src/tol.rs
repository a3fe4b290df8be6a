//! Numerical tolerances shared across the crate.

/// Absolute slack when testing `c(x, xi) <= 0`.
pub const CONSTRAINT: f64 = 1e-9;

/// Slack on probability sums and comparisons against `1 - tau`.
pub const MASS: f64 = 1e-9;

/// Slack applied before pruning on `nu(S) > upper`.
pub const PRUNE: f64 = 1e-9;

/// Feasibility tolerance for points returned by the projection oracle.
pub const FEASIBLE: f64 = 1e-8;

/// `mass >= 1 - tau` under the symmetric mass slack.
#[inline]
pub fn mass_reaches(mass: f64, tau: f64) -> bool {
    mass >= 1.0 - tau - MASS
}

/// Relative comparison with a unit floor, used when optimal values may be zero.
#[inline]
pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
