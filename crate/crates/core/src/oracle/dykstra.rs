use crate::instance::Norm;

use super::ball::project_ball;

/// Iteration cap in full cycles.
pub const MAX_CYCLES: usize = 10_000;

/// Cycle-to-cycle displacement below which the iteration has converged.
pub const MOVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DykstraOutcome {
    pub point: Vec<f64>,
    pub converged: bool,
    pub cycles: usize,
}

/// Dykstra's alternating projections of `target` onto the intersection of the
/// box `[lo, hi]` and the given balls. Converges to the Euclidean projection
/// when the intersection is nonempty.
pub fn dykstra(
    target: &[f64],
    lo: &[f64],
    hi: &[f64],
    balls: &[(&[f64], f64, Norm)],
    max_cycles: usize,
) -> DykstraOutcome {
    let p = target.len();
    let mut x = target.to_vec();
    let mut incr = vec![vec![0.0; p]; balls.len() + 1];
    let mut z = vec![0.0; p];
    for cycle in 1..=max_cycles {
        let prev = x.clone();
        for (k, y) in incr.iter_mut().enumerate() {
            for i in 0..p {
                z[i] = x[i] + y[i];
            }
            x = if k == 0 {
                z.iter().enumerate().map(|(i, v)| v.clamp(lo[i], hi[i])).collect()
            } else {
                let (c, r, norm) = balls[k - 1];
                project_ball(&z, c, r, norm)
            };
            for i in 0..p {
                y[i] = z[i] - x[i];
            }
        }
        if Norm::Linf.dist(&x, &prev) < MOVE_TOL {
            return DykstraOutcome { point: x, converged: true, cycles: cycle };
        }
    }
    DykstraOutcome { point: x, converged: false, cycles: max_cycles }
}
