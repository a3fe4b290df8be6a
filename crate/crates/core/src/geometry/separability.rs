//! Non-separability test behind the safe-set induction.
//!
//! A scenario `s` is *separable* when some open halfspace whose boundary passes
//! through `xi_s` contains every safe point and enough non-pruned mass to
//! satisfy the chance constraint. The points in such a halfspace form a sound
//! subset whose hull misses `xi_s`; when no such halfspace exists, every sound
//! subset encloses `xi_s` and `s` can be declared safe.
//!
//! In 2D the candidate halfspaces are angular windows `[a, a + pi)` around
//! `xi_s`, swept in `O(N log N)`. In 3D each candidate boundary plane passes
//! through `xi_s` and two other points; points on the plane are resolved by a
//! 2D window inside it, for `O(N^3)` overall.

use std::cmp::Ordering;

use serde::Serialize;

use crate::instance::{IndexSet, ScenarioSet};
use crate::tol;

use super::predicates::{cross_dot_sign, dot_sign, orient2d, orient3d, same_point};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparabilityVerdict {
    pub separable: bool,
    /// Approximate normal of a separating halfspace (floating point).
    pub witness_direction: Option<Vec<f64>>,
    /// Mass of `witness_set`.
    pub witness_mass: f64,
    /// Non-pruned points strictly inside the separating halfspace.
    pub witness_set: Option<IndexSet>,
}

impl SeparabilityVerdict {
    fn inseparable() -> Self {
        SeparabilityVerdict {
            separable: false,
            witness_direction: None,
            witness_mass: 0.0,
            witness_set: None,
        }
    }
}

/// Angular-window maximizer shared by the planar sweep and the in-plane
/// resolution of 3D candidates.
///
/// `half` splits directions into two half-turns, `orient(a, b)` is the sign of
/// the turn from `a` to `b`, `same_dir(a, b)` tests for equal directions.
/// Returns the heaviest window `[a, a + pi)` that includes every item marked
/// safe, as a list of item positions.
fn best_window<H, O, D>(
    items: &[usize],
    half: H,
    orient: O,
    same_dir: D,
    mass: &[f64],
    is_safe: &[bool],
) -> Option<(Vec<usize>, f64)>
where
    H: Fn(usize) -> u8,
    O: Fn(usize, usize) -> i8,
    D: Fn(usize, usize) -> bool,
{
    let n = items.len();
    if n == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ia, ib) = (items[a], items[b]);
        half(ia).cmp(&half(ib)).then_with(|| match orient(ia, ib) {
            1 => Ordering::Less,
            -1 => Ordering::Greater,
            _ => Ordering::Equal,
        })
    });
    let total_safe = is_safe.iter().filter(|&&b| b).count();

    let at = |k: usize| order[k % n];
    let mut best: Option<(usize, usize, f64)> = None;
    let mut end = 0usize;
    let mut w_mass = 0.0;
    let mut w_safe = 0usize;
    let mut start = 0usize;
    while start < n {
        // Window members are a prefix of the circular order from `start`.
        if end < start {
            end = start;
            w_mass = 0.0;
            w_safe = 0;
        }
        let anchor = items[at(start)];
        while end < start + n {
            let cand = items[at(end)];
            let inside = end == start
                || orient(anchor, cand) > 0
                || (orient(anchor, cand) == 0 && same_dir(anchor, cand));
            if !inside {
                break;
            }
            w_mass += mass[at(end)];
            w_safe += usize::from(is_safe[at(end)]);
            end += 1;
        }
        if w_safe == total_safe && best.is_none_or(|(_, _, m)| w_mass > m) {
            best = Some((start, end, w_mass));
        }
        // Advance past the whole group sharing the anchor direction.
        let mut next = start + 1;
        while next < n && orient(anchor, items[at(next)]) == 0 && same_dir(anchor, items[at(next)]) {
            next += 1;
        }
        for k in start..next.min(end) {
            w_mass -= mass[at(k)];
            w_safe -= usize::from(is_safe[at(k)]);
        }
        start = next;
    }
    best.map(|(s, e, m)| ((s..e).map(at).collect(), m))
}

fn diff(a: &[f64], o: &[f64]) -> Vec<f64> {
    a.iter().zip(o).map(|(x, y)| x - y).collect()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Decides whether scenario `s` can be strictly separated from a sound subset
/// containing `safe` and avoiding `pruned`.
pub fn separability_check(
    scen: &ScenarioSet,
    s: usize,
    safe: &IndexSet,
    pruned: &IndexSet,
    tau: f64,
) -> SeparabilityVerdict {
    let target = &scen.points[s];
    if safe.iter().any(|t| same_point(&scen.points[t], target)) {
        return SeparabilityVerdict::inseparable();
    }
    let cands: Vec<usize> = (0..scen.len())
        .filter(|&t| t != s && !pruned.contains(t) && !same_point(&scen.points[t], target))
        .collect();
    if !tol::mass_reaches(cands.iter().map(|&t| scen.probs[t]).sum(), tau) {
        return SeparabilityVerdict::inseparable();
    }
    match scen.dim {
        2 => planar(scen, target, &cands, safe, tau),
        _ => spatial(scen, target, &cands, safe, tau),
    }
}

fn planar(
    scen: &ScenarioSet,
    o: &[f64],
    cands: &[usize],
    safe: &IndexSet,
    tau: f64,
) -> SeparabilityVerdict {
    let pts = &scen.points;
    let half = |t: usize| -> u8 {
        let p = &pts[t];
        u8::from(!(p[1] > o[1] || (p[1] == o[1] && p[0] > o[0])))
    };
    let orient = |a: usize, b: usize| orient2d(o, &pts[a], &pts[b]);
    let same_dir = |a: usize, b: usize| dot_sign(o, &pts[a], &pts[b]) > 0;
    let mass: Vec<f64> = cands.iter().map(|&t| scen.probs[t]).collect();
    let is_safe: Vec<bool> = cands.iter().map(|&t| safe.contains(t)).collect();
    match best_window(cands, half, orient, same_dir, &mass, &is_safe) {
        Some((members, m)) if tol::mass_reaches(m, tau) => {
            let first = diff(&pts[cands[members[0]]], o);
            let last = diff(&pts[cands[*members.last().unwrap()]], o);
            let (a, b) = (unit(&first), unit(&last));
            let dir = vec![a[0] + b[0], a[1] + b[1]];
            SeparabilityVerdict {
                separable: true,
                witness_direction: Some(unit(&dir)),
                witness_mass: m,
                witness_set: Some(members.iter().map(|&k| cands[k]).collect()),
            }
        }
        _ => SeparabilityVerdict::inseparable(),
    }
}

fn spatial(
    scen: &ScenarioSet,
    o: &[f64],
    cands: &[usize],
    safe: &IndexSet,
    tau: f64,
) -> SeparabilityVerdict {
    let pts = &scen.points;
    let prob = |t: usize| scen.probs[t];

    let non_collinear_pair = cands.iter().enumerate().find_map(|(a, &i)| {
        cands[a + 1..]
            .iter()
            .find(|&&j| !super::predicates::collinear(o, &pts[i], &pts[j]))
            .map(|&j| (i, j))
    });
    if non_collinear_pair.is_none() {
        // Everything lies on one line through `o`: only the two rays matter.
        let r = cands[0];
        for sign in [1i8, -1] {
            let members: Vec<usize> = cands
                .iter()
                .copied()
                .filter(|&t| dot_sign(o, &pts[r], &pts[t]) == sign)
                .collect();
            let m: f64 = members.iter().map(|&t| prob(t)).sum();
            if safe.iter().all(|t| members.contains(&t)) && tol::mass_reaches(m, tau) {
                let d = diff(&pts[r], o);
                return SeparabilityVerdict {
                    separable: true,
                    witness_direction: Some(unit(&d).iter().map(|x| x * f64::from(sign)).collect()),
                    witness_mass: m,
                    witness_set: Some(members.into_iter().collect()),
                };
            }
        }
        return SeparabilityVerdict::inseparable();
    }

    let mut side = vec![0i8; scen.len()];
    for (a, &i) in cands.iter().enumerate() {
        for &j in &cands[a + 1..] {
            if super::predicates::collinear(o, &pts[i], &pts[j]) {
                continue;
            }
            let mut mass_pos = 0.0;
            let mut mass_neg = 0.0;
            let mut safe_pos = 0;
            let mut safe_neg = 0;
            let mut plane: Vec<usize> = Vec::new();
            for &k in cands {
                let sg = orient3d(o, &pts[i], &pts[j], &pts[k]);
                side[k] = sg;
                match sg {
                    1 => {
                        mass_pos += prob(k);
                        safe_pos += usize::from(safe.contains(k));
                    }
                    -1 => {
                        mass_neg += prob(k);
                        safe_neg += usize::from(safe.contains(k));
                    }
                    _ => plane.push(k),
                }
            }
            let safe_plane = plane.iter().filter(|&&k| safe.contains(k)).count();
            for sign in [1i8, -1] {
                let (m_side, safe_side) = if sign == 1 {
                    (mass_pos, safe_pos)
                } else {
                    (mass_neg, safe_neg)
                };
                if safe_side + safe_plane != safe.len() {
                    continue;
                }
                // In-plane orientation seen from the chosen normal.
                let orient = |a: usize, b: usize| sign * cross_dot_sign(o, &pts[i], &pts[j], &pts[a], &pts[b]);
                let same_dir = |a: usize, b: usize| dot_sign(o, &pts[a], &pts[b]) > 0;
                let half = |t: usize| -> u8 {
                    let turn = orient(i, t);
                    u8::from(!(turn > 0 || (turn == 0 && same_dir(i, t))))
                };
                let mass: Vec<f64> = plane.iter().map(|&t| prob(t)).collect();
                let is_safe: Vec<bool> = plane.iter().map(|&t| safe.contains(t)).collect();
                let Some((members, m_plane)) =
                    best_window(&plane, half, orient, same_dir, &mass, &is_safe)
                else {
                    continue;
                };
                let m = m_side + m_plane;
                if !tol::mass_reaches(m, tau) {
                    continue;
                }
                let mut set: IndexSet = cands.iter().copied().filter(|&k| side[k] == sign).collect();
                for &k in &members {
                    set.insert(plane[k]);
                }
                let (vi, vj) = (diff(&pts[i], o), diff(&pts[j], o));
                let n = [
                    vi[1] * vj[2] - vi[2] * vj[1],
                    vi[2] * vj[0] - vi[0] * vj[2],
                    vi[0] * vj[1] - vi[1] * vj[0],
                ];
                let n = unit(&n);
                let tilt = unit(&diff(&pts[plane[members[0]]], o));
                let dir: Vec<f64> = (0..3)
                    .map(|c| f64::from(sign) * n[c] + 1e-6 * tilt[c])
                    .collect();
                return SeparabilityVerdict {
                    separable: true,
                    witness_direction: Some(unit(&dir)),
                    witness_mass: m,
                    witness_set: Some(set),
                };
            }
        }
    }
    SeparabilityVerdict::inseparable()
}
