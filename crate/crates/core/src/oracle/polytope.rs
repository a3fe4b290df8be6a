//! Slab representation of box/ball intersections with an exact projection.
//!
//! Every set the oracle intersects is a slab system `lo_d <= <d, x> <= hi_d`
//! over a fixed direction list: Linf balls and boxes constrain the axes, and an
//! L1 ball `||x - c||_1 <= R` is exactly `|<w, x - c>| <= R` for the `2^(p-1)`
//! sign vectors `w` with a leading `+1` (up to negation). An intersection of
//! any number of such sets therefore collapses to at most `p + 2^(p-1)` slabs,
//! and the Euclidean projection onto it is a tiny quadratic program solved by
//! enumerating active sets of at most `p` independent faces.

use crate::instance::Norm;

const DIRS_2D: [[f64; 3]; 4] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [1.0, 1.0, 0.0],
    [1.0, -1.0, 0.0],
];

const DIRS_3D: [[f64; 3]; 7] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0],
    [1.0, -1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

fn dot(d: &[f64; 3], x: &[f64]) -> f64 {
    d.iter().zip(x).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone)]
pub struct SlabPolytope {
    dim: usize,
    dirs: &'static [[f64; 3]],
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// One face `sign * <dirs[dir], x> <= rhs`.
#[derive(Debug, Clone, Copy)]
struct Face {
    dir: usize,
    sign: f64,
    rhs: f64,
}

impl SlabPolytope {
    /// The cube `[-r, r]^dim`.
    pub fn cube(dim: usize, r: f64) -> Self {
        let dirs: &'static [[f64; 3]] = if dim == 2 { &DIRS_2D } else { &DIRS_3D };
        let mut lo = vec![f64::NEG_INFINITY; dirs.len()];
        let mut hi = vec![f64::INFINITY; dirs.len()];
        for i in 0..dim {
            lo[i] = -r;
            hi[i] = r;
        }
        SlabPolytope { dim, dirs, lo, hi }
    }

    fn clip(&mut self, k: usize, lo: f64, hi: f64) {
        self.lo[k] = self.lo[k].max(lo);
        self.hi[k] = self.hi[k].min(hi);
    }

    /// Intersects with the axis-aligned box `[center - r, center + r]`.
    pub fn clip_box(&mut self, center: &[f64], r: f64) {
        for i in 0..self.dim {
            self.clip(i, center[i] - r, center[i] + r);
        }
    }

    /// Intersects with the L1 or Linf ball of radius `r` around `center`.
    pub fn add_ball(&mut self, center: &[f64], r: f64, norm: Norm) {
        match norm {
            Norm::Linf => self.clip_box(center, r),
            Norm::L1 => {
                for k in self.dim..self.dirs.len() {
                    let m = dot(&self.dirs[k], center);
                    self.clip(k, m - r, m + r);
                }
            }
            Norm::L2 => unreachable!("L2 balls have no slab form"),
        }
    }

    /// Coordinate intervals of the axis slabs (not the tightest enclosure of
    /// the polytope when L1 slabs are present).
    pub fn axis_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo[..self.dim].to_vec(), self.hi[..self.dim].to_vec())
    }

    /// Some slab has `lo > hi` beyond rounding of its bounds.
    pub fn has_empty_slab(&self) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .any(|(l, h)| l - h > 1e-12 * (1.0 + l.abs().max(h.abs())))
    }

    fn faces(&self) -> Vec<Face> {
        let mut faces = Vec::with_capacity(2 * self.dirs.len());
        for k in 0..self.dirs.len() {
            if self.hi[k].is_finite() {
                faces.push(Face { dir: k, sign: 1.0, rhs: self.hi[k] });
            }
            if self.lo[k].is_finite() {
                faces.push(Face { dir: k, sign: -1.0, rhs: -self.lo[k] });
            }
        }
        faces
    }

    fn slack_ok(&self, faces: &[Face], x: &[f64]) -> bool {
        faces.iter().all(|f| {
            f.sign * dot(&self.dirs[f.dir], x) <= f.rhs + 1e-10 * (1.0 + f.rhs.abs())
        })
    }

    /// Euclidean projection of `t`; `None` certifies the polytope is empty.
    ///
    /// The projection is the unique point satisfying the KKT conditions, and
    /// by conic Caratheodory some set of at most `dim` linearly independent
    /// active faces carries nonnegative multipliers for it. Enumerating those
    /// sets (at most 470 in 3D) finds the projection whenever it exists.
    pub fn project(&self, t: &[f64]) -> Option<Vec<f64>> {
        if self.has_empty_slab() {
            return None;
        }
        let faces = self.faces();
        if self.slack_ok(&faces, t) {
            return Some(t.to_vec());
        }
        let m = faces.len();
        let mut idx = [0usize; 3];
        for k in 1..=self.dim {
            for (i, slot) in idx.iter_mut().enumerate().take(k) {
                *slot = i;
            }
            loop {
                if let Some(x) = self.kkt_point(&faces, &idx[..k], t) {
                    return Some(x);
                }
                // Next k-combination of 0..m in lexicographic order.
                let mut i = k;
                while i > 0 && idx[i - 1] == m - k + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                idx[i - 1] += 1;
                for j in i..k {
                    idx[j] = idx[j - 1] + 1;
                }
            }
        }
        None
    }

    fn kkt_point(&self, faces: &[Face], active: &[usize], t: &[f64]) -> Option<Vec<f64>> {
        let k = active.len();
        let row = |a: usize| -> [f64; 3] {
            let f = faces[active[a]];
            let d = self.dirs[f.dir];
            [f.sign * d[0], f.sign * d[1], f.sign * d[2]]
        };
        let rows: Vec<[f64; 3]> = (0..k).map(row).collect();
        for a in 0..k {
            for b in a + 1..k {
                if faces[active[a]].dir == faces[active[b]].dir {
                    return None;
                }
            }
        }
        // Gram entries are small integers, so singularity is detected exactly.
        let mut g = [[0.0f64; 4]; 3];
        for a in 0..k {
            for b in 0..k {
                g[a][b] = dot(&rows[a], &rows[b][..self.dim]);
            }
            g[a][3] = dot(&rows[a], t) - faces[active[a]].rhs;
        }
        let lambda = solve_small(&mut g, k)?;
        let scale = 1.0 + lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        if lambda.iter().any(|&l| l < -1e-12 * scale) {
            return None;
        }
        let mut x = t.to_vec();
        for a in 0..k {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi -= lambda[a] * rows[a][i];
            }
        }
        self.slack_ok(faces, &x).then_some(x)
    }
}

/// Gaussian elimination with partial pivoting on a `k x (k+1)` augmented
/// system, `k <= 3`.
fn solve_small(g: &mut [[f64; 4]; 3], k: usize) -> Option<Vec<f64>> {
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| g[a][col].abs().total_cmp(&g[b][col].abs()))?;
        if g[piv][col].abs() < 1e-9 {
            return None;
        }
        g.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = g[r][col] / g[col][col];
                for c in col..k {
                    g[r][c] -= f * g[col][c];
                }
                g[r][3] -= f * g[col][3];
            }
        }
    }
    Some((0..k).map(|r| g[r][3] / g[r][r]).collect())
}
