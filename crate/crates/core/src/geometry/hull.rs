//! Convex hulls in 2D (monotone chain) and 3D (incremental, triangulated).
//!
//! Every orientation decision is exact, so hulls are combinatorially correct
//! for collinear, coplanar and duplicated inputs. Vertex indices always refer
//! to positions in the caller's point list; among coincident input points the
//! lowest index represents the location.

use crate::instance::IndexSet;

use super::predicates::{collinear, dot_sign, lex_cmp, orient2d, orient3d, same_point};

/// Convex hull of a finite point set in `R^2` or `R^3`.
#[derive(Debug, Clone)]
pub struct Hull {
    pub dim: usize,
    /// Affine rank of the input: 0 point, 1 segment, 2 polygon, 3 polytope.
    pub rank: usize,
    /// Extreme points. CCW for planar hulls (in the projection plane for
    /// coplanar 3D inputs), segment endpoints for rank 1.
    pub vertices: Vec<usize>,
    /// Outward-oriented triangles for full-rank 3D hulls; empty otherwise.
    pub faces: Vec<[usize; 3]>,
    /// Floating-point outward normals, parallel to `faces`.
    pub normals: Vec<[f64; 3]>,
    points: Vec<Vec<f64>>,
    /// Coordinates kept when a coplanar 3D set is handled in 2D.
    plane_axes: Option<[usize; 2]>,
}

fn dedup_order(points: &[Vec<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]).then(a.cmp(&b)));
    idx.dedup_by(|b, a| same_point(&points[*a], &points[*b]));
    idx
}

/// Andrew's monotone chain over `idx` (already lexicographically sorted and
/// deduplicated). Collinear points are dropped, so the output is strictly
/// convex and counterclockwise.
fn monotone_chain(pts: &[Vec<f64>], idx: &[usize]) -> Vec<usize> {
    if idx.len() <= 2 {
        return idx.to_vec();
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in idx {
        while lower.len() >= 2
            && orient2d(&pts[lower[lower.len() - 2]], &pts[lower[lower.len() - 1]], &pts[i]) <= 0
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && orient2d(&pts[upper[upper.len() - 2]], &pts[upper[upper.len() - 1]], &pts[i]) <= 0
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn project(p: &[f64], axes: [usize; 2]) -> Vec<f64> {
    vec![p[axes[0]], p[axes[1]]]
}

fn polygon_contains(poly: &[Vec<f64>], q: &[f64]) -> bool {
    match poly.len() {
        0 => false,
        1 => same_point(&poly[0], q),
        2 => segment_contains(&poly[0], &poly[1], q),
        k => (0..k).all(|i| orient2d(&poly[i], &poly[(i + 1) % k], q) >= 0),
    }
}

fn segment_contains(a: &[f64], b: &[f64], q: &[f64]) -> bool {
    collinear(a, b, q) && dot_sign(a, q, b) >= 0 && dot_sign(b, q, a) >= 0
}

struct Mesh {
    faces: Vec<[usize; 3]>,
}

impl Mesh {
    fn contains(&self, pts: &[Vec<f64>], q: &[f64]) -> bool {
        self.faces
            .iter()
            .all(|f| orient3d(&pts[f[0]], &pts[f[1]], &pts[f[2]], q) <= 0)
    }

    fn vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.faces.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Incremental hull of `order` (unique points, full rank). `seed` holds four
/// affinely independent entries of `order`.
fn incremental_mesh(pts: &[Vec<f64>], order: &[usize], seed: [usize; 4]) -> Mesh {
    let [a, b, c, d] = seed;
    let mut faces: Vec<[usize; 3]> = if orient3d(&pts[a], &pts[b], &pts[c], &pts[d]) < 0 {
        vec![[a, b, c], [a, d, b], [b, d, c], [c, d, a]]
    } else {
        vec![[a, c, b], [a, b, d], [b, c, d], [c, a, d]]
    };
    for &q in order {
        if seed.contains(&q) {
            continue;
        }
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| orient3d(&pts[f[0]], &pts[f[1]], &pts[f[2]], &pts[q]) > 0)
            .collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut kept_edges = std::collections::HashSet::new();
        for (f, vis) in faces.iter().zip(&visible) {
            if !vis {
                for k in 0..3 {
                    kept_edges.insert((f[k], f[(k + 1) % 3]));
                }
            }
        }
        let mut next = Vec::with_capacity(faces.len() + 4);
        for (f, vis) in faces.iter().zip(&visible) {
            if !vis {
                next.push(*f);
                continue;
            }
            for k in 0..3 {
                let (u, v) = (f[k], f[(k + 1) % 3]);
                if kept_edges.contains(&(v, u)) {
                    next.push([u, v, q]);
                }
            }
        }
        faces = next;
    }
    Mesh { faces }
}

/// Computes the convex hull of `points` (all of dimension 2 or 3).
pub fn hull(points: &[Vec<f64>]) -> Hull {
    assert!(!points.is_empty(), "hull of an empty point set");
    let dim = points[0].len();
    let uniq = dedup_order(points);
    let pts = points.to_vec();
    let lowest = |loc: usize| -> usize {
        (0..points.len())
            .find(|&i| same_point(&points[i], &points[loc]))
            .unwrap_or(loc)
    };
    let mut h = Hull {
        dim,
        rank: 0,
        vertices: vec![],
        faces: vec![],
        normals: vec![],
        points: pts,
        plane_axes: None,
    };
    if dim == 2 {
        let chain = monotone_chain(points, &uniq);
        h.rank = if chain.len() >= 3 { 2 } else { chain.len() - 1 };
        h.vertices = chain.into_iter().map(lowest).collect();
        return h;
    }

    // Affine rank in 3D.
    let p0 = uniq[0];
    let Some(&p1) = uniq.get(1) else {
        h.vertices = vec![lowest(p0)];
        return h;
    };
    let p2 = uniq
        .iter()
        .copied()
        .find(|&i| !collinear(&points[p0], &points[p1], &points[i]));
    let Some(p2) = p2 else {
        // Lexicographic order is monotone along a line.
        h.rank = 1;
        h.vertices = vec![lowest(p0), lowest(*uniq.last().unwrap())];
        return h;
    };
    let p3 = uniq
        .iter()
        .copied()
        .find(|&i| orient3d(&points[p0], &points[p1], &points[p2], &points[i]) != 0);
    let Some(p3) = p3 else {
        let axes = [[1, 2], [0, 2], [0, 1]]
            .into_iter()
            .find(|ax| {
                orient2d(
                    &project(&points[p0], *ax),
                    &project(&points[p1], *ax),
                    &project(&points[p2], *ax),
                ) != 0
            })
            .expect("non-collinear triple has a non-degenerate projection");
        let flat: Vec<Vec<f64>> = points.iter().map(|p| project(p, axes)).collect();
        let mut order = uniq.clone();
        order.sort_by(|&a, &b| lex_cmp(&flat[a], &flat[b]).then(a.cmp(&b)));
        h.rank = 2;
        h.plane_axes = Some(axes);
        h.vertices = monotone_chain(&flat, &order)
            .into_iter()
            .map(lowest)
            .collect();
        return h;
    };

    h.rank = 3;
    let mesh = incremental_mesh(points, &uniq, [p0, p1, p2, p3]);
    // Points that sat on a flat facet when inserted may survive as mesh
    // vertices without being extreme; drop them and rebuild.
    let candidates = mesh.vertices();
    let extreme: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&v| {
            let others: Vec<usize> = candidates.iter().copied().filter(|&o| o != v).collect();
            !points_in_hull_3d(points, &others, &points[v])
        })
        .collect();
    let mesh = if extreme.len() == candidates.len() {
        mesh
    } else {
        let seed = full_rank_seed(points, &extreme).expect("extreme points span R^3");
        incremental_mesh(points, &extreme, seed)
    };
    h.vertices = extreme.into_iter().map(lowest).collect();
    h.normals = mesh
        .faces
        .iter()
        .map(|f| {
            let (a, b, c) = (&points[f[0]], &points[f[1]], &points[f[2]]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ]
        })
        .collect();
    h.faces = mesh.faces;
    h
}

fn full_rank_seed(points: &[Vec<f64>], idx: &[usize]) -> Option<[usize; 4]> {
    let p0 = *idx.first()?;
    let p1 = idx.iter().copied().find(|&i| !same_point(&points[i], &points[p0]))?;
    let p2 = idx
        .iter()
        .copied()
        .find(|&i| !collinear(&points[p0], &points[p1], &points[i]))?;
    let p3 = idx
        .iter()
        .copied()
        .find(|&i| orient3d(&points[p0], &points[p1], &points[p2], &points[i]) != 0)?;
    Some([p0, p1, p2, p3])
}

/// Closed containment of `q` in the hull of `points[idx]` (3D), without the
/// extreme-point cleanup.
fn points_in_hull_3d(points: &[Vec<f64>], idx: &[usize], q: &[f64]) -> bool {
    let sub: Vec<Vec<f64>> = idx.iter().map(|&i| points[i].clone()).collect();
    let uniq = dedup_order(&sub);
    match full_rank_seed(&sub, &uniq) {
        Some(seed) => incremental_mesh(&sub, &uniq, seed).contains(&sub, q),
        None => hull(&sub).contains(q),
    }
}

impl Hull {
    /// Closed containment: boundary points count as inside.
    pub fn contains(&self, q: &[f64]) -> bool {
        let pts = &self.points;
        match (self.dim, self.rank) {
            (_, 0) => same_point(&pts[self.vertices[0]], q),
            (_, 1) => segment_contains(&pts[self.vertices[0]], &pts[self.vertices[1]], q),
            (2, _) => {
                let poly: Vec<Vec<f64>> = self.vertices.iter().map(|&v| pts[v].clone()).collect();
                polygon_contains(&poly, q)
            }
            (_, 2) => {
                let axes = self.plane_axes.expect("planar hull has projection axes");
                let v = &self.vertices;
                if orient3d(&pts[v[0]], &pts[v[1]], &pts[v[2]], q) != 0 {
                    return false;
                }
                let poly: Vec<Vec<f64>> = v.iter().map(|&i| project(&pts[i], axes)).collect();
                polygon_contains(&poly, &project(q, axes))
            }
            _ => Mesh {
                faces: self.faces.clone(),
            }
            .contains(pts, q),
        }
    }

    pub fn vertex_points(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|&v| self.points[v].clone()).collect()
    }
}

fn subset_points(points: &[Vec<f64>], set: &IndexSet) -> Vec<Vec<f64>> {
    set.iter().map(|s| points[s].clone()).collect()
}

/// Indices of `set` whose points are extreme points of the hull of `set`.
pub fn vertex_indices(points: &[Vec<f64>], set: &IndexSet) -> IndexSet {
    let sub = subset_points(points, set);
    let ids = set.as_slice();
    hull(&sub).vertices.iter().map(|&v| ids[v]).collect()
}

/// All scenario indices (over the whole list) whose points lie in the closed
/// hull of `set`.
pub fn enclosed_indices(points: &[Vec<f64>], set: &IndexSet) -> IndexSet {
    let h = hull(&subset_points(points, set));
    (0..points.len()).filter(|&i| h.contains(&points[i])).collect()
}

/// Sorting helper used by tests and by callers needing a canonical vertex order.
pub fn sorted_vertices(h: &Hull) -> Vec<usize> {
    let mut v = h.vertices.clone();
    v.sort_unstable();
    v
}
