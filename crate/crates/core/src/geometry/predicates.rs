//! Exact sign predicates on `f64` coordinates.
//!
//! Orientation tests go through Shewchuk's adaptive predicates; the remaining
//! polynomials use a floating-point filter with an exact rational fallback.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use robust::{Coord, Coord3D};

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

fn rsign(v: &BigRational) -> i8 {
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

/// Sign of the 2D orientation of `(a, b, c)`: positive when counterclockwise.
pub fn orient2d(a: &[f64], b: &[f64], c: &[f64]) -> i8 {
    let v = robust::orient2d(
        Coord { x: a[0], y: a[1] },
        Coord { x: b[0], y: b[1] },
        Coord { x: c[0], y: c[1] },
    );
    sign(v)
}

/// Sign of `det(b - a, c - a, d - a)`: positive when `d` lies on the side the
/// right-handed normal `(b - a) x (c - a)` points to.
pub fn orient3d(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> i8 {
    let c3 = |p: &[f64]| Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    };
    -sign(robust::orient3d(c3(a), c3(b), c3(c), c3(d)))
}

/// Sign of `(a - o) . (b - o)`.
pub fn dot_sign(o: &[f64], a: &[f64], b: &[f64]) -> i8 {
    let mut val = 0.0;
    let mut mag = 0.0;
    for i in 0..o.len() {
        let t = (a[i] - o[i]) * (b[i] - o[i]);
        val += t;
        mag += t.abs();
    }
    if val.abs() > 1e-14 * mag {
        return sign(val);
    }
    let mut acc = BigRational::zero();
    for i in 0..o.len() {
        let oi = exact(o[i]);
        acc += (exact(a[i]) - &oi) * (exact(b[i]) - &oi);
    }
    rsign(&acc)
}

fn rdiff(a: &[f64], o: &[f64]) -> [BigRational; 3] {
    [
        exact(a[0]) - exact(o[0]),
        exact(a[1]) - exact(o[1]),
        exact(a[2]) - exact(o[2]),
    ]
}

fn rdot(a: &[BigRational; 3], b: &[BigRational; 3]) -> BigRational {
    &a[0] * &b[0] + &a[1] * &b[1] + &a[2] * &b[2]
}

/// Sign of `((i - o) x (j - o)) . ((a - o) x (b - o))` in 3D, evaluated
/// exactly through the Binet-Cauchy identity. For `a, b` in the plane spanned
/// by `o, i, j`, this is the in-plane orientation of `(o, a, b)` seen from the
/// normal `(i - o) x (j - o)`.
pub fn cross_dot_sign(o: &[f64], i: &[f64], j: &[f64], a: &[f64], b: &[f64]) -> i8 {
    let (vi, vj, va, vb) = (rdiff(i, o), rdiff(j, o), rdiff(a, o), rdiff(b, o));
    let v = rdot(&vi, &va) * rdot(&vj, &vb) - rdot(&vi, &vb) * rdot(&vj, &va);
    rsign(&v)
}

pub fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x == y)
}

/// Whether `a`, `b`, `c` lie on a common line (any dimension 2 or 3).
pub fn collinear(a: &[f64], b: &[f64], c: &[f64]) -> bool {
    if a.len() == 2 {
        return orient2d(a, b, c) == 0;
    }
    let proj = |p: &[f64], k: usize| -> [f64; 2] {
        match k {
            0 => [p[1], p[2]],
            1 => [p[0], p[2]],
            _ => [p[0], p[1]],
        }
    };
    (0..3).all(|k| orient2d(&proj(a, k), &proj(b, k), &proj(c, k)) == 0)
}

/// Lexicographic order on coordinates; exact on floats.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}
