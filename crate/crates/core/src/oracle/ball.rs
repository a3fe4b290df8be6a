use crate::instance::Norm;

/// Euclidean projection of `q` onto the `norm`-ball of radius `r` around
/// `center`.
///
/// Linf balls are boxes, so the projection is a clamp. L1 balls use the
/// sorted-threshold soft-shrinkage of Duchi et al.; the L2 case is included
/// for completeness.
pub fn project_ball(q: &[f64], center: &[f64], r: f64, norm: Norm) -> Vec<f64> {
    match norm {
        Norm::Linf => q
            .iter()
            .zip(center)
            .map(|(x, c)| x.clamp(c - r, c + r))
            .collect(),
        Norm::L2 => {
            let d = Norm::L2.dist(q, center);
            if d <= r {
                return q.to_vec();
            }
            q.iter().zip(center).map(|(x, c)| c + (x - c) * r / d).collect()
        }
        Norm::L1 => {
            let y: Vec<f64> = q.iter().zip(center).map(|(x, c)| x - c).collect();
            if Norm::L1.eval(&y) <= r {
                return q.to_vec();
            }
            let mut u: Vec<f64> = y.iter().map(|v| v.abs()).collect();
            u.sort_by(|a, b| b.total_cmp(a));
            let mut cum = 0.0;
            let mut theta = 0.0;
            for (j, &uj) in u.iter().enumerate() {
                cum += uj;
                let t = (cum - r) / (j + 1) as f64;
                if uj > t {
                    theta = t;
                } else {
                    break;
                }
            }
            y.iter()
                .zip(center)
                .map(|(v, c)| c + v.signum() * (v.abs() - theta).max(0.0))
                .collect()
        }
    }
}
