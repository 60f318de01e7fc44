//! Generalized barycentric weights.

use nalgebra::{Matrix3, Vector3};

use crate::mesh::Point;

/// Scaled determinant below which three barycenters count as collinear.
pub const COLLINEAR_TOL: f64 = 1e-12;

/// Weights `α` with `Σα = 1` and `Σα x_i = target`. With three points these
/// are the barycentric coordinates of `target`; with more, the minimal
/// ℓ²-norm solution. Coordinates are centred on `target` and scaled by
/// `scale` before solving. Returns `None` when the points do not span the
/// plane.
pub fn fit(points: &[Point], target: &Point, scale: f64) -> Option<Vec<f64>> {
    if points.len() < 3 || !(scale > 0.0) {
        return None;
    }
    let rel: Vec<Point> = points.iter().map(|p| (p - target) / scale).collect();
    let weights = if rel.len() == 3 {
        let m = Matrix3::new(1.0, 1.0, 1.0, rel[0].x, rel[1].x, rel[2].x, rel[0].y, rel[1].y, rel[2].y);
        let det = m.determinant();
        let spread = (rel[1] - rel[0]).norm().max((rel[2] - rel[0]).norm()).max(1e-300);
        if det.abs() < COLLINEAR_TOL * spread * spread {
            return None;
        }
        let a = m.lu().solve(&Vector3::new(1.0, 0.0, 0.0))?;
        vec![a[0], a[1], a[2]]
    } else {
        let mut gram = Matrix3::zeros();
        for p in &rel {
            let row = Vector3::new(1.0, p.x, p.y);
            gram += row * row.transpose();
        }
        let eig = gram.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        if !(lo > COLLINEAR_TOL * hi) {
            return None;
        }
        let y = gram.cholesky()?.solve(&Vector3::new(1.0, 0.0, 0.0));
        rel.iter().map(|p| y[0] + y[1] * p.x + y[2] * p.y).collect()
    };
    let sum: f64 = weights.iter().sum();
    let moment: Point = weights.iter().zip(&rel).map(|(w, p)| p * *w).sum();
    let size: f64 = weights.iter().map(|w| w.abs()).sum::<f64>().max(1.0);
    if (sum - 1.0).abs() > 1e-10 * size || moment.norm() > 1e-10 * size {
        return None;
    }
    Some(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn centroid_gets_equal_weights() {
        let p = [Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(0.0, 3.0)];
        let w = fit(&p, &Point::new(1.0, 1.0), 1.0).unwrap();
        for x in w {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolates_at_a_node() {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.2), Point::new(0.3, 1.0)];
        let w = fit(&p, &p[1], 0.5).unwrap();
        assert!((w[1] - 1.0).abs() < 1e-14 && w[0].abs() < 1e-14 && w[2].abs() < 1e-14);
    }

    #[test]
    fn rejects_collinear_and_short() {
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(fit(&p, &Point::new(0.0, 1.0), 1.0).is_none());
        assert!(fit(&p[..2], &Point::new(0.0, 1.0), 1.0).is_none());
        let four = [p[0], p[1], p[2], Point::new(3.0, 3.0)];
        assert!(fit(&four, &Point::new(0.0, 1.0), 1.0).is_none());
    }

    proptest! {
        #[test]
        fn reproduces_affine_fields(
            pts in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..9),
            t in (-1.0..1.0f64, -1.0..1.0f64),
            a in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64),
        ) {
            let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
            let target = Point::new(t.0, t.1);
            if let Some(w) = fit(&pts, &target, 1.0) {
                let f = |p: &Point| a.0 + a.1 * p.x + a.2 * p.y;
                let value: f64 = w.iter().zip(&pts).map(|(w, p)| w * f(p)).sum();
                let size: f64 = w.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
                prop_assert!((value - f(&target)).abs() <= 1e-9 * size);
            }
        }
    }
}
