//! Error norms, convergence rates, reaction forces and crack metrics.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

use crate::fracture::{cell_fields, cell_value, SimulationTrace};
use crate::material::Material;
use crate::mesh::{FacetStatus, Mesh, Point};
use crate::system::Discretization;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("unknown boundary tag `{0}`")]
    UnknownTag(String),
    #[error("the reference solution is singular at r = 0")]
    Singular,
    #[error("need at least 2 samples past the initial crack length, got {0}")]
    TooFewSamples(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub n_dofs: usize,
    /// `‖u − 𝔉R(u_h)‖_{L²}`.
    pub l2_error: f64,
    /// `‖∇u − G_h(u_h)‖_{L²}`.
    pub energy_error: f64,
}

/// Degree-2 rule on a triangle: barycentric points and weight fraction.
const QUAD: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

/// L² errors of the P1 reconstruction and of the cell gradients against a
/// reference `x ↦ (u(x), ∇u(x))`. In antiplane mode only component 0 and
/// gradient row 0 are compared.
pub fn l2_errors(
    disc: &Discretization,
    u: &[f64],
    g: &[f64],
    reference: impl Fn(&Point) -> (Vector2<f64>, Matrix2<f64>) + Sync,
) -> ErrorReport {
    let d = disc.components();
    let fields = cell_fields(disc, u, g);
    let mesh = &disc.mesh;
    let per_cell = disc.exec.map(mesh.num_cells(), |c| {
        let [a, b, e] = mesh.cells()[c].map(|v| mesh.vertices()[v]);
        let xc = mesh.barycenter(c);
        let vc = cell_value(u, d, c);
        let grad = fields.gradients[c];
        let area = mesh.area(c);
        let (mut l2, mut en) = (0.0, 0.0);
        for (lam, w) in QUAD {
            let x = a * lam[0] + b * lam[1] + e * lam[2];
            let (ur, gr) = reference(&x);
            let uh = vc + grad * (x - xc);
            for k in 0..d {
                l2 += w * area * (ur[k] - uh[k]).powi(2);
                for l in 0..2 {
                    en += w * area * (gr[(k, l)] - grad[(k, l)]).powi(2);
                }
            }
        }
        (l2, en)
    });
    let (l2, en) = per_cell.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    ErrorReport { n_dofs: disc.num_dofs(), l2_error: l2.sqrt(), energy_error: en.sqrt() }
}

/// `2 ln(e1/e2) / ln(n2/n1)`: rate in powers of `h` from errors at two dof
/// counts in two dimensions.
pub fn convergence_order(e1: f64, e2: f64, n1: f64, n2: f64) -> f64 {
    2.0 * (e1 / e2).ln() / (n2 / n1).ln()
}

/// Rates between consecutive reports as `(l2_rate, energy_rate)`.
pub fn convergence_rates(reports: &[ErrorReport]) -> Vec<(f64, f64)> {
    reports
        .windows(2)
        .map(|w| {
            let (n1, n2) = (w[0].n_dofs as f64, w[1].n_dofs as f64);
            (
                convergence_order(w[0].l2_error, w[1].l2_error, n1, n2),
                convergence_order(w[0].energy_error, w[1].energy_error, n1, n2),
            )
        })
        .collect()
}

/// `Σ_F |F| Σ_{c−} n_F` over the boundary facets carrying `tag`.
pub fn reaction_force(
    mesh: &Mesh,
    material: &Material,
    stresses: &[Matrix2<f64>],
    tag: &str,
) -> Result<Vector2<f64>, AnalysisError> {
    let id = mesh.tag_id(tag).ok_or_else(|| AnalysisError::UnknownTag(tag.to_string()))?;
    Ok(mesh
        .facets()
        .iter()
        .filter(|f| f.tag == Some(id) && f.plus.is_none())
        .map(|f| material.traction(&stresses[f.minus], &f.normal) * f.length)
        .sum())
}

/// Reaction force from a converged solution.
pub fn solution_reaction(disc: &Discretization, u: &[f64], g: &[f64], tag: &str) -> Result<Vector2<f64>, AnalysisError> {
    let fields = cell_fields(disc, u, g);
    reaction_force(&disc.mesh, &disc.material, &fields.stresses, tag)
}

/// Total length of the cracked facets, initial crack included.
pub fn crack_length(mesh: &Mesh) -> f64 {
    mesh.facets().iter().filter(|f| f.status == FacetStatus::Cracked).map(|f| f.length).sum()
}

/// Least-squares slope of crack length against load over the samples where
/// the crack has grown past `initial_length`.
pub fn crack_speed_fit(samples: &[(f64, f64)], initial_length: f64) -> Result<f64, AnalysisError> {
    let tol = 1e-9 * initial_length.abs().max(1.0);
    let pts: Vec<(f64, f64)> = samples.iter().copied().filter(|&(_, l)| l > initial_length + tol).collect();
    if pts.len() < 2 {
        return Err(AnalysisError::TooFewSamples(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::TooFewSamples(1));
    }
    Ok(sxy / sxx)
}

/// `(load, crack length)` after every step of a trace.
pub fn crack_length_curve(trace: &SimulationTrace) -> Vec<(f64, f64)> {
    trace.steps.iter().map(|s| (s.load, s.crack_length)).collect()
}

/// `(load, force)` samples with the first step where a facet broke.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadDisplacementCurve {
    pub samples: Vec<(f64, f64)>,
    pub crack_start: Option<(f64, f64)>,
}

/// Load-displacement curve along `direction` from the recorded reactions.
pub fn load_displacement(trace: &SimulationTrace, direction: Vector2<f64>) -> LoadDisplacementCurve {
    let mut samples = Vec::new();
    let mut crack_start = None;
    for s in &trace.steps {
        let Some(r) = s.reaction else { continue };
        let sample = (s.load, r.dot(&direction));
        if crack_start.is_none() && !s.broken.is_empty() {
            crack_start = Some(sample);
        }
        samples.push(sample);
    }
    LoadDisplacementCurve { samples, crack_start }
}

/// Near-tip mode III field: displacement `u_z` and stress `(σ_xz, σ_yz)`.
pub fn antiplane_reference(r: f64, theta: f64, tau: f64, a: f64, mu: f64) -> Result<(f64, Vector2<f64>), AnalysisError> {
    if r <= 0.0 {
        return Err(AnalysisError::Singular);
    }
    let (s, c) = (theta / 2.0).sin_cos();
    let u = 2.0 * tau / mu * (a * r / 2.0).sqrt() * s;
    let scale = tau * (a / (2.0 * r)).sqrt();
    let e_r = Vector2::new(theta.cos(), theta.sin());
    let e_t = Vector2::new(-theta.sin(), theta.cos());
    Ok((u, (e_r * s + e_t * c) * scale))
}

/// [`antiplane_reference`] at a Cartesian point, packed for [`l2_errors`].
pub fn antiplane_reference_at(x: &Point, tau: f64, a: f64, mu: f64) -> (Vector2<f64>, Matrix2<f64>) {
    let r = x.norm().max(f64::MIN_POSITIVE);
    let (u, sigma) = antiplane_reference(r, x.y.atan2(x.x), tau, a, mu).expect("positive radius");
    let grad = sigma / mu;
    (Vector2::new(u, 0.0), Matrix2::new(grad.x, grad.y, 0.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::material::Mode;
    use crate::mesh::{generate_structured_strip, ComponentMask, StripPattern};
    use crate::system::Stabilization;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn order_examples() {
        assert_relative_eq!(convergence_order(4.0, 2.0, 100.0, 400.0), 1.0, epsilon = 1e-15);
        assert_eq!(convergence_order(3.0, 3.0, 100.0, 400.0), 0.0);
        let o = convergence_order(5.66e-2, 3.95e-2, 7312.0, 28832.0);
        assert!((o - 0.52).abs() < 0.01, "{o}");
    }

    #[test]
    fn reference_examples() {
        assert_eq!(antiplane_reference(0.3, 0.0, 1.0, 2.0, 1.0).unwrap().0, 0.0);
        let a = 0.8;
        let (u, _) = antiplane_reference(a / 2.0, std::f64::consts::PI, 1.3, a, 1.3).unwrap();
        assert_relative_eq!(u, a, max_relative = 1e-14);
        let (_, s1) = antiplane_reference(0.1, 0.7, 1.0, 1.0, 1.0).unwrap();
        let (_, s4) = antiplane_reference(0.4, 0.7, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(s4, s1 * 0.5, max_relative = 1e-14);
        assert_eq!(antiplane_reference(0.0, 0.1, 1.0, 1.0, 1.0), Err(AnalysisError::Singular));
    }

    proptest! {
        #[test]
        fn reference_stress_is_mu_gradient(r in 0.01..2.0f64, t in -3.1..3.1f64) {
            let (tau, a, mu) = (0.7, 1.3, 2.0);
            let x = Point::new(r * t.cos(), r * t.sin());
            let (_, grad) = antiplane_reference_at(&x, tau, a, mu);
            let h = 1e-6 * r;
            let f = |p: Point| antiplane_reference_at(&p, tau, a, mu).0.x;
            let gx = (f(x + Point::new(h, 0.0)) - f(x - Point::new(h, 0.0))) / (2.0 * h);
            let gy = (f(x + Point::new(0.0, h)) - f(x - Point::new(0.0, h))) / (2.0 * h);
            let scale = grad.norm();
            prop_assert!((gx - grad[(0, 0)]).abs() < 1e-6 * scale);
            prop_assert!((gy - grad[(0, 1)]).abs() < 1e-6 * scale);
        }

        #[test]
        fn order_is_antisymmetric(e1 in 1e-6..1.0f64, e2 in 1e-6..1.0f64, n1 in 10.0..1e4f64, k in 1.5..8.0f64) {
            let n2 = n1 * k;
            prop_assert!((convergence_order(e1, e2, n1, n2) + convergence_order(e2, e1, n1, n2)).abs() < 1e-12);
        }

        #[test]
        fn speed_fit_recovers_slope(slope in 0.5..10.0f64, l0 in 0.1..2.0f64) {
            let samples: Vec<(f64, f64)> = (0..20).map(|k| {
                let t = 0.1 + 0.05 * k as f64;
                (t, l0 + slope * t)
            }).collect();
            prop_assert!((crack_speed_fit(&samples, l0).unwrap() - slope).abs() < 1e-9 * slope);
        }

        #[test]
        fn reaction_is_linear(s in -5.0..5.0f64, k in -3.0..3.0f64) {
            let m = generate_structured_strip(1.0, 1.0, 0.25, StripPattern::Diagonal).unwrap();
            let mat = Material::from_young_poisson(1.0, 0.3, 1.0, Mode::PlaneStrain).unwrap();
            let a: Vec<Matrix2<f64>> = (0..m.num_cells()).map(|c| Matrix2::new(c as f64, 0.5, 0.5, s)).collect();
            let b: Vec<Matrix2<f64>> = (0..m.num_cells()).map(|c| Matrix2::new(1.0, -(c as f64), -(c as f64), 2.0)).collect();
            let ab: Vec<Matrix2<f64>> = a.iter().zip(&b).map(|(x, y)| x + y * k).collect();
            let fa = reaction_force(&m, &mat, &a, "top").unwrap();
            let fb = reaction_force(&m, &mat, &b, "top").unwrap();
            let fab = reaction_force(&m, &mat, &ab, "top").unwrap();
            prop_assert!((fab - (fa + fb * k)).norm() < 1e-10 * (1.0 + fa.norm() + fb.norm()));
        }
    }

    #[test]
    fn uniaxial_reaction() {
        let m = generate_structured_strip(1.0, 1.0, 0.25, StripPattern::Crossed).unwrap();
        let mat = Material::from_young_poisson(1.0, 0.3, 1.0, Mode::PlaneStrain).unwrap();
        let s = 2.5;
        let stresses = vec![Matrix2::new(0.0, 0.0, 0.0, s); m.num_cells()];
        let f = reaction_force(&m, &mat, &stresses, "top").unwrap();
        assert_relative_eq!(f.y, s, max_relative = 1e-14);
        assert_eq!(f.x, 0.0);
        let zero = vec![Matrix2::zeros(); m.num_cells()];
        assert_eq!(reaction_force(&m, &mat, &zero, "top").unwrap(), Vector2::zeros());
        assert!(reaction_force(&m, &mat, &zero, "nowhere").is_err());
    }

    #[test]
    fn errors_of_exact_and_zero_solutions() {
        let mut m = generate_structured_strip(1.0, 1.0, 0.125, StripPattern::Crossed).unwrap();
        for tag in ["left", "right", "top", "bottom"] {
            m.set_dirichlet(tag, ComponentMask::ALL).unwrap();
        }
        let mat = Material::from_young_poisson(1.0, 0.3, 1.0, Mode::PlaneStrain).unwrap();
        let disc = Discretization::new(m, mat, Stabilization::default(), Execution::Parallel).unwrap();
        let field = |x: &Point| Vector2::new(1.0 + x.x - 2.0 * x.y, 0.5 * x.x);
        let grad = Matrix2::new(1.0, -2.0, 0.5, 0.0);
        let u: Vec<f64> = (0..disc.mesh.num_cells()).flat_map(|c| {
            let v = field(&disc.mesh.barycenter(c));
            [v.x, v.y]
        }).collect();
        let g = disc.slots.sample(&disc.mesh, |_, x| field(x));
        let rep = l2_errors(&disc, &u, &g, |x| (field(x), grad));
        assert!(rep.l2_error <= 1e-10 && rep.energy_error <= 1e-10, "{rep:?}");
        // zero solution against u = (1, 0): ‖u‖ = 1 on the unit square
        let zero = vec![0.0; u.len()];
        let g0 = vec![0.0; g.len()];
        let rep = l2_errors(&disc, &zero, &g0, |_| (Vector2::new(1.0, 0.0), Matrix2::zeros()));
        assert_relative_eq!(rep.l2_error, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn speed_fit_needs_samples() {
        assert_eq!(crack_speed_fit(&[(0.1, 1.0), (0.2, 1.5)], 1.0), Err(AnalysisError::TooFewSamples(1)));
        assert_relative_eq!(crack_speed_fit(&[(0.1, 1.0), (0.2, 1.447), (0.3, 1.894)], 1.0).unwrap(), 4.47, max_relative = 1e-12);
    }
}
