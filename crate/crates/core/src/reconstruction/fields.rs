//! Numerical evaluation of the reconstruction on a dof vector.

use nalgebra::{Matrix2, Vector2};

use super::{ReconstructionError, ReconstructionPlan};
use crate::exec::Execution;
use crate::mesh::{FacetStatus, Mesh, Point, Side};

/// Numbering of the prescribed Dirichlet values: one slot per Dirichlet
/// facet and constrained component.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletSlots {
    components: usize,
    by_facet: Vec<[Option<usize>; 2]>,
    slots: Vec<(usize, usize)>,
}

impl DirichletSlots {
    pub fn new(mesh: &Mesh, components: usize) -> Self {
        let mut by_facet = vec![[None; 2]; mesh.num_facets()];
        let mut slots = Vec::new();
        for (f, facet) in mesh.facets().iter().enumerate() {
            if facet.status != FacetStatus::BoundaryDirichlet {
                continue;
            }
            for k in 0..components {
                if facet.mask.constrains(k) {
                    by_facet[f][k] = Some(slots.len());
                    slots.push((f, k));
                }
            }
        }
        DirichletSlots { components, by_facet, slots }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, facet: usize, component: usize) -> Option<usize> {
        self.by_facet[facet][component]
    }

    /// `(facet, component)` of every slot.
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.slots
    }

    /// Samples `u_D` at the facet barycenters.
    pub fn sample(&self, mesh: &Mesh, mut value: impl FnMut(usize, &Point) -> Vector2<f64>) -> Vec<f64> {
        self.slots.iter().map(|&(f, k)| value(f, &mesh.facet(f).barycenter)[k]).collect()
    }
}

/// Reconstructed facet values; cracked facets carry one value per side.
#[derive(Clone, Debug, PartialEq)]
pub struct FacetValues {
    pub minus: Vec<Vector2<f64>>,
    pub plus: Vec<Vector2<f64>>,
}

impl FacetValues {
    pub fn seen_from(&self, f: usize, side: Side) -> Vector2<f64> {
        match side {
            Side::Minus => self.minus[f],
            Side::Plus => self.plus[f],
        }
    }
}

fn dof(u: &[f64], d: usize, c: usize, k: usize) -> f64 {
    u[c * d + k]
}

/// Applies every stencil to the cell dofs `u` (layout `cell * d + k`) and
/// the Dirichlet data `g` (indexed by slot).
pub fn facet_values(
    mesh: &Mesh,
    plan: &ReconstructionPlan,
    slots: &DirichletSlots,
    u: &[f64],
    g: &[f64],
    exec: Execution,
) -> FacetValues {
    let d = slots.components();
    let eval = |f: usize, side: Side| {
        let stencil = plan.stencil(f);
        let mut out = Vector2::zeros();
        for k in 0..d {
            out[k] = match slots.slot(f, k) {
                Some(s) => g[s],
                None => stencil.weights_for(side).iter().map(|&(c, w)| w * dof(u, d, c, k)).sum(),
            };
        }
        out
    };
    let pairs = exec.map(mesh.num_facets(), |f| {
        let m = eval(f, Side::Minus);
        let p = if mesh.facet(f).is_cracked() { eval(f, Side::Plus) } else { m };
        (m, p)
    });
    let (minus, plus) = pairs.into_iter().unzip();
    FacetValues { minus, plus }
}

/// Checked variant of [`facet_values`] that refuses a stale plan.
pub fn reconstruct_facet_values(
    mesh: &Mesh,
    plan: &ReconstructionPlan,
    slots: &DirichletSlots,
    u: &[f64],
    g: &[f64],
    exec: Execution,
) -> Result<FacetValues, ReconstructionError> {
    plan.check_current(mesh)?;
    Ok(facet_values(mesh, plan, slots, u, g, exec))
}

/// `G_c = Σ_F (|F|/|c|) v_F ⊗ n_{F,c}`; rows beyond the number of
/// components stay zero.
pub fn cell_gradient(mesh: &Mesh, values: &FacetValues, c: usize) -> Matrix2<f64> {
    let mut grad = Matrix2::zeros();
    let area = mesh.area(c);
    for &f in mesh.cell_facets(c) {
        let facet = mesh.facet(f);
        let side = facet.side_of(c).expect("cell owns its facets");
        let n = mesh.outward_normal(f, c);
        grad += values.seen_from(f, side) * n.transpose() * (facet.length / area);
    }
    grad
}

pub fn cell_gradients(mesh: &Mesh, values: &FacetValues, exec: Execution) -> Vec<Matrix2<f64>> {
    exec.map(mesh.num_cells(), |c| cell_gradient(mesh, values, c))
}

/// `v_c + G_c (x − x_c)`.
pub fn p1_value(cell_value: &Vector2<f64>, gradient: &Matrix2<f64>, barycenter: &Point, x: &Point) -> Vector2<f64> {
    cell_value + gradient * (x - barycenter)
}
