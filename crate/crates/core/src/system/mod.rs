//! Stabilized stiffness, loads with lifted Dirichlet data, and the SPD solve.

mod assembly;
mod solve;
mod sparse;

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::Vector2;
use thiserror::Error;

pub use assembly::{
    affected_elements, assemble_elements, assemble_stiffness, element_forms, element_triplets, elements, Col,
    Element, ElementForms, FormContext, LinForm, Stabilization, Stiffness, TripletSink,
};
pub use solve::{relative_residual, residual, Factorization, DIRECT_LIMIT, RESIDUAL_TOL};
pub use sparse::{CsrMatrix, Triplet};

use crate::exec::Execution;
use crate::material::Material;
use crate::mesh::{ComponentMask, FacetStatus, Mesh, MeshError, Point, Side};
use crate::reconstruction::{DirichletSlots, ReconstructionError, ReconstructionPlan};

#[derive(Debug, Error)]
pub enum SystemError {
    #[error(transparent)]
    Reconstruction(#[from] ReconstructionError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("boundary tag `{0}` has no condition")]
    UnknownTag(String),
    #[error("boundary tag `{0}` carries more than one condition")]
    ConflictingTag(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { residual: f64, iterations: usize },
}

/// A vector field of position and pseudo-time.
pub type Field = Arc<dyn Fn(&Point, f64) -> Vector2<f64> + Send + Sync>;

pub fn field(f: impl Fn(&Point, f64) -> Vector2<f64> + Send + Sync + 'static) -> Field {
    Arc::new(f)
}

#[derive(Clone)]
pub struct DirichletCondition {
    pub tag: String,
    pub mask: ComponentMask,
    pub value: Field,
}

#[derive(Clone)]
pub struct NeumannCondition {
    pub tag: String,
    pub traction: Field,
}

/// Body force, tractions and prescribed displacements. Untagged boundary
/// facets and tags without a condition are traction free.
#[derive(Clone, Default)]
pub struct LoadSpec {
    pub body_force: Option<Field>,
    pub neumann: Vec<NeumannCondition>,
    pub dirichlet: Vec<DirichletCondition>,
}

impl LoadSpec {
    /// Checks that every tag exists and carries one condition.
    pub fn validate(&self, mesh: &Mesh) -> Result<(), SystemError> {
        let mut seen = BTreeSet::new();
        let tags = self.dirichlet.iter().map(|c| &c.tag).chain(self.neumann.iter().map(|c| &c.tag));
        for tag in tags {
            if mesh.tag_id(tag).is_none() {
                return Err(SystemError::UnknownTag(tag.clone()));
            }
            if !seen.insert(tag.as_str()) {
                return Err(SystemError::ConflictingTag(tag.clone()));
            }
        }
        Ok(())
    }

    /// Marks the Dirichlet facets on the mesh.
    pub fn apply_dirichlet(&self, mesh: &mut Mesh) -> Result<(), SystemError> {
        self.validate(mesh)?;
        for c in &self.dirichlet {
            mesh.set_dirichlet(&c.tag, c.mask)?;
        }
        Ok(())
    }

    fn dirichlet_for(&self, mesh: &Mesh, f: usize) -> Option<&DirichletCondition> {
        let tag = mesh.facet_tag_name(f)?;
        self.dirichlet.iter().find(|c| c.tag == tag)
    }

    /// Prescribed values per Dirichlet slot at pseudo-time `t`.
    pub fn dirichlet_data(&self, mesh: &Mesh, slots: &DirichletSlots, t: f64) -> Result<Vec<f64>, SystemError> {
        slots
            .entries()
            .iter()
            .map(|&(f, k)| {
                let c = self
                    .dirichlet_for(mesh, f)
                    .ok_or_else(|| SystemError::UnknownTag(mesh.facet_tag_name(f).unwrap_or("<untagged>").to_string()))?;
                Ok((c.value)(&mesh.facet(f).barycenter, t)[k])
            })
            .collect()
    }
}

/// `l(t; ·)` over the cell dofs: midpoint body force against `v_c`, and
/// tractions against the reconstructed facet value.
pub fn assemble_load(
    mesh: &Mesh,
    plan: &ReconstructionPlan,
    loads: &LoadSpec,
    t: f64,
) -> Result<Vec<f64>, SystemError> {
    plan.check_current(mesh)?;
    let d = plan.components();
    let mut rhs = vec![0.0; mesh.num_cells() * d];
    if let Some(fb) = &loads.body_force {
        for c in 0..mesh.num_cells() {
            let v = fb(&mesh.barycenter(c), t) * mesh.area(c);
            for k in 0..d {
                rhs[c * d + k] += v[k];
            }
        }
    }
    for cond in &loads.neumann {
        let id = mesh.tag_id(&cond.tag).ok_or_else(|| SystemError::UnknownTag(cond.tag.clone()))?;
        for (f, facet) in mesh.facets().iter().enumerate() {
            if facet.status != FacetStatus::BoundaryNeumann || facet.tag != Some(id) {
                continue;
            }
            let g = (cond.traction)(&facet.barycenter, t) * facet.length;
            for &(c, w) in plan.stencil(f).weights_for(Side::Minus) {
                for k in 0..d {
                    rhs[c * d + k] += w * g[k];
                }
            }
        }
    }
    Ok(rhs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// `−A_ug g`, already included in `rhs`.
    pub dirichlet_contribution: Vec<f64>,
}

/// Cell dofs, reconstruction and stiffness kept consistent across cracks.
pub struct Discretization {
    pub mesh: Mesh,
    pub plan: ReconstructionPlan,
    pub slots: DirichletSlots,
    pub material: Material,
    pub stabilization: Stabilization,
    pub stiffness: Stiffness,
    pub exec: Execution,
    factorization: Option<Factorization>,
}

impl Discretization {
    /// `mesh` must already carry its Dirichlet marks.
    pub fn new(mesh: Mesh, material: Material, stabilization: Stabilization, exec: Execution) -> Result<Self, SystemError> {
        let d = material.components();
        let plan = ReconstructionPlan::build(&mesh, d, exec)?;
        let slots = DirichletSlots::new(&mesh, d);
        let stiffness = assemble_stiffness(&FormContext { mesh: &mesh, plan: &plan, slots: &slots }, &material, stabilization, exec);
        Ok(Discretization { mesh, plan, slots, material, stabilization, stiffness, exec, factorization: None })
    }

    pub fn components(&self) -> usize {
        self.slots.components()
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_cells() * self.components()
    }

    pub fn context(&self) -> FormContext<'_> {
        FormContext { mesh: &self.mesh, plan: &self.plan, slots: &self.slots }
    }

    /// From-scratch assembly on the current topology.
    pub fn assemble_full(&self) -> Stiffness {
        assemble_stiffness(&self.context(), &self.material, self.stabilization, self.exec)
    }

    pub fn system(&self, loads: &LoadSpec, t: f64) -> Result<(LinearSystem, Vec<f64>), SystemError> {
        let g = loads.dirichlet_data(&self.mesh, &self.slots, t)?;
        let mut rhs = assemble_load(&self.mesh, &self.plan, loads, t)?;
        let lifted: Vec<f64> = self.stiffness.lift.mul_vec(&g, self.exec).into_iter().map(|x| -x).collect();
        rhs.iter_mut().zip(&lifted).for_each(|(r, l)| *r += l);
        Ok((LinearSystem { matrix: self.stiffness.matrix.clone(), rhs, dirichlet_contribution: lifted }, g))
    }

    /// Solves with the cached factorization of the current stiffness.
    pub fn solve(&mut self, rhs: &[f64]) -> Result<Vec<f64>, SystemError> {
        if self.factorization.is_none() {
            self.factorization = Some(Factorization::new(&self.stiffness.matrix)?);
        }
        self.factorization.as_ref().unwrap().solve(&self.stiffness.matrix, rhs, self.exec)
    }

    /// Breaks facet `f`, rebuilds the stencils around it and patches the
    /// stiffness with the difference of the affected element contributions.
    /// Returns the rebuilt facets. On failure nothing is changed.
    pub fn crack_facet(&mut self, f: usize) -> Result<Vec<usize>, SystemError> {
        let status = self.mesh.facet(f).status;
        if status != FacetStatus::Interior {
            return Err(MeshError::SplitNonInterior { facet: f, status }.into());
        }
        let touched = self.plan.crack_neighborhood(&self.mesh, f);
        let old = affected_elements(&self.mesh, &touched);
        let before = assemble_elements(&self.context(), &self.material, self.stabilization, &old, -1.0, self.exec);
        self.mesh.split_facet(f)?;
        let rebuilt = match self.plan.rebuild_after_crack(&self.mesh, f) {
            Ok(r) => r,
            Err(e) => {
                self.mesh.rollback_split(f);
                return Err(e.into());
            }
        };
        let new = affected_elements(&self.mesh, &rebuilt);
        let after = assemble_elements(&self.context(), &self.material, self.stabilization, &new, 1.0, self.exec);
        self.stiffness.apply_delta(&before);
        self.stiffness.apply_delta(&after);
        self.factorization = None;
        Ok(rebuilt)
    }

    /// `a_h(u, u)` split into the consistency and stabilization parts.
    pub fn energy_parts(&self, u: &[f64], g: &[f64]) -> (f64, f64) {
        let ctx = self.context();
        let parts = self.exec.map_slice(&elements(&self.mesh), |&e| {
            let forms = element_forms(&ctx, &self.material, self.stabilization, e);
            let vals: Vec<f64> = forms.rows.iter().map(|r| r.eval(u, g)).collect();
            let n = vals.len();
            let q: f64 = (0..n * n).map(|ij| vals[ij / n] * forms.weight[ij] * vals[ij % n]).sum();
            (e, q)
        });
        parts.into_iter().fold((0.0, 0.0), |(a, s), (e, q)| match e {
            Element::Cell(_) => (a + q, s),
            Element::Facet(_) => (a, s + q),
        })
    }
}

#[cfg(test)]
mod tests;
