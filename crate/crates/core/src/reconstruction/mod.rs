//! Facet reconstruction operator, cell gradients and the cellwise P1
//! reconstruction.
//!
//! Every facet owns a [`FacetStencil`] listing the cells (and weights) whose
//! dofs produce its reconstructed displacement. Stencils only ever use cells
//! reachable from the facet's own cells through uncracked interior facets.

mod fields;
pub mod weights;

use std::collections::{BTreeSet, VecDeque};

use log::debug;
use thiserror::Error;

use crate::exec::Execution;
use crate::mesh::{FacetStatus, Mesh, Point, Side};

pub use fields::{
    cell_gradient, cell_gradients, facet_values, p1_value, reconstruct_facet_values, DirichletSlots,
    FacetValues,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructionError {
    #[error("facet {facet}: degenerate stencil ({reason})")]
    Degenerate { facet: usize, reason: String },
    #[error("reconstruction plan is stale at facet {facet}: built for {planned}, mesh says {actual}")]
    Stale { facet: usize, planned: FacetStatus, actual: FacetStatus },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StencilKind {
    /// Dirichlet facet: constrained components come from boundary data,
    /// free components (if any) from a one-sided stencil in `weights`.
    DirichletEval,
    NeumannBarycentric,
    InteriorSymmetric,
    /// Cracked facet: `weights` serves the minus cell, `plus_weights` the
    /// plus cell; each is a one-sided boundary stencil.
    CrackedSides,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetStencil {
    pub facet: usize,
    pub kind: StencilKind,
    /// Final weights (for symmetric stencils the ½ factor is included).
    pub weights: Vec<(usize, f64)>,
    pub plus_weights: Vec<(usize, f64)>,
    /// For symmetric stencils, `weights[..k]` is `I_-` and `weights[k..]`
    /// is `I_+`.
    pub split: Option<usize>,
    /// True when the generic construction was replaced by an enlarged
    /// minimal-norm fit.
    pub fallback: bool,
}

impl FacetStencil {
    /// Weights used by the cell on `side` of the facet.
    pub fn weights_for(&self, side: Side) -> &[(usize, f64)] {
        match (self.kind, side) {
            (StencilKind::CrackedSides, Side::Plus) => &self.plus_weights,
            _ => &self.weights,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.iter().chain(&self.plus_weights).map(|&(c, _)| c)
    }

    /// `I_-` and `I_+` of a symmetric stencil.
    pub fn symmetric_sides(&self) -> Option<(&[(usize, f64)], &[(usize, f64)])> {
        self.split.map(|k| self.weights.split_at(k))
    }
}

fn degenerate(facet: usize, reason: impl Into<String>) -> ReconstructionError {
    ReconstructionError::Degenerate { facet, reason: reason.into() }
}

/// Cells of `candidates` reachable from `seeds` through uncracked interior
/// facets without leaving `candidates`; sorted.
fn connected_within(mesh: &Mesh, seeds: &[usize], candidates: &BTreeSet<usize>) -> Vec<usize> {
    let mut seen: BTreeSet<usize> = seeds.iter().copied().collect();
    let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
    while let Some(c) = queue.pop_front() {
        for n in mesh.interior_neighbors(c) {
            if candidates.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.into_iter().collect()
}

fn fit_cells(mesh: &Mesh, cells: &[usize], target: &Point, scale: f64) -> Option<Vec<(usize, f64)>> {
    let pts: Vec<Point> = cells.iter().map(|&c| mesh.barycenter(c)).collect();
    weights::fit(&pts, target, scale).map(|w| cells.iter().copied().zip(w).collect())
}

/// One-sided stencil for the facet `f` as seen from `owner`: the owner and
/// its uncracked neighbours, enlarged by up to two vertex rings when that
/// does not give three non-collinear barycenters.
pub fn build_neumann_stencil(mesh: &Mesh, f: usize, owner: usize) -> Result<(Vec<(usize, f64)>, bool), ReconstructionError> {
    let facet = mesh.facet(f);
    let (x, h) = (facet.barycenter, facet.diameter());
    let mut set: Vec<usize> = std::iter::once(owner).chain(mesh.interior_neighbors(owner)).collect();
    if set.len() == 3 {
        if let Some(w) = fit_cells(mesh, &set, &x, h) {
            return Ok((w, false));
        }
    }
    for _ring in 0..2 {
        let mut candidates: BTreeSet<usize> = set.iter().copied().collect();
        for &c in &set {
            candidates.extend(mesh.vertex_neighbors(c));
        }
        set = connected_within(mesh, &[owner], &candidates);
        if let Some(w) = fit_cells(mesh, &set, &x, h) {
            return Ok((w, true));
        }
    }
    Err(degenerate(f, format!("fewer than 3 non-collinear connected cells around cell {owner}")))
}

/// Symmetric stencil of an interior facet: `I_- = {c_+} ∪ N(c_-)`,
/// `I_+ = {c_-} ∪ N(c_+)`, each with barycentric weights scaled by ½.
/// Degenerate sides trigger a minimal-norm fit over the cells sharing a
/// vertex with `c_-` or `c_+`.
pub fn build_interior_stencil(mesh: &Mesh, f: usize) -> Result<FacetStencil, ReconstructionError> {
    let facet = mesh.facet(f);
    if facet.status != FacetStatus::Interior {
        return Err(degenerate(f, format!("not interior ({})", facet.status)));
    }
    let (cm, cp) = (facet.minus, facet.plus.expect("interior facet has two cells"));
    let (x, h) = (facet.barycenter, facet.diameter());
    let side = |own: usize, other: usize| -> Vec<usize> {
        std::iter::once(other).chain(mesh.interior_neighbors(own).filter(|&n| n != other)).collect()
    };
    let (im, ip) = (side(cm, cp), side(cp, cm));
    let disjoint = im.iter().all(|c| !ip.contains(c));
    if im.len() == 3 && ip.len() == 3 && disjoint {
        if let (Some(wm), Some(wp)) = (fit_cells(mesh, &im, &x, h), fit_cells(mesh, &ip, &x, h)) {
            let weights: Vec<(usize, f64)> = wm.into_iter().chain(wp).map(|(c, w)| (c, 0.5 * w)).collect();
            return Ok(FacetStencil {
                facet: f,
                kind: StencilKind::InteriorSymmetric,
                weights,
                plus_weights: Vec::new(),
                split: Some(3),
                fallback: false,
            });
        }
    }
    let mut candidates: BTreeSet<usize> = [cm, cp].into_iter().collect();
    candidates.extend(mesh.vertex_neighbors(cm));
    candidates.extend(mesh.vertex_neighbors(cp));
    let set = connected_within(mesh, &[cm, cp], &candidates);
    let weights = fit_cells(mesh, &set, &x, h)
        .ok_or_else(|| degenerate(f, "symmetric stencil and its enlarged fallback are both degenerate"))?;
    Ok(FacetStencil {
        facet: f,
        kind: StencilKind::InteriorSymmetric,
        weights,
        plus_weights: Vec::new(),
        split: None,
        fallback: true,
    })
}

/// Stencil matching the current status of facet `f`; `components` is the
/// number of displacement components per cell.
pub fn build_stencil(mesh: &Mesh, f: usize, components: usize) -> Result<FacetStencil, ReconstructionError> {
    let facet = mesh.facet(f);
    let one_sided = |kind, (weights, fallback): (Vec<(usize, f64)>, bool)| FacetStencil {
        facet: f,
        kind,
        weights,
        plus_weights: Vec::new(),
        split: None,
        fallback,
    };
    match facet.status {
        FacetStatus::Interior => build_interior_stencil(mesh, f),
        FacetStatus::BoundaryNeumann => {
            Ok(one_sided(StencilKind::NeumannBarycentric, build_neumann_stencil(mesh, f, facet.minus)?))
        }
        FacetStatus::BoundaryDirichlet => {
            if (0..components).all(|k| facet.mask.constrains(k)) {
                Ok(one_sided(StencilKind::DirichletEval, (Vec::new(), false)))
            } else {
                Ok(one_sided(StencilKind::DirichletEval, build_neumann_stencil(mesh, f, facet.minus)?))
            }
        }
        FacetStatus::Cracked => {
            let (wm, fm) = build_neumann_stencil(mesh, f, facet.minus)?;
            let plus = facet.plus.expect("cracked facet keeps both cells");
            let (wp, fp) = build_neumann_stencil(mesh, f, plus)?;
            Ok(FacetStencil {
                facet: f,
                kind: StencilKind::CrackedSides,
                weights: wm,
                plus_weights: wp,
                split: None,
                fallback: fm || fp,
            })
        }
    }
}

/// One stencil per facet, plus the reverse index needed to rebuild locally
/// after a facet cracks.
#[derive(Clone, Debug)]
pub struct ReconstructionPlan {
    stencils: Vec<FacetStencil>,
    /// cell → facets whose stencil uses the cell
    users: Vec<Vec<usize>>,
    /// facet statuses the plan was built against
    statuses: Vec<FacetStatus>,
    components: usize,
}

impl ReconstructionPlan {
    pub fn build(mesh: &Mesh, components: usize, exec: Execution) -> Result<Self, ReconstructionError> {
        let stencils = exec.try_map(mesh.num_facets(), |f| build_stencil(mesh, f, components))?;
        let mut users = vec![Vec::new(); mesh.num_cells()];
        for s in &stencils {
            for c in s.cells() {
                users[c].push(s.facet);
            }
        }
        for u in users.iter_mut() {
            u.sort_unstable();
            u.dedup();
        }
        let fallbacks = stencils.iter().filter(|s| s.fallback).count();
        if fallbacks > 0 {
            debug!("reconstruction: {fallbacks} stencils use the enlarged fallback");
        }
        let statuses = mesh.facets().iter().map(|f| f.status).collect();
        Ok(ReconstructionPlan { stencils, users, statuses, components })
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn stencil(&self, f: usize) -> &FacetStencil {
        &self.stencils[f]
    }

    pub fn stencils(&self) -> &[FacetStencil] {
        &self.stencils
    }

    pub fn fallback_count(&self) -> usize {
        self.stencils.iter().filter(|s| s.fallback).count()
    }

    /// Facets whose status changed since the plan was built.
    pub fn dirty(&self, mesh: &Mesh) -> Vec<usize> {
        (0..mesh.num_facets()).filter(|&f| mesh.facet(f).status != self.statuses[f]).collect()
    }

    pub fn check_current(&self, mesh: &Mesh) -> Result<(), ReconstructionError> {
        match self.dirty(mesh).first() {
            None => Ok(()),
            Some(&f) => Err(ReconstructionError::Stale {
                facet: f,
                planned: self.statuses[f],
                actual: mesh.facet(f).status,
            }),
        }
    }

    /// Facets whose stencil uses cell `c`.
    pub fn users(&self, c: usize) -> &[usize] {
        &self.users[c]
    }

    /// Facets that [`rebuild_after_crack`](Self::rebuild_after_crack) will
    /// touch when `f` breaks, sorted.
    pub fn crack_neighborhood(&self, mesh: &Mesh, f: usize) -> Vec<usize> {
        let facet = mesh.facet(f);
        let mut touched: BTreeSet<usize> = BTreeSet::from([f]);
        for c in std::iter::once(facet.minus).chain(facet.plus) {
            touched.extend(self.users[c].iter().copied());
        }
        touched.into_iter().collect()
    }

    /// Rebuilds every stencil that uses a cell adjacent to the freshly
    /// cracked facet `f`, and `f` itself. Returns the rebuilt facets, sorted.
    pub fn rebuild_after_crack(&mut self, mesh: &Mesh, f: usize) -> Result<Vec<usize>, ReconstructionError> {
        let touched = self.crack_neighborhood(mesh, f);
        let fresh: Vec<FacetStencil> =
            touched.iter().map(|&g| build_stencil(mesh, g, self.components)).collect::<Result<_, _>>()?;
        for (g, stencil) in touched.iter().zip(fresh) {
            for c in self.stencils[*g].cells() {
                if let Ok(pos) = self.users[c].binary_search(g) {
                    self.users[c].remove(pos);
                }
            }
            for c in stencil.cells() {
                if let Err(pos) = self.users[c].binary_search(g) {
                    self.users[c].insert(pos, *g);
                }
            }
            self.statuses[*g] = mesh.facet(*g).status;
            self.stencils[*g] = stencil;
        }
        self.statuses[f] = mesh.facet(f).status;
        Ok(touched)
    }
}
