//! Element-by-element assembly of the stabilized stiffness form.
//!
//! Facet values, cell gradients and P1 jumps are all affine in the cell dofs
//! and the Dirichlet data, so each element contributes `Bᵀ W B` where the
//! rows of `B` are those affine forms. Columns that are data slots go to the
//! lifting matrix instead of the stiffness.

use std::collections::BTreeSet;

use super::sparse::{CsrMatrix, Triplet};
use crate::exec::Execution;
use crate::material::Material;
use crate::mesh::{FacetStatus, Mesh, Point};
use crate::reconstruction::{DirichletSlots, ReconstructionPlan};

/// A dof or a Dirichlet data slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Col {
    Dof(usize),
    Data(usize),
}

/// Sparse linear combination of dofs and data slots.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinForm {
    pub terms: Vec<(Col, f64)>,
}

impl LinForm {
    pub fn single(col: Col, w: f64) -> Self {
        LinForm { terms: vec![(col, w)] }
    }

    pub fn add_scaled(&mut self, other: &LinForm, s: f64) {
        self.terms.extend(other.terms.iter().map(|&(c, w)| (c, w * s)));
    }

    /// Sorts by column and merges duplicates.
    pub fn compact(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(Col, f64)> = Vec::with_capacity(self.terms.len());
        for (c, w) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == c => last.1 += w,
                _ => out.push((c, w)),
            }
        }
        LinForm { terms: out }
    }

    pub fn eval(&self, u: &[f64], g: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(c, w)| match c {
                Col::Dof(i) => w * u[i],
                Col::Data(s) => w * g[s],
            })
            .sum()
    }
}

/// Everything the affine forms depend on.
#[derive(Clone, Copy)]
pub struct FormContext<'a> {
    pub mesh: &'a Mesh,
    pub plan: &'a ReconstructionPlan,
    pub slots: &'a DirichletSlots,
}

impl FormContext<'_> {
    fn d(&self) -> usize {
        self.slots.components()
    }

    /// Component `k` of facet `f` as seen from cell `c`.
    pub fn facet_form(&self, f: usize, c: usize, k: usize) -> LinForm {
        if let Some(s) = self.slots.slot(f, k) {
            return LinForm::single(Col::Data(s), 1.0);
        }
        let side = self.mesh.facet(f).side_of(c).expect("cell owns facet");
        let d = self.d();
        LinForm { terms: self.plan.stencil(f).weights_for(side).iter().map(|&(cell, w)| (Col::Dof(cell * d + k), w)).collect() }
    }

    /// Entries of `G_c` row by row: index `2k + l` is `∂u_k/∂x_l`.
    pub fn gradient_forms(&self, c: usize) -> Vec<LinForm> {
        let d = self.d();
        let area = self.mesh.area(c);
        let mut rows = vec![LinForm::default(); 2 * d];
        for &f in self.mesh.cell_facets(c) {
            let n = self.mesh.outward_normal(f, c);
            let scale = self.mesh.facet(f).length / area;
            for k in 0..d {
                let v = self.facet_form(f, c, k);
                rows[2 * k].add_scaled(&v, scale * n.x);
                rows[2 * k + 1].add_scaled(&v, scale * n.y);
            }
        }
        rows.into_iter().map(LinForm::compact).collect()
    }

    /// Component `k` of `𝔉R_c(x)`, given the gradient forms of `c`.
    pub fn p1_form(&self, c: usize, grads: &[LinForm], x: &Point, k: usize) -> LinForm {
        let dx = x - self.mesh.barycenter(c);
        let mut out = LinForm::single(Col::Dof(c * self.d() + k), 1.0);
        out.add_scaled(&grads[2 * k], dx.x);
        out.add_scaled(&grads[2 * k + 1], dx.y);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Cell(usize),
    Facet(usize),
}

/// Elements contributing to the bilinear form: every cell, and every
/// interior or Dirichlet facet.
pub fn elements(mesh: &Mesh) -> Vec<Element> {
    let cells = (0..mesh.num_cells()).map(Element::Cell);
    let facets = (0..mesh.num_facets())
        .filter(|&f| matches!(mesh.facet(f).status, FacetStatus::Interior | FacetStatus::BoundaryDirichlet))
        .map(Element::Facet);
    cells.chain(facets).collect()
}

/// Rows and the symmetric weight block `W` (row-major, `rows.len()²`)
/// describing one element's energy `Σ W_ij r_i r_j`.
pub struct ElementForms {
    pub rows: Vec<LinForm>,
    pub weight: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stabilization {
    /// Coefficient `β` in `β μ / h_F`; the default is 2.
    pub beta: f64,
}

impl Default for Stabilization {
    fn default() -> Self {
        Stabilization { beta: 2.0 }
    }
}

pub fn element_forms(ctx: &FormContext, material: &Material, stab: Stabilization, e: Element) -> ElementForms {
    let d = ctx.d();
    match e {
        Element::Cell(c) => {
            let rows = ctx.gradient_forms(c);
            let n = rows.len();
            let dm = material.gradient_form();
            let area = ctx.mesh.area(c);
            let weight = (0..n * n).map(|ij| area * dm[ij / n][ij % n]).collect();
            ElementForms { rows, weight }
        }
        Element::Facet(f) => {
            let facet = ctx.mesh.facet(f);
            let eta = stab.beta * material.mu / facet.diameter() * facet.length;
            let x = facet.barycenter;
            let gm = ctx.gradient_forms(facet.minus);
            let rows: Vec<LinForm> = match facet.status {
                FacetStatus::Interior => {
                    let cp = facet.plus.expect("interior facet");
                    let gp = ctx.gradient_forms(cp);
                    (0..d)
                        .map(|k| {
                            let mut j = ctx.p1_form(facet.minus, &gm, &x, k);
                            j.add_scaled(&ctx.p1_form(cp, &gp, &x, k), -1.0);
                            j.compact()
                        })
                        .collect()
                }
                FacetStatus::BoundaryDirichlet => (0..d)
                    .filter_map(|k| {
                        let s = ctx.slots.slot(f, k)?;
                        let mut j = LinForm::single(Col::Data(s), 1.0);
                        j.add_scaled(&ctx.p1_form(facet.minus, &gm, &x, k), -1.0);
                        Some(j.compact())
                    })
                    .collect(),
                _ => Vec::new(),
            };
            let n = rows.len();
            let weight = (0..n * n).map(|ij| if ij / n == ij % n { eta } else { 0.0 }).collect();
            ElementForms { rows, weight }
        }
    }
}

/// Output buffers for [`element_triplets`].
#[derive(Default)]
pub struct TripletSink {
    pub stiff: Vec<Triplet>,
    pub lift: Vec<Triplet>,
    pub data: Vec<Triplet>,
}

/// Local matrix `Bᵀ W B` split into dof–dof, dof–data and data–data
/// triplets. Square blocks are computed on the upper triangle and mirrored,
/// so they are exactly symmetric.
pub fn element_triplets(forms: &ElementForms, sign: f64, out: &mut TripletSink) {
    let mut cols: Vec<Col> = forms.rows.iter().flat_map(|r| r.terms.iter().map(|t| t.0)).collect();
    cols.sort_unstable();
    cols.dedup();
    let nr = forms.rows.len();
    let nc = cols.len();
    if nr == 0 || nc == 0 {
        return;
    }
    let mut b = vec![0.0; nr * nc];
    for (i, r) in forms.rows.iter().enumerate() {
        for &(c, w) in &r.terms {
            let j = cols.binary_search(&c).unwrap();
            b[i * nc + j] += w;
        }
    }
    // wb = W B
    let mut wb = vec![0.0; nr * nc];
    for i in 0..nr {
        for k in 0..nr {
            let w = forms.weight[i * nr + k];
            if w != 0.0 {
                for j in 0..nc {
                    wb[i * nc + j] += w * b[k * nc + j];
                }
            }
        }
    }
    let entry = |p: usize, q: usize| -> f64 { (0..nr).map(|i| b[i * nc + p] * wb[i * nc + q]).sum() };
    for p in 0..nc {
        for q in p..nc {
            let v = sign * entry(p, q);
            match (cols[p], cols[q]) {
                (Col::Dof(ip), Col::Dof(iq)) => {
                    out.stiff.push((ip, iq, v));
                    if iq != ip {
                        out.stiff.push((iq, ip, v));
                    }
                }
                (Col::Dof(ip), Col::Data(s)) => out.lift.push((ip, s, v)),
                (Col::Data(r), Col::Data(s)) => {
                    out.data.push((r, s, v));
                    if r != s {
                        out.data.push((s, r, v));
                    }
                }
                (Col::Data(_), Col::Dof(_)) => unreachable!("data columns sort last"),
            }
        }
    }
}

/// Stiffness over free dofs and the coupling to the Dirichlet data.
#[derive(Clone, Debug, PartialEq)]
pub struct Stiffness {
    pub matrix: CsrMatrix,
    /// `A_ug`: the right-hand side is `loads − lift · g`.
    pub lift: CsrMatrix,
    /// `A_gg`, used for reaction forces.
    pub data: CsrMatrix,
}

const CHUNK: usize = 2048;

pub fn assemble_elements(
    ctx: &FormContext,
    material: &Material,
    stab: Stabilization,
    elems: &[Element],
    sign: f64,
    exec: Execution,
) -> Stiffness {
    let ndofs = ctx.mesh.num_cells() * ctx.d();
    let nslots = ctx.slots.len();
    let chunks: Vec<&[Element]> = elems.chunks(CHUNK).collect();
    let parts = exec.map_slice(&chunks, |chunk| {
        let mut sink = TripletSink::default();
        for &e in chunk.iter() {
            element_triplets(&element_forms(ctx, material, stab, e), sign, &mut sink);
        }
        [
            CsrMatrix::from_triplets(ndofs, ndofs, sink.stiff, Execution::Sequential),
            CsrMatrix::from_triplets(ndofs, nslots, sink.lift, Execution::Sequential),
            CsrMatrix::from_triplets(nslots, nslots, sink.data, Execution::Sequential),
        ]
    });
    let (mut a, mut l, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for [pa, pl, pg] in parts {
        a.push(pa);
        l.push(pl);
        g.push(pg);
    }
    Stiffness {
        matrix: CsrMatrix::sum_all(a, ndofs, ndofs, exec),
        lift: CsrMatrix::sum_all(l, ndofs, nslots, exec),
        data: CsrMatrix::sum_all(g, nslots, nslots, exec),
    }
}

/// From-scratch assembly.
pub fn assemble_stiffness(ctx: &FormContext, material: &Material, stab: Stabilization, exec: Execution) -> Stiffness {
    assemble_elements(ctx, material, stab, &elements(ctx.mesh), 1.0, exec)
}

/// Elements whose contribution may change when the stencils of `rebuilt`
/// change: cells owning a rebuilt facet, and every facet of those cells.
pub fn affected_elements(mesh: &Mesh, rebuilt: &[usize]) -> Vec<Element> {
    let mut cells = BTreeSet::new();
    for &f in rebuilt {
        let facet = mesh.facet(f);
        cells.insert(facet.minus);
        if let Some(p) = facet.plus {
            cells.insert(p);
        }
    }
    let mut out = BTreeSet::new();
    for &c in &cells {
        out.insert(Element::Cell(c));
        for &f in mesh.cell_facets(c) {
            out.insert(Element::Facet(f));
        }
    }
    out.into_iter()
        .filter(|e| match *e {
            Element::Cell(_) => true,
            Element::Facet(f) => matches!(mesh.facet(f).status, FacetStatus::Interior | FacetStatus::BoundaryDirichlet),
        })
        .collect()
}

impl Stiffness {
    pub fn apply_delta(&mut self, delta: &Stiffness) {
        self.matrix = self.matrix.add(&delta.matrix);
        self.lift = self.lift.add(&delta.lift);
        self.data = self.data.add(&delta.data);
    }

    /// `∂E/∂g = A_ugᵀ u + A_gg g`: the force each data slot exerts on the
    /// body.
    pub fn data_forces(&self, u: &[f64], g: &[f64], exec: Execution) -> Vec<f64> {
        let lt = self.lift.transpose().mul_vec(u, exec);
        let gg = self.data.mul_vec(g, exec);
        lt.iter().zip(gg).map(|(a, b)| a + b).collect()
    }
}
