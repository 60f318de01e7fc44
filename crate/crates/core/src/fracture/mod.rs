//! Crack propagation through mesh facets: energy release estimate per crack
//! vertex, facet selection by maximal strain-energy density, and the
//! quasi-static driver.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use log::{debug, info};
use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::material::{energy_density, Material};
use crate::mesh::{FacetStatus, Mesh, MeshError, Point};
use crate::reconstruction::{cell_gradients, facet_values};
use crate::system::{Discretization, LoadSpec, SystemError};

#[cfg(test)]
mod tests;

#[derive(Debug, Error)]
pub enum FractureError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("facet {facet} cannot break: {reason}")]
    Inadmissible { facet: usize, reason: String },
    #[error("window size must be at least 1")]
    Window,
}

/// Restricts which interior facets may break.
pub type CandidateFilter = Arc<dyn Fn(&Mesh, usize) -> bool + Send + Sync>;

/// Facets with both endpoints within `tol` of the line `y = y0`.
pub fn horizontal_line_filter(y0: f64, tol: f64) -> CandidateFilter {
    Arc::new(move |mesh: &Mesh, f: usize| {
        mesh.facet(f).vertices.iter().all(|&v| (mesh.vertices()[v].y - y0).abs() <= tol)
    })
}

#[derive(Clone)]
pub struct CrackParams {
    /// Number of most recent crack vertices considered by [`mark`].
    pub window: usize,
    pub candidate_filter: Option<CandidateFilter>,
    pub rng_seed: u64,
}

impl Default for CrackParams {
    fn default() -> Self {
        CrackParams { window: 6, candidate_filter: None, rng_seed: 0 }
    }
}

impl std::fmt::Debug for CrackParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CrackParams")
            .field("window", &self.window)
            .field("candidate_filter", &self.candidate_filter.is_some())
            .field("rng_seed", &self.rng_seed)
            .finish()
    }
}

/// Relative tolerance under which two maxima count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct FractureState {
    /// Crack vertices in the order they broke.
    pub crack_vertices: Vec<usize>,
    /// Crack facets in the order they broke, initial crack first.
    pub crack_facets: Vec<usize>,
    pub broken_per_cell: Vec<u32>,
    pub energy_release: BTreeMap<usize, f64>,
    pub last_marked: Option<usize>,
    /// Set once a crack vertex lands on the exterior boundary.
    pub reached_boundary: bool,
    rng: ChaCha8Rng,
}

impl FractureState {
    pub fn new(mesh: &Mesh, seed: u64) -> Self {
        FractureState {
            crack_vertices: Vec::new(),
            crack_facets: Vec::new(),
            broken_per_cell: vec![0; mesh.num_cells()],
            energy_release: BTreeMap::new(),
            last_marked: None,
            reached_boundary: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Splits every interior facet lying on `polyline`, given from the crack
    /// mouth to the tip, and records its vertices in that order.
    pub fn with_initial_crack(mesh: &mut Mesh, polyline: &[Point], seed: u64) -> Result<Self, FractureError> {
        let mut state = FractureState::new(mesh, seed);
        let tol = 1e-9 * mesh.bbox_diagonal();
        for f in mesh.facets_on_polyline(polyline, tol) {
            mesh.split_facet(f)?;
            let [a, b] = mesh.facet(f).vertices;
            let sa = crate::mesh::arclength_parameter(polyline, &mesh.vertices()[a]);
            let sb = crate::mesh::arclength_parameter(polyline, &mesh.vertices()[b]);
            let ordered = if sa <= sb { [a, b] } else { [b, a] };
            state.record_break(mesh, f, ordered);
        }
        Ok(state)
    }

    fn record_break(&mut self, mesh: &Mesh, f: usize, ordered: [usize; 2]) {
        for v in ordered {
            if !self.crack_vertices.contains(&v) {
                self.crack_vertices.push(v);
            }
        }
        self.crack_facets.push(f);
        let facet = mesh.facet(f);
        for c in std::iter::once(facet.minus).chain(facet.plus) {
            self.broken_per_cell[c] += 1;
        }
    }

    pub fn tip(&self) -> Option<usize> {
        self.crack_vertices.last().copied()
    }

    /// `true` if the facet lies in a cell already holding a broken facet.
    pub fn in_broken_cell(&self, mesh: &Mesh, f: usize) -> bool {
        let facet = mesh.facet(f);
        std::iter::once(facet.minus).chain(facet.plus).any(|c| self.broken_per_cell[c] > 0)
    }
}

/// Per-cell gradient, strain and stress.
#[derive(Clone, Debug)]
pub struct CellFields {
    pub gradients: Vec<Matrix2<f64>>,
    pub strains: Vec<Matrix2<f64>>,
    pub stresses: Vec<Matrix2<f64>>,
}

pub fn cell_fields(disc: &Discretization, u: &[f64], g: &[f64]) -> CellFields {
    let values = facet_values(&disc.mesh, &disc.plan, &disc.slots, u, g, disc.exec);
    let gradients = cell_gradients(&disc.mesh, &values, disc.exec);
    let (strains, stresses) = gradients.iter().map(|gr| disc.material.strain_stress(gr)).unzip();
    CellFields { gradients, strains, stresses }
}

/// Cell value as a 2-vector (second component zero in antiplane mode).
pub fn cell_value(u: &[f64], d: usize, c: usize) -> Vector2<f64> {
    let mut v = Vector2::zeros();
    for k in 0..d {
        v[k] = u[c * d + k];
    }
    v
}

fn average(stresses: &[Matrix2<f64>], mesh: &Mesh, f: usize) -> Matrix2<f64> {
    let facet = mesh.facet(f);
    match facet.plus {
        Some(p) => (stresses[facet.minus] + stresses[p]) * 0.5,
        None => stresses[facet.minus],
    }
}

/// `π n_F·{Σ}_F·[u]_{F'}` for a crack facet `F` and an interior facet `F'`.
/// The jump across `F'` is oriented along `n_F` (plus side minus minus side
/// when `n_F'·n_F ≥ 0`) so that an opening crack gives a positive value.
pub fn pair_release(
    mesh: &Mesh,
    material: &Material,
    stresses: &[Matrix2<f64>],
    u: &[f64],
    d: usize,
    crack: usize,
    inner: usize,
) -> f64 {
    let fc = mesh.facet(crack);
    let fi = mesh.facet(inner);
    let plus = fi.plus.expect("interior facet");
    let mut jump = cell_value(u, d, plus) - cell_value(u, d, fi.minus);
    if fi.normal.dot(&fc.normal) < 0.0 {
        jump = -jump;
    }
    let traction = material.traction(&average(stresses, mesh, crack), &fc.normal);
    PI * traction.dot(&jump)
}

/// `G_h(v)` for every crack vertex; `−∞` where no interior facet touches `v`.
pub fn estimate(
    mesh: &Mesh,
    material: &Material,
    state: &FractureState,
    stresses: &[Matrix2<f64>],
    u: &[f64],
) -> BTreeMap<usize, f64> {
    let d = material.components();
    let mut out = BTreeMap::new();
    for &v in &state.crack_vertices {
        let facets = mesh.vertex_facets(v);
        let mut best = f64::NEG_INFINITY;
        for &fc in facets.iter().filter(|&&f| mesh.facet(f).status == FacetStatus::Cracked) {
            for &fi in facets.iter().filter(|&&f| mesh.facet(f).status == FacetStatus::Interior) {
                best = best.max(pair_release(mesh, material, stresses, u, d, fc, fi));
            }
        }
        out.insert(v, best);
    }
    out
}

/// Indices of the entries tied with the maximum.
fn argmax_ties(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|&(_, &x)| x == best || (best - x).abs() <= TIE_TOL * best.abs())
        .map(|(i, _)| i)
        .collect()
}

fn pick<R: Rng>(rng: &mut R, ties: &[usize], what: &str) -> usize {
    if ties.len() > 1 {
        let i = ties[rng.random_range(0..ties.len())];
        debug!("{what}: {} tied maxima, picked index {i}", ties.len());
        i
    } else {
        ties[0]
    }
}

/// `½ {Σ}_F : {ε}_F` over the two cells of `f`.
pub fn facet_energy_density(mesh: &Mesh, fields: &CellFields, f: usize) -> f64 {
    energy_density(&average(&fields.stresses, mesh, f), &average(&fields.strains, mesh, f))
}

/// Vertex through which the crack may advance, if any.
pub fn select_vertex(state: &mut FractureState, params: &CrackParams, toughness: f64, release: &BTreeMap<usize, f64>) -> Option<usize> {
    let n = state.crack_vertices.len();
    let window = &state.crack_vertices[n.saturating_sub(params.window)..];
    let admissible: Vec<(usize, f64)> = window
        .iter()
        .filter_map(|v| release.get(v).map(|&g| (*v, g)))
        .filter(|&(_, g)| g >= toughness)
        .collect();
    if admissible.is_empty() {
        return None;
    }
    let values: Vec<f64> = admissible.iter().map(|p| p.1).collect();
    let i = pick(&mut state.rng, &argmax_ties(&values), "vertex");
    Some(admissible[i].0)
}

/// Interior facets at `z` that may break.
pub fn candidate_facets(mesh: &Mesh, state: &FractureState, params: &CrackParams, z: usize) -> Vec<usize> {
    mesh.vertex_facets(z)
        .iter()
        .copied()
        .filter(|&f| mesh.facet(f).status == FacetStatus::Interior)
        .filter(|&f| !state.in_broken_cell(mesh, f))
        .filter(|&f| params.candidate_filter.as_ref().is_none_or(|keep| keep(mesh, f)))
        .collect()
}

/// The facet to break next, or `None` when the crack is stable.
pub fn mark(
    mesh: &Mesh,
    state: &mut FractureState,
    params: &CrackParams,
    toughness: f64,
    release: &BTreeMap<usize, f64>,
    fields: &CellFields,
) -> Option<usize> {
    let z = select_vertex(state, params, toughness, release)?;
    let candidates = candidate_facets(mesh, state, params, z);
    if candidates.is_empty() {
        debug!("vertex {z} exceeds the toughness but has no breakable facet");
        return None;
    }
    let values: Vec<f64> = candidates.iter().map(|&f| facet_energy_density(mesh, fields, f)).collect();
    let i = pick(&mut state.rng, &argmax_ties(&values), "facet");
    Some(candidates[i])
}

/// Breaks `f`, appends its new vertices (the one farther from the current
/// tip last) and patches the reconstruction and stiffness.
pub fn update(disc: &mut Discretization, state: &mut FractureState, f: usize) -> Result<(), FractureError> {
    let facet = disc.mesh.facet(f);
    if facet.status != FacetStatus::Interior {
        return Err(FractureError::Inadmissible { facet: f, reason: format!("status is {}", facet.status) });
    }
    if state.in_broken_cell(&disc.mesh, f) {
        return Err(FractureError::Inadmissible { facet: f, reason: "a neighbouring cell already holds a broken facet".into() });
    }
    let [a, b] = facet.vertices;
    let ordered = match state.tip() {
        Some(t) => {
            let x = disc.mesh.vertices()[t];
            let (da, db) = ((disc.mesh.vertices()[a] - x).norm(), (disc.mesh.vertices()[b] - x).norm());
            if da <= db { [a, b] } else { [b, a] }
        }
        None => [a, b],
    };
    let fresh: Vec<usize> = ordered.iter().copied().filter(|v| !state.crack_vertices.contains(v)).collect();
    disc.crack_facet(f)?;
    state.record_break(&disc.mesh, f, ordered);
    state.last_marked = Some(f);
    if fresh.iter().any(|&v| disc.mesh.is_exterior_vertex(v)) {
        state.reached_boundary = true;
    }
    Ok(())
}

/// Quasi-static loading `t_k = k Δ` for `k = 1..=steps`.
pub struct QuasiStatic {
    pub loads: LoadSpec,
    pub increment: f64,
    pub steps: usize,
    pub params: CrackParams,
    /// Dirichlet tag whose reaction force is recorded.
    pub reaction_tag: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub load: f64,
    /// Number of solves at this load.
    pub inner_iterations: usize,
    pub broken: Vec<usize>,
    pub crack_length: f64,
    pub reaction: Option<Vector2<f64>>,
    pub max_release: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SimulationTrace {
    pub steps: Vec<StepRecord>,
    pub crack_facets: Vec<usize>,
    pub crack_vertices: Vec<usize>,
    pub reached_boundary: bool,
    pub dofs: Vec<f64>,
    pub dirichlet: Vec<f64>,
    /// Set when the run aborted; the steps above are complete.
    pub error: Option<String>,
}

/// Converged state after each load step, for output.
pub struct StepView<'a> {
    pub record: &'a StepRecord,
    pub disc: &'a Discretization,
    pub state: &'a FractureState,
    pub dofs: &'a [f64],
    pub dirichlet: &'a [f64],
    pub fields: &'a CellFields,
}

pub fn run_quasi_static(disc: &mut Discretization, state: &mut FractureState, problem: &QuasiStatic) -> SimulationTrace {
    run_quasi_static_with(disc, state, problem, |_| {})
}

pub fn run_quasi_static_with(
    disc: &mut Discretization,
    state: &mut FractureState,
    problem: &QuasiStatic,
    mut observe: impl FnMut(&StepView),
) -> SimulationTrace {
    let mut trace = SimulationTrace::default();
    if problem.params.window == 0 {
        trace.error = Some(FractureError::Window.to_string());
        return trace;
    }
    let toughness = disc.material.toughness;
    let max_inner = disc.mesh.facets().iter().filter(|f| f.is_interior()).count() + 1;
    for k in 1..=problem.steps {
        let load = k as f64 * problem.increment;
        let mut broken = Vec::new();
        let mut inner = 0;
        let mut max_release = f64::NEG_INFINITY;
        let result: Result<(Vec<f64>, Vec<f64>, CellFields), FractureError> = (|| loop {
            let (sys, g) = disc.system(&problem.loads, load)?;
            let u = disc.solve(&sys.rhs)?;
            inner += 1;
            let fields = cell_fields(disc, &u, &g);
            let release = estimate(&disc.mesh, &disc.material, state, &fields.stresses, &u);
            max_release = release.values().copied().fold(max_release, f64::max);
            state.energy_release = release;
            if state.reached_boundary || inner > max_inner {
                return Ok((u, g, fields));
            }
            let release = std::mem::take(&mut state.energy_release);
            let marked = mark(&disc.mesh, state, &problem.params, toughness, &release, &fields);
            state.energy_release = release;
            match marked {
                None => return Ok((u, g, fields)),
                Some(f) => {
                    update(disc, state, f)?;
                    broken.push(f);
                }
            }
        })();
        let (u, g, fields) = match result {
            Ok(r) => r,
            Err(e) => {
                trace.error = Some(format!("load step {k}: {e}"));
                break;
            }
        };
        let reaction = problem
            .reaction_tag
            .as_deref()
            .and_then(|tag| crate::analysis::reaction_force(&disc.mesh, &disc.material, &fields.stresses, tag).ok());
        let record = StepRecord {
            step: k,
            load,
            inner_iterations: inner,
            broken,
            crack_length: disc.mesh.crack_length(),
            reaction,
            max_release,
        };
        info!(
            "step {k}: load {load:.4e}, {} facets broken, crack length {:.4}",
            record.broken.len(),
            record.crack_length
        );
        observe(&StepView { record: &record, disc, state, dofs: &u, dirichlet: &g, fields: &fields });
        trace.steps.push(record);
        trace.dofs = u;
        trace.dirichlet = g;
        if state.reached_boundary {
            info!("crack reached the boundary at step {k}");
            break;
        }
    }
    trace.crack_facets = state.crack_facets.clone();
    trace.crack_vertices = state.crack_vertices.clone();
    trace.reached_boundary = state.reached_boundary;
    trace
}
