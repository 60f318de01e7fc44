//! Scenario layer: configuration, the built-in experiments, execution and
//! artifact output.

pub mod builtin;
pub mod config;
pub mod output;

use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use thiserror::Error;

use crate::analysis::{antiplane_reference_at, convergence_rates, crack_length_curve, crack_speed_fit, l2_errors, ErrorReport};
use crate::exec::Execution;
use crate::fracture::{horizontal_line_filter, CrackParams, FractureState, QuasiStatic, SimulationTrace};
use crate::mesh::{
    generate_slit_disk, generate_structured_strip, generate_unstructured, read_gmsh_ascii, read_mesh_dump, Mesh, Point,
};
use crate::system::{DirichletCondition, Discretization, LoadSpec, NeumannCondition, Stabilization};

pub use builtin::{builtin, builtin_names, builtin_scenarios};
pub use config::{
    AnalysisSpec, BoundaryKind, BoundarySpec, CrackSpec, LoadingSpec, MaterialSpec, MeshKind, MeshSpec, Overrides,
    Scenario, ValidationError, ValueSpec,
};
pub use output::{format_vtk, write_vtk_snapshot};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("invalid configuration: {0}")]
    Validation(#[from] ValidationError),
    #[error("{0}")]
    Runtime(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunnerError {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Validation(_) => 2,
            RunnerError::Runtime(_) | RunnerError::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RunnerError::Io { path: path.to_path_buf(), source }
    }
}

/// A built-in name or a path to a TOML file.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario, RunnerError> {
    if let Some(s) = builtin(name_or_path) {
        return Ok(s);
    }
    let path = Path::new(name_or_path);
    let text = std::fs::read_to_string(path).map_err(|e| {
        ValidationError::new("<config>", format!("`{name_or_path}` is neither a built-in scenario nor a readable file: {e}"))
    })?;
    Ok(Scenario::from_toml(&text)?)
}

/// Builds the mesh, including the retagging rules, without Dirichlet
/// marking or cracks.
pub fn build_mesh(s: &Scenario) -> Result<Mesh, RunnerError> {
    let m = &s.mesh;
    let invalid = |path: &str, e: crate::mesh::MeshError| RunnerError::Validation(ValidationError::new(path, e.to_string()));
    let mut mesh = match m.kind {
        config::MeshKind::Strip => generate_structured_strip(
            m.length.unwrap_or_default(),
            m.height.unwrap_or_default(),
            m.h.unwrap_or_default(),
            m.pattern,
        )
        .map_err(|e| invalid("mesh.h", e))?,
        config::MeshKind::SlitDisk => {
            generate_slit_disk(m.radius.unwrap_or_default(), m.rings.unwrap_or_default()).map_err(|e| invalid("mesh.rings", e))?
        }
        config::MeshKind::Unstructured => {
            let mut domain = m.domain.clone().ok_or_else(|| ValidationError::new("mesh.domain", "missing"))?;
            if s.initial_crack.len() >= 2 && !domain.constraints.contains(&s.initial_crack) {
                domain.constraints.push(s.initial_crack.clone());
            }
            generate_unstructured(&domain, m.h.unwrap_or_default(), m.seed).map_err(|e| invalid("mesh.domain", e))?
        }
        config::MeshKind::Gmsh => {
            read_gmsh_ascii(m.path.as_deref().unwrap_or(Path::new(""))).map_err(|e| RunnerError::Runtime(e.to_string()))?
        }
        config::MeshKind::Dump => {
            read_mesh_dump(m.path.as_deref().unwrap_or(Path::new(""))).map_err(|e| RunnerError::Runtime(e.to_string()))?
        }
    };
    for (i, rule) in m.retag.iter().enumerate() {
        let from = mesh
            .tag_id(&rule.from)
            .ok_or_else(|| ValidationError::new(format!("mesh.retag[{i}].from"), format!("unknown tag `{}`", rule.from)))?;
        let hits: Vec<usize> = (0..mesh.num_facets())
            .filter(|&f| {
                let facet = mesh.facet(f);
                let x = facet.barycenter;
                facet.is_exterior()
                    && facet.tag == Some(from)
                    && (rule.min[0]..=rule.max[0]).contains(&x.x)
                    && (rule.min[1]..=rule.max[1]).contains(&x.y)
            })
            .collect();
        if hits.is_empty() {
            return Err(ValidationError::new(format!("mesh.retag[{i}]"), "no facet in the box").into());
        }
        for f in hits {
            mesh.set_facet_tag(f, &rule.to);
        }
    }
    Ok(mesh)
}

/// Boundary conditions as a [`LoadSpec`], with tags checked against `mesh`.
pub fn load_spec(s: &Scenario, mesh: &Mesh) -> Result<LoadSpec, ValidationError> {
    let mut loads = LoadSpec::default();
    for (i, b) in s.boundary.iter().enumerate() {
        if mesh.tag_id(&b.tag).is_none() {
            return Err(ValidationError::new(format!("boundary[{i}].tag"), format!("no boundary facet carries `{}`", b.tag)));
        }
        if s.boundary[..i].iter().any(|o| o.tag == b.tag) {
            return Err(ValidationError::new(format!("boundary[{i}].tag"), format!("`{}` has two conditions", b.tag)));
        }
        match b.kind {
            BoundaryKind::Dirichlet => {
                loads.dirichlet.push(DirichletCondition { tag: b.tag.clone(), mask: b.mask(), value: b.value.to_field() })
            }
            BoundaryKind::Neumann => loads.neumann.push(NeumannCondition { tag: b.tag.clone(), traction: b.value.to_field() }),
        }
    }
    Ok(loads)
}

/// Everything needed to start a run.
pub struct Prepared {
    pub disc: Discretization,
    pub state: FractureState,
    pub loads: LoadSpec,
}

pub fn prepare(s: &Scenario, exec: Execution) -> Result<Prepared, RunnerError> {
    s.validate()?;
    let material = s.material()?;
    let mut mesh = build_mesh(s)?;
    let loads = load_spec(s, &mesh)?;
    loads.apply_dirichlet(&mut mesh).map_err(|e| RunnerError::Runtime(e.to_string()))?;
    let polyline: Vec<Point> = s.initial_crack.iter().map(|p| Point::new(p[0], p[1])).collect();
    let state = if polyline.is_empty() {
        FractureState::new(&mesh, s.crack.seed)
    } else {
        let st = FractureState::with_initial_crack(&mut mesh, &polyline, s.crack.seed)
            .map_err(|e| ValidationError::new("initial_crack", e.to_string()))?;
        if st.crack_facets.is_empty() {
            return Err(ValidationError::new("initial_crack", "no interior mesh facet lies on the polyline").into());
        }
        st
    };
    let disc = Discretization::new(mesh, material, Stabilization { beta: s.stabilization }, exec)
        .map_err(|e| RunnerError::Runtime(e.to_string()))?;
    Ok(Prepared { disc, state, loads })
}

pub fn crack_params(s: &Scenario) -> CrackParams {
    CrackParams {
        window: s.crack.window,
        candidate_filter: s.crack.path_filter.as_ref().map(|f| horizontal_line_filter(f.y, f.tol)),
        rng_seed: s.crack.seed,
    }
}

/// Result of a quasi-static run.
pub struct RunReport {
    pub trace: SimulationTrace,
    pub initial_crack_length: f64,
    /// Least-squares crack speed, when the crack grew over two steps.
    pub crack_speed: Option<f64>,
    pub final_mesh: Mesh,
    pub elapsed_seconds: f64,
}

/// Runs the quasi-static loading of `s` and writes the artifacts if an
/// output directory is set. Failures after the first step are reported in
/// `trace.error`, with the completed steps flushed to disk.
pub fn run_scenario(s: &Scenario, exec: Execution) -> Result<RunReport, RunnerError> {
    if !matches!(s.analysis, AnalysisSpec::QuasiStatic) {
        return Err(ValidationError::new("analysis.kind", "expected quasi-static").into());
    }
    let start = Instant::now();
    let Prepared { mut disc, mut state, loads } = prepare(s, exec)?;
    let (increment, steps) = s.schedule()?;
    let problem = QuasiStatic {
        loads,
        increment,
        steps,
        params: crack_params(s),
        reaction_tag: s.reaction.as_ref().map(|r| r.tag.clone()),
    };
    let initial_crack_length = disc.mesh.crack_length();
    info!("{}: {} dofs, {} steps of {:e}", s.name, disc.num_dofs(), steps, increment);

    let out = s.output.dir.clone();
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir).map_err(|e| RunnerError::io(dir, e))?;
    }
    let write_error: RefCell<Option<RunnerError>> = RefCell::new(None);
    let every = s.output.snapshot_every;
    let trace = crate::fracture::run_quasi_static_with(&mut disc, &mut state, &problem, |view| {
        let Some(dir) = &out else { return };
        let k = view.record.step;
        if every > 0 && k % every == 0 && write_error.borrow().is_none() {
            let path = dir.join(format!("snapshot_{k:05}.vtk"));
            if let Err(e) = write_vtk_snapshot(&view.disc.mesh, view.dofs, view.disc.components(), &view.fields.stresses, &path) {
                *write_error.borrow_mut() = Some(e);
            }
        }
    });
    if let Some(e) = write_error.into_inner() {
        return Err(e);
    }
    let crack_speed = crack_speed_fit(&crack_length_curve(&trace), initial_crack_length).ok();
    let report = RunReport {
        trace,
        initial_crack_length,
        crack_speed,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        final_mesh: disc.mesh.clone(),
    };
    if let Some(dir) = &out {
        output::write_run_artifacts(s, &disc, &report, dir)?;
    }
    Ok(report)
}

/// Static solves of a convergence scenario at its first `levels` levels
/// (all when `None`).
pub fn run_convergence(s: &Scenario, levels: Option<usize>, exec: Execution) -> Result<Vec<ErrorReport>, RunnerError> {
    s.validate()?;
    let AnalysisSpec::Convergence { levels: all, tau, a, mu } = &s.analysis else {
        return Err(ValidationError::new("analysis.kind", "expected convergence").into());
    };
    let n = levels.unwrap_or(all.len()).min(all.len());
    if n < 2 {
        return Err(ValidationError::new("analysis.levels", "need at least two levels").into());
    }
    let mut reports = Vec::with_capacity(n);
    for &level in &all[..n] {
        let mut level_scenario = s.clone();
        match s.mesh.kind {
            config::MeshKind::SlitDisk => level_scenario.mesh.rings = Some(level.round() as usize),
            _ => level_scenario.mesh.h = Some(level),
        }
        level_scenario.analysis = AnalysisSpec::QuasiStatic;
        let Prepared { mut disc, loads, .. } = prepare_static(&level_scenario, exec)?;
        let (sys, g) = disc.system(&loads, 0.0).map_err(|e| RunnerError::Runtime(e.to_string()))?;
        let u = disc.solve(&sys.rhs).map_err(|e| RunnerError::Runtime(e.to_string()))?;
        let (tau, a, mu) = (*tau, *a, *mu);
        let report = l2_errors(&disc, &u, &g, move |x| antiplane_reference_at(x, tau, a, mu));
        info!("level {level}: {} dofs, L2 {:.3e}, energy {:.3e}", report.n_dofs, report.l2_error, report.energy_error);
        reports.push(report);
    }
    if let Some(dir) = &s.output.dir {
        std::fs::create_dir_all(dir).map_err(|e| RunnerError::io(dir, e))?;
        let path = dir.join("convergence.csv");
        std::fs::write(&path, output::format_convergence_csv(&reports)).map_err(|e| RunnerError::io(&path, e))?;
        output::write_manifest(s, dir, &[("levels", n.to_string())])?;
    }
    Ok(reports)
}

fn prepare_static(s: &Scenario, exec: Execution) -> Result<Prepared, RunnerError> {
    let mut s = s.clone();
    // static solves need no load schedule
    if s.loading.increment.is_none() {
        s.loading = LoadingSpec { increment: Some(1.0), final_load: Some(1.0) };
    }
    prepare(&s, exec)
}

/// Table rows `(n_dofs, l2, l2 rate, energy, energy rate)`.
pub fn convergence_table(reports: &[ErrorReport]) -> Vec<(usize, f64, Option<f64>, f64, Option<f64>)> {
    let rates = convergence_rates(reports);
    reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let rate = i.checked_sub(1).map(|j| rates[j]);
            (r.n_dofs, r.l2_error, rate.map(|x| x.0), r.energy_error, rate.map(|x| x.1))
        })
        .collect()
}
