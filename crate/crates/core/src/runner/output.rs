//! CSV, legacy VTK and manifest writers. Floats are printed with 17
//! significant digits so that reruns compare bitwise.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::Matrix2;
use sha2::{Digest, Sha256};

use super::{convergence_table, RunReport, RunnerError, Scenario};
use crate::analysis::ErrorReport;
use crate::mesh::{FacetStatus, Mesh};
use crate::system::Discretization;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write(path: &Path, text: &str) -> Result<(), RunnerError> {
    std::fs::write(path, text).map_err(|e| RunnerError::io(path, e))
}

/// Legacy ASCII VTK: triangles, then the cracked facets as line cells.
/// Displacement and stress are cell data; line cells carry zeros and
/// `crack = 1`.
pub fn format_vtk(mesh: &Mesh, dofs: &[f64], components: usize, stresses: &[Matrix2<f64>]) -> String {
    assert_eq!(dofs.len(), components * mesh.num_cells(), "dof vector size");
    assert_eq!(stresses.len(), mesh.num_cells(), "stress vector size");
    let cracks: Vec<[usize; 2]> =
        mesh.facets().iter().filter(|f| f.status == FacetStatus::Cracked).map(|f| f.vertices).collect();
    let (nc, nl) = (mesh.num_cells(), cracks.len());
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nvdem snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", mesh.num_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{} {} 0", num(p.x), num(p.y)).unwrap();
    }
    writeln!(s, "CELLS {} {}", nc + nl, 4 * nc + 3 * nl).unwrap();
    for c in mesh.cells() {
        writeln!(s, "3 {} {} {}", c[0], c[1], c[2]).unwrap();
    }
    for l in &cracks {
        writeln!(s, "2 {} {}", l[0], l[1]).unwrap();
    }
    writeln!(s, "CELL_TYPES {}", nc + nl).unwrap();
    for _ in 0..nc {
        s.push_str("5\n");
    }
    for _ in 0..nl {
        s.push_str("3\n");
    }
    writeln!(s, "CELL_DATA {}", nc + nl).unwrap();
    s.push_str("SCALARS crack int 1\nLOOKUP_TABLE default\n");
    for i in 0..nc + nl {
        s.push_str(if i < nc { "0\n" } else { "1\n" });
    }
    s.push_str("VECTORS displacement double\n");
    for c in 0..nc {
        let u: Vec<f64> = (0..2).map(|k| if k < components { dofs[c * components + k] } else { 0.0 }).collect();
        writeln!(s, "{} {} 0", num(u[0]), num(u[1])).unwrap();
    }
    for _ in 0..nl {
        s.push_str("0 0 0\n");
    }
    let names: &[(&str, usize, usize)] = if components == 1 {
        &[("stress_xz", 0, 0), ("stress_yz", 0, 1)]
    } else {
        &[("stress_xx", 0, 0), ("stress_xy", 0, 1), ("stress_yy", 1, 1)]
    };
    for &(name, i, j) in names {
        writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for st in stresses {
            writeln!(s, "{}", num(st[(i, j)])).unwrap();
        }
        for _ in 0..nl {
            s.push_str("0\n");
        }
    }
    s
}

pub fn write_vtk_snapshot(
    mesh: &Mesh,
    dofs: &[f64],
    components: usize,
    stresses: &[Matrix2<f64>],
    path: &Path,
) -> Result<(), RunnerError> {
    write(path, &format_vtk(mesh, dofs, components, stresses))
}

pub fn format_steps_csv(report: &RunReport) -> String {
    let mut s = String::from("step,load,inner_iterations,broken,crack_length,reaction_x,reaction_y,max_release\n");
    for r in &report.trace.steps {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.step,
            num(r.load),
            r.inner_iterations,
            r.broken.len(),
            num(r.crack_length),
            opt(r.reaction.map(|v| v.x)),
            opt(r.reaction.map(|v| v.y)),
            num(r.max_release),
        )
        .unwrap();
    }
    s
}

pub fn format_crack_path(mesh: &Mesh, vertices: &[usize]) -> String {
    let mut s = String::from("index,vertex,x,y\n");
    for (i, &v) in vertices.iter().enumerate() {
        let p = mesh.vertices()[v];
        writeln!(s, "{i},{v},{},{}", num(p.x), num(p.y)).unwrap();
    }
    s
}

pub fn format_convergence_csv(reports: &[ErrorReport]) -> String {
    let mut s = String::from("n_dofs,l2_error,l2_rate,energy_error,energy_rate\n");
    for (n, l2, r1, en, r2) in convergence_table(reports) {
        writeln!(s, "{n},{},{},{},{}", num(l2), opt(r1), num(en), opt(r2)).unwrap();
    }
    s
}

pub fn config_hash(s: &Scenario) -> String {
    let digest = Sha256::digest(s.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// `manifest.json` with the config hash, seed and versions; the wall-clock
/// fields are the only ones that change between identical runs.
pub fn write_manifest(s: &Scenario, dir: &Path, extra: &[(&str, String)]) -> Result<(), RunnerError> {
    let mut m = serde_json::Map::new();
    m.insert("scenario".into(), s.name.clone().into());
    m.insert("config_sha256".into(), config_hash(s).into());
    m.insert("seed".into(), s.crack.seed.into());
    m.insert("vdem_version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("parallel_feature".into(), cfg!(feature = "parallel").into());
    for (k, v) in extra {
        m.insert((*k).into(), v.clone().into());
    }
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    m.insert("timestamp_unix".into(), now.into());
    let path = dir.join("manifest.json");
    write(&path, &serde_json::to_string_pretty(&serde_json::Value::Object(m)).expect("json"))?;
    let cfg = dir.join("scenario.toml");
    write(&cfg, &s.to_toml())
}

pub(crate) fn write_run_artifacts(s: &Scenario, disc: &Discretization, report: &RunReport, dir: &Path) -> Result<(), RunnerError> {
    let trace = &report.trace;
    write(&dir.join("steps.csv"), &format_steps_csv(report))?;
    write(&dir.join("crack_path.csv"), &format_crack_path(&disc.mesh, &trace.crack_vertices))?;
    if let Some(reference) = s.output.crack_speed_reference {
        let mut text = String::from("speed,reference,relative_error\n");
        if let Some(v) = report.crack_speed {
            writeln!(text, "{},{},{}", num(v), num(reference), num((v - reference).abs() / reference)).unwrap();
        }
        write(&dir.join("crack_speed.csv"), &text)?;
    }
    if !trace.dofs.is_empty() {
        let fields = crate::fracture::cell_fields(disc, &trace.dofs, &trace.dirichlet);
        write_vtk_snapshot(&disc.mesh, &trace.dofs, disc.components(), &fields.stresses, &dir.join("final.vtk"))?;
    }
    let extra = [
        ("dofs", disc.num_dofs().to_string()),
        ("steps", trace.steps.len().to_string()),
        ("reached_boundary", trace.reached_boundary.to_string()),
        ("error", trace.error.clone().unwrap_or_default()),
        ("elapsed_seconds", format!("{:.3}", report.elapsed_seconds)),
    ];
    write_manifest(s, dir, &extra)
}
