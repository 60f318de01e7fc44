//! The five reference experiments.

use crate::material::Mode;
use crate::mesh::{Circle, PlanarDomain, StripPattern};

use super::config::*;

pub fn builtin_names() -> [&'static str; 5] {
    ["antiplane-convergence", "crack-speed", "opening-mode", "notched-shear", "notched-plate-hole"]
}

pub fn builtin(name: &str) -> Option<Scenario> {
    Some(match name {
        "antiplane-convergence" => antiplane_convergence(),
        "crack-speed" => crack_speed(),
        "opening-mode" => opening_mode(),
        "notched-shear" => notched_shear(),
        "notched-plate-hole" => notched_plate_hole(),
        _ => return None,
    })
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    builtin_names().iter().filter_map(|n| builtin(n)).collect()
}

fn dirichlet(tag: &str, value: ValueSpec) -> BoundarySpec {
    BoundarySpec { tag: tag.into(), kind: BoundaryKind::Dirichlet, value, components: None }
}

fn ramp(x: f64, y: f64) -> ValueSpec {
    ValueSpec::Ramp { direction: [x, y] }
}

fn fixed() -> ValueSpec {
    ValueSpec::Constant { value: [0.0, 0.0] }
}

fn retag(from: &str, to: &str, min: [f64; 2], max: [f64; 2]) -> RetagSpec {
    RetagSpec { from: from.into(), to: to.into(), min, max }
}

fn base(name: &str, notes: &str, mesh: MeshSpec, material: MaterialSpec) -> Scenario {
    Scenario {
        name: name.into(),
        notes: notes.into(),
        mesh,
        material,
        boundary: Vec::new(),
        initial_crack: Vec::new(),
        loading: LoadingSpec::default(),
        crack: CrackSpec::default(),
        stabilization: 2.0,
        reaction: None,
        output: OutputSpec::default(),
        analysis: AnalysisSpec::QuasiStatic,
    }
}

fn plane_strain(young: f64, poisson: f64, toughness: f64) -> MaterialSpec {
    MaterialSpec { mode: Mode::PlaneStrain, young: Some(young), poisson: Some(poisson), shear: None, toughness: Some(toughness) }
}

/// Slit disk around a mode III crack tip, reference field on the whole
/// boundary including both lips. Ring counts 9..144 give 486..124416 dofs.
fn antiplane_convergence() -> Scenario {
    let (tau, a, mu) = (ANTIPLANE_TAU, ANTIPLANE_A, ANTIPLANE_MU);
    let reference = |branch| ValueSpec::AntiplaneReference { tau, a, mu, branch };
    let mut mesh = MeshSpec::of_kind(MeshKind::SlitDisk);
    mesh.radius = Some(ANTIPLANE_RADIUS);
    mesh.rings = Some(9);
    let material = MaterialSpec { mode: Mode::Antiplane, shear: Some(mu), toughness: Some(f64::INFINITY), ..Default::default() };
    let mut s = base(
        "antiplane-convergence",
        "Nondimensional. Reference u = 2 tau/mu sqrt(a r / 2) sin(theta/2) imposed on the outer circle and on both lips.",
        mesh,
        material,
    );
    s.boundary = vec![
        dirichlet("outer", reference(Branch::Upper)),
        dirichlet("lip_upper", reference(Branch::Upper)),
        dirichlet("lip_lower", reference(Branch::Lower)),
    ];
    s.analysis = AnalysisSpec::Convergence { levels: vec![9.0, 18.0, 36.0, 72.0, 144.0], tau, a, mu };
    s
}

/// Ball radius and far-field stress, calibrated on the error magnitudes of
/// the first three levels.
pub const ANTIPLANE_RADIUS: f64 = 0.012;
pub const ANTIPLANE_TAU: f64 = 2.4;
pub const ANTIPLANE_A: f64 = 1.0;
pub const ANTIPLANE_MU: f64 = 1.0;

/// Pre-cracked strip in antiplane shear, crack restricted to `y = H/2`.
fn crack_speed() -> Scenario {
    let (l, h_strip, mu, gc) = (5.0, 1.0, 0.2, 0.01);
    let mut mesh = MeshSpec::of_kind(MeshKind::Strip);
    mesh.length = Some(l);
    mesh.height = Some(h_strip);
    mesh.h = Some(0.1);
    mesh.pattern = StripPattern::Crossed;
    mesh.retag = vec![
        retag("left", "left_upper", [-1.0, h_strip / 2.0], [1.0, h_strip + 1.0]),
        retag("left", "left_lower", [-1.0, -1.0], [1.0, h_strip / 2.0]),
    ];
    let material = MaterialSpec { mode: Mode::Antiplane, shear: Some(mu), toughness: Some(gc), ..Default::default() };
    let mut s = base(
        "crack-speed",
        "L = 5 m, H = 1 m, l0 = 1 m, mu = 0.2 Pa, G_c = 0.01 kN/mm; u = +-u_D on the left lips, 0 on the right.",
        mesh,
        material,
    );
    s.boundary = vec![
        dirichlet("left_upper", ramp(1.0, 0.0)),
        dirichlet("left_lower", ramp(-1.0, 0.0)),
        dirichlet("right", fixed()),
    ];
    s.initial_crack = vec![[0.0, h_strip / 2.0], [1.0, h_strip / 2.0]];
    s.loading = LoadingSpec { increment: Some(0.01), final_load: Some(1.0) };
    s.crack.path_filter = Some(LineFilterSpec { y: h_strip / 2.0, tol: 1e-9 });
    s.reaction = Some(ReactionSpec { tag: "left_upper".into(), direction: [1.0, 0.0] });
    s.output.crack_speed_reference = Some((mu * h_strip / gc).sqrt());
    s
}

/// Mode I strip, `u·n = u_D` on top and bottom.
fn opening_mode() -> Scenario {
    let (l, h_strip) = (32.0, 16.0);
    let mut mesh = MeshSpec::of_kind(MeshKind::Strip);
    mesh.length = Some(l);
    mesh.height = Some(h_strip);
    mesh.h = Some(0.4);
    mesh.pattern = StripPattern::Crossed;
    mesh.retag = vec![retag("right", "pin", [l - 1.0, h_strip / 2.0 - 2.0], [l + 1.0, h_strip / 2.0 + 2.0])];
    let mut s = base(
        "opening-mode",
        "mm; E = 3.09 GPa, nu = 0.35, G_c = 300 kN/mm kept as given although the toughness unit looks inconsistent with E. \
         A short stretch of the right side has u_x = 0 to remove the rigid translation.",
        mesh,
        plane_strain(3.09, 0.35, 300.0),
    );
    let normal = |dir: f64| BoundarySpec { components: Some([false, true]), ..dirichlet("", ramp(0.0, dir)) };
    s.boundary = vec![
        BoundarySpec { tag: "top".into(), ..normal(1.0) },
        BoundarySpec { tag: "bottom".into(), ..normal(-1.0) },
        BoundarySpec { tag: "pin".into(), components: Some([true, false]), ..dirichlet("", fixed()) },
    ];
    s.initial_crack = vec![[0.0, h_strip / 2.0], [4.0, h_strip / 2.0]];
    s.loading = LoadingSpec { increment: Some(0.4), final_load: Some(OPENING_FINAL_LOAD) };
    s.reaction = Some(ReactionSpec { tag: "top".into(), direction: [0.0, 1.0] });
    s
}

pub const OPENING_FINAL_LOAD: f64 = 100.0;

/// Square with a horizontal notch to mid-width, bottom clamped, top
/// sheared.
fn notched_shear() -> Scenario {
    let mut mesh = MeshSpec::of_kind(MeshKind::Unstructured);
    mesh.domain = Some(PlanarDomain::rectangle(1.0, 1.0));
    mesh.h = Some(2.8e-2);
    mesh.seed = 1;
    let mut s = base(
        "notched-shear",
        "mm, kN; H = 1 mm, l0 = 0.5 mm, E = 210 GPa, nu = 0.3, G_c = 2.7e-3 kN/mm, du = 1e-6 mm up to 0.2 mm.",
        mesh,
        plane_strain(210.0, 0.3, 2.7e-3),
    );
    s.boundary = vec![dirichlet("bottom", fixed()), dirichlet("top", ramp(1.0, 0.0))];
    s.initial_crack = vec![[0.0, 0.5], [0.5, 0.5]];
    s.loading = LoadingSpec { increment: Some(1e-6), final_load: Some(0.2) };
    s.reaction = Some(ReactionSpec { tag: "top".into(), direction: [1.0, 0.0] });
    s
}

/// 65 x 120 plate with two pin holes on the left, a larger free hole on
/// the right and an edge notch between the pins.
fn notched_plate_hole() -> Scenario {
    let (l, h_plate) = (65.0, 120.0);
    let (a, b, d, e) = (20.0, 55.0, 69.0, 36.5);
    let mut mesh = MeshSpec::of_kind(MeshKind::Unstructured);
    mesh.domain = Some(PlanarDomain {
        min: [0.0, 0.0],
        max: [l, h_plate],
        holes: vec![
            Circle { center: [a, h_plate - a], radius: 5.0, tag: "hole_upper".into() },
            Circle { center: [a, a], radius: 5.0, tag: "hole_lower".into() },
            Circle { center: [e, h_plate - d], radius: 10.0, tag: "hole_right".into() },
        ],
        constraints: Vec::new(),
    });
    mesh.h = Some(2.8);
    mesh.seed = 1;
    let mut s = base(
        "notched-plate-hole",
        "mm, kN; E = 6 GPa, nu = 0.22, G_c = 2.28e-3 kN/mm, a = 20, b = 55, d = 69, e = 36.5 mm, l0 = 10 mm, du = 1e-2 mm.",
        mesh,
        plane_strain(6.0, 0.22, 2.28e-3),
    );
    s.boundary = vec![dirichlet("hole_upper", ramp(0.0, 1.0)), dirichlet("hole_lower", fixed())];
    s.initial_crack = vec![[0.0, h_plate - b], [10.0, h_plate - b]];
    s.loading = LoadingSpec { increment: Some(1e-2), final_load: Some(3.0) };
    s.reaction = Some(ReactionSpec { tag: "hole_upper".into(), direction: [0.0, 1.0] });
    s
}
