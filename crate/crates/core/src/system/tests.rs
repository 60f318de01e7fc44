use nalgebra::Matrix2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::material::Mode;
use crate::mesh::{generate_structured_strip, generate_unstructured, PlanarDomain, StripPattern};

fn affine(x: &Point) -> Vector2<f64> {
    Vector2::new(0.1 + 0.02 * x.x - 0.03 * x.y, -0.05 + 0.01 * x.x + 0.04 * x.y)
}

fn steel() -> Material {
    Material::from_young_poisson(210.0, 0.3, 2.7e-3, Mode::PlaneStrain).unwrap()
}

fn clamped(mesh: &Mesh, tags: &[&str], value: Field) -> LoadSpec {
    let _ = mesh;
    LoadSpec {
        dirichlet: tags
            .iter()
            .map(|t| DirichletCondition { tag: t.to_string(), mask: ComponentMask::ALL, value: value.clone() })
            .collect(),
        ..Default::default()
    }
}

fn discretize(mut mesh: Mesh, loads: &LoadSpec, material: Material, exec: Execution) -> Discretization {
    loads.apply_dirichlet(&mut mesh).unwrap();
    Discretization::new(mesh, material, Stabilization::default(), exec).unwrap()
}

fn affine_dofs(mesh: &Mesh) -> Vec<f64> {
    (0..mesh.num_cells())
        .flat_map(|c| {
            let v = affine(&mesh.barycenter(c));
            [v.x, v.y]
        })
        .collect()
}

#[test]
fn two_triangle_square_is_spd() {
    // two triangles cannot carry an affine-exact stencil
    let loads = clamped(&crate::mesh::tests::unit_square(), &["left"], field(|_, _| Vector2::zeros()));
    let mut two = crate::mesh::tests::unit_square();
    loads.apply_dirichlet(&mut two).unwrap();
    assert!(matches!(
        Discretization::new(two, steel(), Stabilization::default(), Execution::Sequential),
        Err(SystemError::Reconstruction(ReconstructionError::Degenerate { .. }))
    ));
    // one clamped facet leaves the rotation about its midpoint free
    let mesh = generate_structured_strip(1.0, 1.0, 1.0, StripPattern::Crossed).unwrap();
    let loads = clamped(&mesh, &["left", "bottom"], field(|_, _| Vector2::zeros()));
    let disc = discretize(mesh, &loads, steel(), Execution::Sequential);
    let a = &disc.stiffness.matrix;
    assert_eq!(a.nrows(), 8);
    assert!(a.asymmetry() <= 1e-10 * a.max_abs());
    assert!(Factorization::new(a).is_ok());
}

#[test]
fn affine_solution_is_reproduced() {
    for mesh in [
        generate_structured_strip(1.0, 1.0, 0.125, StripPattern::Crossed).unwrap(),
        generate_unstructured(&PlanarDomain::rectangle(1.0, 1.0), 0.15, 3).unwrap(),
    ] {
        let loads = clamped(&mesh, &["left", "right", "bottom", "top"], field(|x, _| affine(x)));
        let mut disc = discretize(mesh, &loads, steel(), Execution::Parallel);
        let (sys, g) = disc.system(&loads, 1.0).unwrap();
        let exact = affine_dofs(&disc.mesh);
        let r = residual(&sys.matrix, &exact, &sys.rhs, Execution::Sequential);
        let scale = sys.matrix.max_abs() * exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(r.iter().all(|x| x.abs() <= 1e-10 * scale), "affine residual");
        let (_, stab) = disc.energy_parts(&exact, &g);
        let (cons, _) = disc.energy_parts(&exact, &g);
        assert!(stab.abs() <= 1e-10 * cons);
        let u = disc.solve(&sys.rhs).unwrap();
        let err = u.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nrm = exact.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(err <= 1e-9 * nrm, "{err}");
    }
}

#[test]
fn traction_patch_test() {
    // uniform stress from the affine field, tractions on the free sides
    let mesh = generate_structured_strip(1.0, 1.0, 0.1, StripPattern::Crossed).unwrap();
    let mat = steel();
    let grad = Matrix2::new(0.02, -0.03, 0.01, 0.04);
    let (_, sigma) = mat.strain_stress(&grad);
    let mut loads = clamped(&mesh, &["left", "bottom"], field(|x, _| affine(x)));
    loads.neumann.push(NeumannCondition { tag: "right".into(), traction: field(move |_, _| sigma * Vector2::new(1.0, 0.0)) });
    loads.neumann.push(NeumannCondition { tag: "top".into(), traction: field(move |_, _| sigma * Vector2::new(0.0, 1.0)) });
    let mut disc = discretize(mesh, &loads, mat, Execution::Parallel);
    let (sys, _) = disc.system(&loads, 0.0).unwrap();
    let u = disc.solve(&sys.rhs).unwrap();
    let exact = affine_dofs(&disc.mesh);
    let err = u.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-9, "{err}");
}

#[test]
fn body_force_on_single_cell() {
    let mesh = generate_structured_strip(2.0, 2.0, 2.0, StripPattern::Crossed).unwrap();
    let plan = ReconstructionPlan::build(&mesh, 2, Execution::Sequential).unwrap();
    // only the cell containing (1, 0.2) is loaded; every cell has area 1
    let loads = LoadSpec {
        body_force: Some(field(|x, _| if x.y < 0.5 { Vector2::new(3.0, -1.0) } else { Vector2::zeros() })),
        ..Default::default()
    };
    let rhs = assemble_load(&mesh, &plan, &loads, 0.0).unwrap();
    let c = (0..4).find(|&c| mesh.barycenter(c).y < 0.5).unwrap();
    assert_eq!(mesh.area(c), 1.0);
    for (i, v) in rhs.iter().enumerate() {
        let expected = if i / 2 == c { [3.0, -1.0][i % 2] } else { 0.0 };
        assert_eq!(*v, expected);
    }
    assert!(assemble_load(&mesh, &plan, &LoadSpec::default(), 0.0).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn rhs_is_lifting_without_loads() {
    let mesh = generate_structured_strip(1.0, 1.0, 0.25, StripPattern::Diagonal).unwrap();
    let loads = clamped(&mesh, &["left"], field(|x, _| Vector2::new(x.y, 1.0)));
    let disc = discretize(mesh, &loads, steel(), Execution::Sequential);
    let (sys, g) = disc.system(&loads, 0.0).unwrap();
    let ag = disc.stiffness.lift.mul_vec(&g, Execution::Sequential);
    for (r, a) in sys.rhs.iter().zip(ag) {
        assert_eq!(*r, -a);
    }
}

#[test]
fn unknown_and_conflicting_tags() {
    let mesh = generate_structured_strip(1.0, 1.0, 0.5, StripPattern::Diagonal).unwrap();
    let zero = field(|_, _| Vector2::zeros());
    assert!(matches!(clamped(&mesh, &["nowhere"], zero.clone()).validate(&mesh), Err(SystemError::UnknownTag(_))));
    let mut l = clamped(&mesh, &["left"], zero.clone());
    l.neumann.push(NeumannCondition { tag: "left".into(), traction: zero });
    assert!(matches!(l.validate(&mesh), Err(SystemError::ConflictingTag(_))));
}

#[test]
fn coercivity_and_energy_identity() {
    let mesh = generate_unstructured(&PlanarDomain::rectangle(2.0, 1.0), 0.2, 9).unwrap();
    let loads = LoadSpec {
        body_force: Some(field(|x, _| Vector2::new(x.y, 1.0 - x.x))),
        ..clamped(&mesh, &["left"], field(|_, _| Vector2::zeros()))
    };
    let mut disc = discretize(mesh, &loads, steel(), Execution::Parallel);
    let a = disc.stiffness.matrix.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let v: Vec<f64> = (0..a.nrows()).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let av = a.mul_vec(&v, Execution::Sequential);
        assert!(v.iter().zip(&av).map(|(x, y)| x * y).sum::<f64>() > 0.0);
    }
    let (sys, g) = disc.system(&loads, 0.0).unwrap();
    let u = disc.solve(&sys.rhs).unwrap();
    assert!(relative_residual(&a, &u, &sys.rhs, Execution::Sequential) <= RESIDUAL_TOL);
    let (cons, stab) = disc.energy_parts(&u, &g);
    let l: f64 = u.iter().zip(&sys.rhs).map(|(x, y)| x * y).sum();
    assert!(((cons + stab) - l).abs() <= 1e-9 * l.abs());
}

#[test]
fn incremental_matches_full_assembly() {
    let mesh = generate_structured_strip(1.0, 1.0, 0.1, StripPattern::Diagonal).unwrap();
    let loads = clamped(&mesh, &["left"], field(|_, _| Vector2::zeros()));
    let mut disc = discretize(mesh, &loads, steel(), Execution::Parallel);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cracked = 0;
    let mut candidates: Vec<usize> = (0..disc.mesh.num_facets()).collect();
    candidates.shuffle(&mut rng);
    for f in candidates {
        if cracked == 20 {
            break;
        }
        let facet = disc.mesh.facet(f);
        let ok = facet.status == FacetStatus::Interior
            && [Some(facet.minus), facet.plus]
                .into_iter()
                .flatten()
                .all(|c| disc.mesh.cell_facets(c).iter().all(|&g| !disc.mesh.facet(g).is_cracked()));
        if !ok || disc.crack_facet(f).is_err() {
            continue;
        }
        cracked += 1;
        let full = disc.assemble_full();
        let scale = full.matrix.max_abs();
        let diff = disc.stiffness.matrix.max_abs_diff(&full.matrix);
        assert!(diff <= 1e-12 * scale, "{cracked}: {diff} vs {scale}");
        assert!(disc.stiffness.lift.max_abs_diff(&full.lift) <= 1e-12 * scale);
        assert!(disc.stiffness.data.max_abs_diff(&full.data) <= 1e-12 * scale);
    }
    assert_eq!(cracked, 20);
    assert!(disc.crack_facet(disc.mesh.facets().iter().position(|f| f.is_cracked()).unwrap()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn stiffness_symmetric_on_random_meshes(seed in 0u64..1000, beta in 0.5..8.0f64) {
        let mesh = generate_unstructured(&PlanarDomain::rectangle(1.0, 1.0), 0.25, seed).unwrap();
        let loads = clamped(&mesh, &["bottom"], field(|_, _| Vector2::zeros()));
        let mut m = mesh;
        loads.apply_dirichlet(&mut m).unwrap();
        let d = Discretization::new(m, steel(), Stabilization { beta }, Execution::Parallel).unwrap();
        let a = &d.stiffness.matrix;
        prop_assert!(a.asymmetry() <= 1e-10 * a.max_abs());
        prop_assert!(a.diagonal().iter().all(|&x| x > 0.0));
    }
}

