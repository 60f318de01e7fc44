use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::Vector2;
use vdem::exec::Execution;
use vdem::material::{Material, Mode};
use vdem::mesh::{generate_structured_strip, ComponentMask, Mesh, Point, StripPattern};
use vdem::reconstruction::ReconstructionPlan;
use vdem::system::{field, DirichletCondition, Discretization, LoadSpec, Stabilization};

fn mesh() -> Mesh {
    let mut mesh = generate_structured_strip(4.0, 2.0, 0.1, StripPattern::Crossed).unwrap();
    let loads = LoadSpec {
        dirichlet: vec![DirichletCondition {
            tag: "left".into(),
            mask: ComponentMask([true, true]),
            value: field(|_: &Point, _| Vector2::zeros()),
        }],
        ..Default::default()
    };
    loads.apply_dirichlet(&mut mesh).unwrap();
    mesh
}

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if cfg!(feature = "parallel") {
        m.push(("parallel", Execution::Parallel));
    }
    m
}

fn bench(c: &mut Criterion) {
    let mesh = mesh();
    let material = Material::from_young_poisson(1.0, 0.3, 1.0, Mode::PlaneStrain).unwrap();
    let mut group = c.benchmark_group("assembly");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new("reconstruction", name), &exec, |b, &exec| {
            b.iter(|| black_box(ReconstructionPlan::build(&mesh, 2, exec).unwrap()))
        });
        let disc = Discretization::new(mesh.clone(), material.clone(), Stabilization::default(), exec).unwrap();
        group.bench_with_input(BenchmarkId::new("stiffness", name), &exec, |b, _| b.iter(|| black_box(disc.assemble_full())));
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
