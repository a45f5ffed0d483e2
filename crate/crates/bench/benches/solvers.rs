use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dec_green::dbar::{build_system, PlanarDomain};
use dec_green::dec::{hodge_laplacian, BoundaryCondition, FlatBundle};
use dec_green::green::{green_columns, select_sources};
use dec_green::rng::SeededRng;
use dec_green::distance_field;
use dec_green_bench::{cube, dirichlet, disk};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble");
    for res in [16, 32] {
        let m = disk(res);
        let b = FlatBundle::trivial(&m, 1);
        g.bench_with_input(BenchmarkId::new("disk_p1", res), &m, |bench, m| {
            bench.iter(|| hodge_laplacian(m, 1, &b, BoundaryCondition::Dirichlet).unwrap())
        });
    }
    let m = cube(6);
    let b = FlatBundle::trivial(&m, 1);
    g.bench_function("box_p1_r6", |bench| {
        bench.iter(|| hodge_laplacian(&m, 1, &b, BoundaryCondition::Dirichlet).unwrap())
    });
    g.finish();
}

fn factor_and_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    for p in [0, 1] {
        let m = disk(32);
        g.bench_with_input(BenchmarkId::new("disk32_factor", p), &p, |bench, &p| {
            bench.iter(|| dirichlet(&m, p).unwrap())
        });
        let solver = dirichlet(&m, p).unwrap();
        let rhs = SeededRng::new(1).normal_vec(solver.laplacian().n_free());
        g.bench_with_input(BenchmarkId::new("disk32_solve", p), &p, |bench, _| {
            bench.iter(|| solver.solve_weak(&rhs).unwrap())
        });
    }
    let m = cube(8);
    let solver = dirichlet(&m, 0).unwrap();
    let bd = distance_field(&m, &m.boundary_vertices()).unwrap();
    let src = select_sources(&m, solver.laplacian(), &bd, 16, 2.0 * m.mesh_width());
    g.bench_function("box8_green_columns", |bench| {
        bench.iter(|| green_columns(&solver, &src, false).unwrap())
    });
    g.finish();
}

fn dbar(c: &mut Criterion) {
    let mut g = c.benchmark_group("dbar");
    g.sample_size(10);
    g.bench_function("build_h1_48", |bench| {
        bench.iter(|| build_system(PlanarDomain::disk(1.0 / 48.0, 1.0).unwrap()).unwrap())
    });
    let sys = build_system(PlanarDomain::disk(1.0 / 48.0, 1.0).unwrap()).unwrap();
    let f = sys.band_limited_ensemble(1, 3, 0).remove(0);
    g.bench_function("minimal_solution_h1_48", |bench| bench.iter(|| sys.minimal_solution(&f).unwrap()));
    g.finish();
}

criterion_group!(benches, assembly, factor_and_solve, dbar);
criterion_main!(benches);
