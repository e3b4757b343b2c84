use criterion::{black_box, criterion_group, criterion_main, Criterion};

use qbgk_bench::relaxation_pair;
use qbgk_core::equilibrium::{assemble_targets_inter, solve_inter, solve_intra};
use qbgk_core::grid::compute_moments;
use qbgk_core::relaxation::implicit_update;
use qbgk_core::transport::{transport_operator, BoundaryMode, FluxOrder, SpatialMesh};
use qbgk_core::{DistributionField, NewtonOptions, ParticleStatistics};

fn moments(c: &mut Criterion) {
    let (set, f) = relaxation_pair((ParticleStatistics::Fermion, ParticleStatistics::Fermion), 32);
    let sp = &set.species[0];
    c.bench_function("compute_moments 33^3", |b| {
        b.iter(|| compute_moments(black_box(f[0].cell(0)), &sp.grid, sp.mass))
    });
}

fn solves(c: &mut Criterion) {
    let opts = NewtonOptions::default();
    for stats in [ParticleStatistics::Classical, ParticleStatistics::Fermion, ParticleStatistics::Boson] {
        let (set, f) = relaxation_pair((stats, stats), 32);
        let (a, b) = (&set.species[0], &set.species[1]);
        let mu = compute_moments(f[0].cell(0), &a.grid, a.mass).as_array();
        c.bench_function(&format!("solve_intra {} 33^3", stats.name()), |bch| {
            bch.iter(|| solve_intra(black_box(&mu), &a.grid, a.mass, stats, 1.0, None, &opts).unwrap())
        });
        let mu6 = assemble_targets_inter(f[0].cell(0), f[1].cell(0), &a.grid, &b.grid, a.mass, b.mass, 1.0, 1.0);
        c.bench_function(&format!("solve_inter {} 33^3", stats.name()), |bch| {
            bch.iter(|| {
                solve_inter(
                    black_box(&mu6),
                    (&a.grid, &b.grid),
                    (a.mass, b.mass),
                    (stats, stats),
                    (1.0, 1.0),
                    None,
                    &opts,
                )
                .unwrap()
            })
        });
    }
}

fn relaxation_step(c: &mut Criterion) {
    let (set, f) = relaxation_pair((ParticleStatistics::Fermion, ParticleStatistics::Boson), 32);
    let opts = NewtonOptions::default();
    let first = implicit_update(&f, 0.01, &set, &[None], &opts).unwrap();
    let warm: Vec<_> = first.equilibria.into_iter().map(Some).collect();
    c.bench_function("implicit_update warm 2 species 33^3", |b| {
        b.iter(|| implicit_update(black_box(&f), 0.01, &set, &warm, &opts).unwrap())
    });
}

fn transport(c: &mut Criterion) {
    let (set, f) = relaxation_pair((ParticleStatistics::Fermion, ParticleStatistics::Fermion), 16);
    let sp = &set.species[0];
    let cells = 64;
    let field = DistributionField::from_cells(vec![f[0].cell(0).to_vec(); cells]);
    let mesh = SpatialMesh::new(0.0, 1.0, cells, BoundaryMode::Periodic).unwrap();
    c.bench_function("transport_operator 64 cells 17^3 minmod", |b| {
        b.iter(|| transport_operator(black_box(&field), &mesh, &sp.grid, sp.mass, FluxOrder::Second))
    });
}

criterion_group!(benches, moments, solves, relaxation_step, transport);
criterion_main!(benches);
