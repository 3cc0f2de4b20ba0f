use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hitchin_core::disksolver::{disk_residual, DiskField, DiskGrid};
use hitchin_core::gluing::{glued_residual, Annulus, GluedMetricSpec, ZeroType};
use hitchin_core::hermlin::psd_sqrt;
use hitchin_core::localmodel::{default_painleve, solve_local_model};
use hitchin_core::painleve::solve_painleve;
use hitchin_core::spectral::{fd_neumann_oracle, lambda1_of_t, WellSpec};
use hitchin_core::weights::{barycenter, polytope_vertices, SurfaceData, ZeroPartition};
use hitchin_core::{Complex64, HermMatrix2};

fn hermlin(c: &mut Criterion) {
    let h = HermMatrix2::new(2.5, Complex64::new(0.3, -0.7), 1.25);
    c.bench_function("hermlin/psd_sqrt", |b| {
        b.iter(|| psd_sqrt(black_box(&h)).unwrap())
    });
}

fn painleve(c: &mut Criterion) {
    c.bench_function("painleve/solve_512", |b| {
        b.iter(|| solve_painleve(1e-3, 25.0, black_box(512), 1e-10).unwrap())
    });
}

fn localmodel(c: &mut Criterion) {
    let mut g = c.benchmark_group("localmodel");
    g.sample_size(10);
    g.bench_function("solve_lambda0.1_512", |b| {
        b.iter(|| solve_local_model(1.0, black_box(0.1), 40.0, 512, 1e-10).unwrap())
    });
    g.finish();
}

fn gluing(c: &mut Criterion) {
    let spec = GluedMetricSpec::painleve_type(ZeroType::Gamma, default_painleve(), 8.0, 1.0);
    let region = Annulus {
        n_radial: 64,
        n_angular: 32,
        ..Annulus::transition(1.0)
    };
    c.bench_function("gluing/gamma_residual_64x32", |b| {
        b.iter(|| glued_residual(black_box(&spec), &region).unwrap())
    });
}

fn weights(c: &mut Criterion) {
    let s = SurfaceData::new(3, 0).unwrap();
    let p = ZeroPartition::from_counts(&s, 1, 1).unwrap();
    c.bench_function("weights/vertices_g3", |b| {
        b.iter(|| polytope_vertices(black_box(&s), &p).unwrap())
    });
    c.bench_function("weights/barycenter_g3", |b| {
        b.iter(|| barycenter(black_box(&s), &p).unwrap())
    });
}

fn spectral(c: &mut Criterion) {
    let spec = WellSpec::new(1e4, 1.0, 1.0).unwrap();
    c.bench_function("spectral/secular_1e4", |b| {
        b.iter(|| lambda1_of_t(black_box(&spec)).unwrap())
    });
    c.bench_function("spectral/fd_oracle_1024", |b| {
        b.iter(|| fd_neumann_oracle(black_box(&spec), 1024).unwrap())
    });
}

fn disksolver(c: &mut Criterion) {
    let spec = GluedMetricSpec::painleve_type(ZeroType::Gamma, default_painleve(), 4.0, 1.0);
    let grid = DiskGrid::model_disk(1.0, 64, 64).unwrap();
    let field = DiskField::glued(grid, &spec).unwrap();
    c.bench_function("disksolver/residual_64x64", |b| {
        b.iter(|| disk_residual(black_box(&field), 4.0))
    });
}

criterion_group!(benches, hermlin, painleve, localmodel, gluing, weights, spectral, disksolver);
criterion_main!(benches);
