use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tdosc::quantum::{grid_overlap, Construction, FieldFrame, QuantumNumbers, QuantumSystem};
use tdosc::scenario::Scenario;
use tdosc::{Exec, Reduction};

fn system(name: &str) -> QuantumSystem {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"));
    let s = Scenario::load(&path).expect("shipped scenario");
    let red = Reduction::new(s.params.clone()).expect("valid parameters");
    s.quantum_system(&red, false, Exec::Sequential).expect("decoupled scenario")
}

fn modes() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)]
}

fn psi_field(c: &mut Criterion) {
    let qs = system("time_dependent");
    let n = QuantumNumbers { n1: 2, n2: 1 };
    let mut group = c.benchmark_group("psi_field");
    for points in [128, 256] {
        let grid = qs.default_grid(FieldFrame::Original, points).unwrap();
        for (label, exec) in modes() {
            group.bench_with_input(BenchmarkId::new(label, points), &grid, |b, &grid| {
                b.iter(|| qs.psi_field(n, black_box(7.0), grid, Construction::Compositional, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn overlap(c: &mut Criterion) {
    let qs = system("symmetric");
    let grid = qs.default_grid(FieldFrame::Original, 256).unwrap();
    let a =
        qs.psi_field(QuantumNumbers { n1: 0, n2: 0 }, 3.0, grid, Construction::Compositional, Exec::Parallel).unwrap();
    let b =
        qs.psi_field(QuantumNumbers { n1: 2, n2: 0 }, 3.0, grid, Construction::Compositional, Exec::Parallel).unwrap();
    let mut group = c.benchmark_group("grid_overlap_256");
    for (label, exec) in modes() {
        group.bench_function(label, |bench| bench.iter(|| grid_overlap(black_box(&a), black_box(&b), exec).unwrap()));
    }
    group.finish();
}

fn schrodinger_residual(c: &mut Criterion) {
    let qs = system("symmetric");
    let grid = qs.default_grid(FieldFrame::Original, 256).unwrap();
    let n = QuantumNumbers { n1: 1, n2: 0 };
    let mut group = c.benchmark_group("schrodinger_residual_256");
    group.sample_size(20);
    for (label, exec) in modes() {
        group.bench_function(label, |b| {
            b.iter(|| {
                qs.schrodinger_check(n, black_box(5.0), FieldFrame::Original, Construction::Compositional, grid, exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, psi_field, overlap, schrodinger_residual);
criterion_main!(benches);
