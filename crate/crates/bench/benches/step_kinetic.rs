use criterion::{criterion_group, criterion_main, Criterion};

use weakconf_bench::{kinetic_fixture, kinetic_solver};

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_kinetic");
    group.sample_size(20);
    for (name, scattering) in [("fokker_planck", false), ("scattering", true)] {
        let (model, f0, _) = kinetic_fixture(256, 128, scattering);
        let mut solver = kinetic_solver(model);
        group.bench_function(name, |b| {
            b.iter_batched_ref(|| f0.clone(), |f| solver.step(f, 0.05).unwrap(), criterion::BatchSize::LargeInput)
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
