use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quadlab_core::approx::PsiSpec;
use quadlab_core::geometry::{CoordinateRegion, Predicate};
use quadlab_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn mc_volume(c: &mut Criterion) {
    let psi = PsiSpec::power_law(1.0, 1.0).unwrap();
    let mut g = c.benchmark_group("mc_volume");
    g.sample_size(10);
    for d in [3, 4] {
        let region = CoordinateRegion::new(1.0, psi.clone(), d, d, 1.0).unwrap();
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, d), &d, |b, _| {
                b.iter(|| region.mc_volume(black_box(7), 1_000_000, Predicate::Full, exec).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, mc_volume);
criterion_main!(benches);
