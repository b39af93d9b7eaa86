//! Parallel vs sequential scenario labeling on the bundled island case.
//!
//! `label_scenarios` fans simulations out via rayon when the `parallel`
//! feature is on (the default); `label_scenarios_seq` always runs in input
//! order on one thread. Both are benched in the same build so the dispatch
//! overhead and the scaling of the parallel path can be read off directly:
//!
//! ```text
//! cargo bench -p freqsec-core --bench labeling
//! cargo bench -p freqsec-core --bench labeling --no-default-features
//! ```
//!
//! The workload is sized well below a calibration run (64 scenarios, 10 s
//! horizon) so an iteration stays in the tens of milliseconds; the relative
//! cost of the two paths is what matters, not the absolute time.

use criterion::{criterion_group, criterion_main, Criterion};
use freqsec_core::calibration::{generate_scenarios, label_scenarios, label_scenarios_seq};
use freqsec_core::case::CaseData;
use std::hint::black_box;

const SCENARIOS: usize = 64;
const SEED: u64 = 7;
const HORIZON: f64 = 10.0;
const DT: f64 = 2e-3;

fn bench_labeling(c: &mut Criterion) {
    let case = CaseData::island11();
    let samples = generate_scenarios(&case, SCENARIOS, SEED).expect("island case yields scenarios");
    let delta_f_th = case.delta_f_th;

    let mut group = c.benchmark_group("labeling");
    group.sample_size(10);

    group.bench_function("parallel", |b| {
        b.iter(|| {
            let out = label_scenarios(&case, black_box(&samples), delta_f_th, HORIZON, DT);
            black_box(out.labeled.len())
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let out = label_scenarios_seq(&case, black_box(&samples), delta_f_th, HORIZON, DT);
            black_box(out.labeled.len())
        })
    });

    group.finish();
}

criterion_group!(benches, bench_labeling);
criterion_main!(benches);
