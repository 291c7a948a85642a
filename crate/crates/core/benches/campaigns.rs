//! Sequential vs rayon fan-out on the three trial-shaped workloads.
//! Without the `parallel` feature only the sequential arm is measured.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand_chacha::ChaCha8Rng;

use cluster_qss::channel::{transfer, AdversaryModel, ChannelConfig};
use cluster_qss::circuit::experiment_circuit;
use cluster_qss::exec;
use cluster_qss::protocol::engine::run_full_session;
use cluster_qss::protocol::SessionPlan;

fn compare<T, F>(c: &mut Criterion, group: &str, trials: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync + Send + Copy,
{
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_with_input(BenchmarkId::new("sequential", trials), &trials, |b, &n| {
        b.iter(|| black_box(exec::map_trials_sequential(n, 7, f)))
    });
    #[cfg(feature = "parallel")]
    g.bench_with_input(BenchmarkId::new("parallel", trials), &trials, |b, &n| {
        b.iter(|| black_box(exec::map_trials_parallel(n, 7, f)))
    });
    g.finish();
}

fn detection(c: &mut Criterion) {
    let config = ChannelConfig::new(8, 8);
    compare(c, "intercept_resend_detection", 10_000, move |_, rng| {
        transfer(Vec::new(), &config, &AdversaryModel::InterceptResend, rng).is_ok()
    });
}

fn sessions(c: &mut Criterion) {
    compare(c, "random_sessions", 200, |_, rng| {
        let plan = SessionPlan::random(rng);
        run_full_session(&plan, rng).map(|r| r.min_fidelity()).ok()
    });
}

fn shots(c: &mut Criterion) {
    let circuit = experiment_circuit(1);
    let circuit = &circuit;
    compare(c, "circuit_shots", 10_000, move |_, rng| circuit.run_shot(rng).map(|(bits, _)| bits).ok());
}

criterion_group!(benches, detection, sessions, shots);
criterion_main!(benches);
