use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use seeqst::estimate::{direct_estimate, distributions_from_records, mle_estimate, MleConfig};
use seeqst::{
    build_subset_circuits, eo_split, full_qst_plan, run_plan, Connectivity, NoiseSpec,
    PlanVariant, ReferenceState, SubsetKey,
};

fn bench_planning(c: &mut Criterion) {
    c.bench_function("full_plan_seeqst_n8", |b| {
        b.iter(|| full_qst_plan(black_box(8), PlanVariant::Seeqst, Connectivity::AllToAll))
    });
    c.bench_function("full_plan_local_n6", |b| {
        b.iter(|| full_qst_plan(black_box(6), PlanVariant::Local, Connectivity::Chain))
    });
    c.bench_function("eo_split_n10_dense_mask", |b| {
        let k = SubsetKey::new((1 << 10) - 1, 10).unwrap();
        b.iter(|| eo_split(black_box(&k)))
    });
}

fn bench_simulation(c: &mut Criterion) {
    let n = 5;
    let circuits = full_qst_plan(n, PlanVariant::Seeqst, Connectivity::Chain).unwrap();
    let pure = ReferenceState::PlusY { n_qubits: n }.prepare().unwrap();
    c.bench_function("run_plan_n5_pure_1024_shots", |b| {
        b.iter(|| run_plan(&pure, black_box(&circuits), 1024, &NoiseSpec::None, 7))
    });

    let mixed = ReferenceState::RandomFullRank { n_qubits: 4, seed: 1 }
        .prepare()
        .unwrap();
    let noisy_circuits = full_qst_plan(4, PlanVariant::Seeqst, Connectivity::Chain).unwrap();
    let noise = NoiseSpec::depolarizing(0.01).unwrap();
    c.bench_function("run_plan_n4_depolarizing_1024_shots", |b| {
        b.iter(|| run_plan(&mixed, black_box(&noisy_circuits), 1024, &noise, 7))
    });
}

fn bench_estimation(c: &mut Criterion) {
    let n = 4;
    let k = SubsetKey::new((1 << n) - 1, n).unwrap();
    let circuits = build_subset_circuits(&k, Connectivity::Chain).unwrap();
    let state = ReferenceState::RandomFullRank { n_qubits: n, seed: 2 }
        .prepare()
        .unwrap();
    let records = run_plan(&state, &circuits, 16384, &NoiseSpec::None, 3).unwrap();
    c.bench_function("direct_estimate_n4_full_block", |b| {
        b.iter_batched(
            || distributions_from_records(&circuits, &records).unwrap(),
            |dists| direct_estimate(black_box(&dists), &k),
            BatchSize::SmallInput,
        )
    });

    let n2 = 2;
    let plan2 = full_qst_plan(n2, PlanVariant::Seeqst, Connectivity::Chain).unwrap();
    let state2 = ReferenceState::PlusY { n_qubits: n2 }.prepare().unwrap();
    let records2 = run_plan(&state2, &plan2, 4096, &NoiseSpec::None, 4).unwrap();
    let cfg = MleConfig {
        max_iters: 200,
        ..MleConfig::default()
    };
    c.bench_function("mle_n2_200_iters", |b| {
        b.iter_batched(
            || distributions_from_records(&plan2, &records2).unwrap(),
            |dists| mle_estimate(black_box(&dists), n2, &cfg),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_planning, bench_simulation, bench_estimation);
criterion_main!(benches);
