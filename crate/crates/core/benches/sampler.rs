//! Sequential against rayon-parallel execution for the two places the
//! workload splits into independent tasks: chains of one fit and replicate
//! fits of a study.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qvcss::config::{McmcConfig, RunConfig};
use qvcss::exec::Execution;
use qvcss::sampler::sample_posterior_with;
use qvcss::simulate::{simulate_dataset, ScenarioSpec};
use qvcss::study::{run_study, StudyConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn short_run(chains: usize) -> RunConfig {
    RunConfig {
        mcmc: McmcConfig { iterations: 400, burn_in: 200, thin: 1, chains, seed: 1 },
        grid_points: 50,
        ..Default::default()
    }
}

fn chains(c: &mut Criterion) {
    let data = simulate_dataset(&ScenarioSpec { n: 200, p: 50, ..Default::default() }).unwrap().dataset;
    let cfg = short_run(4);
    let mut g = c.benchmark_group("four_chains");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| black_box(sample_posterior_with(&data, &cfg, mode).unwrap()))
        });
    }
    g.finish();
}

fn replicates(c: &mut Criterion) {
    let study = StudyConfig {
        scenarios: vec![ScenarioSpec { n: 100, p: 20, ..Default::default() }],
        replicates: 4,
        run: short_run(1),
        ..Default::default()
    };
    let mut g = c.benchmark_group("four_replicates");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| black_box(run_study(&study, None, mode).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, chains, replicates);
criterion_main!(benches);
