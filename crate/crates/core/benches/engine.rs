//! Parallel vs sequential execution of the hot paths: batched second-order
//! evaluation and one full loss-gradient pass.
//!
//! Build with `--no-default-features` to measure the sequential-only build.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wave_fpinn::deriv::{evaluate_many, Need};
use wave_fpinn::exec::Execution;
use wave_fpinn::geometry::sample_batch;
use wave_fpinn::loss::{loss_and_gradient, LossWeights};
use wave_fpinn::network::{FfmNetwork, NetworkConfig};
use wave_fpinn::normalize::{Mode, NormalizationPlan};
use wave_fpinn::problems::builtin;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn engine(c: &mut Criterion) {
    let problem = builtin("example1_small").unwrap();
    let plan = NormalizationPlan::new(Mode::Spatial, &problem.domain, &problem.time);
    let net = FfmNetwork::init(NetworkConfig::new(3, 10)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let batch = sample_batch(&problem.domain, &problem.time, problem.defaults.counts, false, &mut rng).unwrap();
    let inputs: Vec<Vec<f64>> = batch.interior.iter().map(|p| plan.map_to_unit(p)).collect();

    let mut g = c.benchmark_group("evaluate_second_1500");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| evaluate_many(&net, &inputs, Need::Second, exec))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("loss_and_gradient_epoch");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                loss_and_gradient(&problem, &net, &plan, &batch, &LossWeights::default(), &[], exec).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, engine);
criterion_main!(benches);
