use wave_fpinn::checkpoint::Checkpoint;
use wave_fpinn::error::Error;
use wave_fpinn::exec::Execution;
use wave_fpinn::geometry::{build_test_set, EvalSet, SampleCounts, SpaceTimePoint};
use wave_fpinn::loss::LossWeights;
use wave_fpinn::network::{FfmNetwork, NetworkConfig};
use wave_fpinn::normalize::{Mode, NormalizationPlan};
use wave_fpinn::optim::AdamState;
use wave_fpinn::problems::{builtin, WaveProblem};
use wave_fpinn::train::{train, TrainConfig, TrainHistory, TrainState, Trainer};

struct Setup {
    problem: WaveProblem,
    plan: NormalizationPlan,
    net: FfmNetwork,
    config: TrainConfig,
    test: Vec<SpaceTimePoint>,
}

fn setup(mode: Mode, epochs: usize) -> Setup {
    let problem = builtin("example1_small").unwrap();
    let plan = NormalizationPlan::new(mode, &problem.domain, &problem.time);
    let net = FfmNetwork::init(NetworkConfig {
        hidden_widths: vec![8, 8],
        init_seed: 3,
        ..NetworkConfig::new(3, 2)
    })
    .unwrap();
    let counts = SampleCounts {
        interior: 48,
        boundary: 32,
        initial: 32,
    };
    let config = TrainConfig {
        epochs,
        test_interval: 10,
        seed: 5,
        ..TrainConfig::new(counts)
    };
    let grid = EvalSet::Grid {
        resolution: 6,
        t: 0.5,
        exclude_holes: false,
    };
    let test = build_test_set(&problem.domain, &grid).unwrap();
    Setup {
        problem,
        plan,
        net,
        config,
        test,
    }
}

fn run(s: &Setup, exec: Execution) -> TrainState {
    let mut t = Trainer::new(
        &s.problem,
        &s.plan,
        s.net.clone(),
        s.config.clone(),
        LossWeights::default(),
        s.test.clone(),
        exec,
    )
    .unwrap();
    t.run(|_| Ok(())).unwrap();
    t.into_state()
}

fn mean_loss(h: &TrainHistory, range: std::ops::Range<usize>) -> f64 {
    let n = range.len() as f64;
    h.losses[range].iter().map(|r| r.loss.total).sum::<f64>() / n
}

#[test]
fn seeded_runs_repeat_exactly() {
    let s = setup(Mode::Spatial, 30);
    assert_eq!(run(&s, Execution::Parallel), run(&s, Execution::Parallel));
}

#[test]
fn parallel_and_sequential_training_agree_bitwise() {
    let s = setup(Mode::SpatioTemporal, 20);
    assert_eq!(run(&s, Execution::Parallel), run(&s, Execution::Sequential));
}

#[test]
fn resuming_from_a_checkpoint_matches_an_uninterrupted_run() {
    let full = setup(Mode::Temporal, 40);
    let reference = run(&full, Execution::Parallel);

    let half = setup(Mode::Temporal, 20);
    let ckpt = Checkpoint {
        meta: "resume test".into(),
        seed: half.config.seed,
        state: run(&half, Execution::Parallel),
    };
    let restored = Checkpoint::from_text(&ckpt.to_text()).unwrap();
    assert_eq!(restored, ckpt);

    let mut t = Trainer::resume(
        &full.problem,
        &full.plan,
        restored.state,
        full.config.clone(),
        LossWeights::default(),
        full.test.clone(),
        Execution::Parallel,
    )
    .unwrap();
    assert_eq!(t.epoch(), 20);
    t.run(|_| Ok(())).unwrap();
    assert_eq!(t.into_state(), reference);
}

#[test]
fn history_records_every_epoch_and_each_test_interval() {
    let mut s = setup(Mode::None, 35);
    s.config.decay_interval_epochs = 10;
    let st = run(&s, Execution::Parallel);
    let h = &st.history;
    assert_eq!(st.epoch, 35);
    assert_eq!(h.losses.len(), 35);
    for (i, r) in h.losses.iter().enumerate() {
        assert_eq!(r.epoch, i);
        assert_eq!(r.lr, s.config.lr_at(i));
        assert!(r.loss.total.is_finite());
    }
    assert_eq!(h.losses[9].lr, 0.01);
    assert_eq!(h.losses[10].lr, 0.01 * 0.965);
    let epochs: Vec<usize> = h.rel.iter().map(|r| r.0).collect();
    assert_eq!(epochs, [10, 20, 30]);
    assert!(h.initial_rel.is_some());
    assert_eq!(h.final_rel(), Some(h.rel[2].1));
}

#[test]
fn training_reduces_the_loss() {
    let s = setup(Mode::Spatial, 300);
    let st = run(&s, Execution::Parallel);
    let early = mean_loss(&st.history, 0..20);
    let late = mean_loss(&st.history, 280..300);
    assert!(late < 0.5 * early, "early {early:e}, late {late:e}");
}

#[test]
fn train_uses_the_problem_evaluation_set() {
    let s = setup(Mode::Spatial, 10);
    let (h, net) = train(
        &s.problem,
        s.net.clone(),
        &s.plan,
        s.config.clone(),
        LossWeights::default(),
        Execution::Parallel,
    )
    .unwrap();
    assert_eq!(h.losses.len(), 10);
    assert_eq!(h.rel.len(), 1);
    assert_ne!(net, s.net);
}

#[test]
fn resume_rejects_a_mismatched_optimizer_state() {
    let s = setup(Mode::None, 10);
    let state = TrainState {
        adam: AdamState::new(s.net.param_count() + 1),
        net: s.net.clone(),
        epoch: 0,
        history: TrainHistory::default(),
    };
    let err = Trainer::resume(
        &s.problem,
        &s.plan,
        state,
        s.config.clone(),
        LossWeights::default(),
        s.test.clone(),
        Execution::Parallel,
    )
    .err()
    .unwrap();
    assert!(matches!(err, Error::Shape { .. }), "{err}");
}

#[test]
fn resume_rejects_a_network_for_another_dimension() {
    let s = setup(Mode::None, 10);
    let net = FfmNetwork::init(NetworkConfig::new(4, 2)).unwrap();
    let state = TrainState {
        adam: AdamState::new(net.param_count()),
        net,
        epoch: 0,
        history: TrainHistory::default(),
    };
    let res = Trainer::resume(
        &s.problem,
        &s.plan,
        state,
        s.config.clone(),
        LossWeights::default(),
        s.test.clone(),
        Execution::Parallel,
    );
    assert!(matches!(res, Err(Error::Shape { expected: 3, got: 4 })));
}

#[test]
fn invalid_configuration_is_rejected_before_training() {
    let mut s = setup(Mode::None, 10);
    s.config.test_interval = 0;
    let res = Trainer::new(
        &s.problem,
        &s.plan,
        s.net.clone(),
        s.config.clone(),
        LossWeights::default(),
        s.test.clone(),
        Execution::Parallel,
    );
    assert!(matches!(res, Err(Error::Config(_))));
}

#[test]
fn reduced_network_improves_on_the_small_domain() {
    let problem = builtin("example1_small").unwrap();
    let plan = NormalizationPlan::new(Mode::None, &problem.domain, &problem.time);
    let net = FfmNetwork::init(NetworkConfig {
        hidden_widths: vec![16, 16],
        ..NetworkConfig::new(3, 5)
    })
    .unwrap();
    let config = TrainConfig {
        epochs: 3000,
        seed: 9,
        ..TrainConfig::new(problem.defaults.counts)
    };
    let (h, _) = train(&problem, net, &plan, config, LossWeights::default(), Execution::Parallel).unwrap();
    let (first, last) = (h.initial_rel.unwrap(), h.final_rel().unwrap());
    assert_eq!(h.rel.len(), 3);
    assert!(last < first, "REL {first:e} -> {last:e}");
}
