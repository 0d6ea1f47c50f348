use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wave_fpinn::checkpoint::Checkpoint;
use wave_fpinn::config::RunConfig;
use wave_fpinn::geometry::{lhs_sample, SpaceTimePoint};
use wave_fpinn::loss::LossBreakdown;
use wave_fpinn::network::{FfmNetwork, NetworkConfig};
use wave_fpinn::normalize::{Mode, NormalizationPlan};
use wave_fpinn::optim::AdamState;
use wave_fpinn::problems::{builtin, PROBLEM_NAMES};
use wave_fpinn::train::{relative_error, EpochRecord, TrainHistory, TrainState};

fn mode() -> impl Strategy<Value = Mode> {
    prop::sample::select(Mode::ALL.to_vec())
}

fn problem_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(PROBLEM_NAMES.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lhs_puts_one_point_in_every_stratum(n in 1usize..200, d in 1usize..5, seed: u64) {
        let pts = lhs_sample(n, d, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(pts.len(), n);
        for j in 0..d {
            let mut hits = vec![0u32; n];
            for p in &pts {
                prop_assert!(p[j] > 0.0 && p[j] < 1.0);
                hits[(p[j] * n as f64).floor() as usize] += 1;
            }
            prop_assert!(hits.iter().all(|&h| h == 1));
        }
    }

    #[test]
    fn unit_map_round_trips(
        name in problem_name(),
        mode in mode(),
        u in prop::collection::vec(0.0f64..=1.0, 4),
    ) {
        let problem = builtin(name).unwrap();
        let plan = NormalizationPlan::new(mode, &problem.domain, &problem.time);
        let d = problem.dim();
        let x: Vec<f64> = problem
            .domain
            .bounds()
            .iter()
            .zip(&u)
            .map(|(&(lo, hi), &s)| lo + s * (hi - lo))
            .collect();
        let t = problem.time.t0 + u[3] * problem.time.span();
        let p = SpaceTimePoint::new(x, t);
        let z = plan.map_to_unit(&p);
        prop_assert_eq!(z.len(), d + 1);
        if mode == Mode::SpatioTemporal {
            prop_assert!(z.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        }
        let back = plan.unmap(&z);
        for (a, b) in back.x.iter().zip(&p.x) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        prop_assert!((back.t - p.t).abs() <= 1e-12 * p.t.abs().max(1.0));
    }

    #[test]
    fn rel_is_scale_and_permutation_invariant(
        pairs in prop::collection::vec((-10.0f64..10.0, 0.5f64..10.0), 1..50),
        scale in 0.01f64..100.0,
        rot in 0usize..50,
    ) {
        let (pred, exact): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let base = relative_error(&pred, &exact).unwrap();
        let sp: Vec<f64> = pred.iter().map(|v| v * scale).collect();
        let se: Vec<f64> = exact.iter().map(|v| v * scale).collect();
        prop_assert!((relative_error(&sp, &se).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
        let k = rot % pred.len();
        let (mut rp, mut re) = (pred.clone(), exact.clone());
        rp.rotate_left(k);
        re.rotate_left(k);
        prop_assert!((relative_error(&rp, &re).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
        prop_assert_eq!(relative_error(&exact, &exact).unwrap(), 0.0);
    }

    #[test]
    fn run_config_round_trips_through_toml(
        name in problem_name(),
        mode in mode(),
        epochs in 1usize..100_000,
        seed: u64,
        lr0 in 1e-5f64..1.0,
    ) {
        let overrides = [
            format!("mode=\"{}\"", mode.name()),
            format!("train.epochs={epochs}"),
            format!("train.seed={}", seed >> 1),
            format!("train.lr0={lr0:e}"),
        ];
        let cfg = RunConfig::parse(&RunConfig::for_problem(name).to_toml(), &overrides).unwrap();
        prop_assert_eq!(cfg.mode, mode);
        prop_assert_eq!(cfg.train.epochs, epochs);
        prop_assert_eq!(cfg.train.lr0, lr0);
        let eff = cfg.effective().unwrap();
        prop_assert_eq!(&RunConfig::parse(&eff.to_toml(), &[]).unwrap(), &eff);
    }

    #[test]
    fn checkpoints_round_trip_exactly(
        seed: u64,
        q in 1usize..4,
        noise in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 8),
        epochs in 0usize..6,
    ) {
        let mut net = FfmNetwork::init(NetworkConfig {
            hidden_widths: vec![6, 4],
            init_seed: seed,
            ..NetworkConfig::new(3, q)
        })
        .unwrap();
        net.params_mut()[0] = noise[0];
        let mut adam = AdamState::new(net.param_count());
        adam.m[0] = noise[1];
        adam.v[0] = noise[2].abs();
        adam.step = epochs as u64;
        let loss = LossBreakdown {
            pde: noise[3],
            bc: noise[4],
            ic_value: noise[5],
            ic_velocity: noise[6],
            data: 0.0,
            total: noise[7],
        };
        let history = TrainHistory {
            losses: (0..epochs).map(|e| EpochRecord { epoch: e, lr: 0.01, loss }).collect(),
            rel: (1..=epochs).map(|e| (e, noise[e % 8])).collect(),
            initial_rel: (epochs % 2 == 0).then_some(noise[0]),
            wall_clock: Vec::new(),
        };
        let ckpt = Checkpoint {
            meta: format!("{{\"seed\": {seed}}}"),
            seed,
            state: TrainState { net, adam, epoch: epochs, history },
        };
        let back = Checkpoint::from_text(&ckpt.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), ckpt.to_text());
        prop_assert_eq!(back, ckpt);
    }
}
