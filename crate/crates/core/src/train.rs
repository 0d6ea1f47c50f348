//! Training loop: fresh collocation points every epoch, full-batch loss
//! gradient, one Adam step, and a relative-error check every
//! `test_interval` epochs.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::deriv::{Need, Surrogate};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{sample_batch, SampleCounts, SpaceTimePoint, TrainingBatch};
use crate::loss::{loss_and_gradient, LabeledPoint, LossBreakdown, LossWeights};
use crate::network::FfmNetwork;
use crate::normalize::NormalizationPlan;
use crate::optim::{decayed_lr, AdamConfig, AdamState};
use crate::problems::WaveProblem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub counts: SampleCounts,
    pub test_interval: usize,
    pub lr0: f64,
    pub decay_rate: f64,
    pub decay_interval_epochs: usize,
    /// Decay smoothly instead of in steps of `decay_interval_epochs` epochs.
    pub continuous_decay: bool,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Also place boundary points on hole surfaces.
    pub hole_faces: bool,
}

impl TrainConfig {
    pub fn new(counts: SampleCounts) -> Self {
        TrainConfig {
            epochs: 30_000,
            counts,
            test_interval: 1000,
            lr0: 0.01,
            decay_rate: 0.035,
            decay_interval_epochs: 100,
            continuous_decay: false,
            adam: AdamConfig::default(),
            seed: 0,
            hole_faces: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.test_interval == 0 {
            return bad("test_interval must be >= 1".into());
        }
        if self.decay_interval_epochs == 0 {
            return bad("decay_interval_epochs must be >= 1".into());
        }
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return bad(format!("lr0 must be positive, got {}", self.lr0));
        }
        if !(0.0..1.0).contains(&self.decay_rate) {
            return bad(format!("decay_rate must lie in [0, 1), got {}", self.decay_rate));
        }
        let c = self.counts;
        if c.interior == 0 || c.boundary == 0 || c.initial == 0 {
            return bad("sample counts must be positive".into());
        }
        self.adam.validate()
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        decayed_lr(self.lr0, self.decay_rate, self.decay_interval_epochs, self.continuous_decay, epoch)
    }
}

/// Loss measured at the start of an epoch, before its update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// Number of updates already applied.
    pub epoch: usize,
    pub lr: f64,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub losses: Vec<EpochRecord>,
    /// `(epochs completed, REL)`, at multiples of the test interval.
    pub rel: Vec<(usize, f64)>,
    /// REL of the untrained network.
    pub initial_rel: Option<f64>,
    /// Wall-clock time of each completed block of 1000 epochs; never
    /// written to deterministic outputs.
    pub wall_clock: Vec<Duration>,
}

impl TrainHistory {
    pub fn final_rel(&self) -> Option<f64> {
        self.rel.last().map(|r| r.1)
    }
}

/// `√(Σ(p − u)² / Σu²)`.
pub fn relative_error(pred: &[f64], exact: &[f64]) -> Result<f64> {
    if pred.len() != exact.len() {
        return Err(Error::Shape {
            expected: exact.len(),
            got: pred.len(),
        });
    }
    if exact.is_empty() {
        return Err(Error::InvalidArgument("relative error of an empty test set".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (p, u) in pred.iter().zip(exact) {
        num += (p - u) * (p - u);
        den += u * u;
    }
    if den == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok((num / den).sqrt())
}

/// Network values at physical points.
pub fn predict<S: Surrogate + ?Sized>(
    net: &S,
    plan: &NormalizationPlan,
    points: &[SpaceTimePoint],
    exec: Execution,
) -> Vec<f64> {
    let zs: Vec<Vec<f64>> = points.iter().map(|p| plan.map_to_unit(p)).collect();
    net.evaluate_batch(&zs, Need::Value, exec).into_iter().map(|b| b.value).collect()
}

pub fn exact_values(problem: &WaveProblem, points: &[SpaceTimePoint]) -> Result<Vec<f64>> {
    points.iter().map(|p| problem.exact_value(&p.x, p.t)).collect()
}

/// REL of `net` against the problem's exact solution on `points`.
pub fn evaluate_rel<S: Surrogate + ?Sized>(
    net: &S,
    plan: &NormalizationPlan,
    problem: &WaveProblem,
    points: &[SpaceTimePoint],
    exec: Execution,
) -> Result<f64> {
    let exact = exact_values(problem, points)?;
    relative_error(&predict(net, plan, points, exec), &exact)
}

/// Collocation points of epoch `epoch`: a function of the seed and the
/// epoch index only, so resumed runs draw the same points.
pub fn epoch_batch(problem: &WaveProblem, cfg: &TrainConfig, epoch: usize) -> Result<TrainingBatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(epoch as u64);
    sample_batch(&problem.domain, &problem.time, cfg.counts, cfg.hole_faces, &mut rng)
}

/// Everything needed to continue a run bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub net: FfmNetwork,
    pub adam: AdamState,
    pub epoch: usize,
    pub history: TrainHistory,
}

pub struct Trainer<'a> {
    problem: &'a WaveProblem,
    plan: &'a NormalizationPlan,
    config: TrainConfig,
    weights: LossWeights,
    data: Vec<LabeledPoint>,
    test_points: Vec<SpaceTimePoint>,
    exact: Option<Vec<f64>>,
    exec: Execution,
    state: TrainState,
    block_start: Option<Instant>,
}

impl<'a> Trainer<'a> {
    /// Starts a fresh run. REL is tracked when the problem has an exact
    /// solution and `test_points` is nonempty.
    pub fn new(
        problem: &'a WaveProblem,
        plan: &'a NormalizationPlan,
        net: FfmNetwork,
        config: TrainConfig,
        weights: LossWeights,
        test_points: Vec<SpaceTimePoint>,
        exec: Execution,
    ) -> Result<Self> {
        let n = net.param_count();
        let state = TrainState {
            net,
            adam: AdamState::new(n),
            epoch: 0,
            history: TrainHistory::default(),
        };
        let mut t = Self::resume(problem, plan, state, config, weights, test_points, exec)?;
        if let Some(exact) = &t.exact {
            let pred = predict(&t.state.net, plan, &t.test_points, exec);
            t.state.history.initial_rel = Some(relative_error(&pred, exact)?);
        }
        Ok(t)
    }

    pub fn resume(
        problem: &'a WaveProblem,
        plan: &'a NormalizationPlan,
        state: TrainState,
        config: TrainConfig,
        weights: LossWeights,
        test_points: Vec<SpaceTimePoint>,
        exec: Execution,
    ) -> Result<Self> {
        config.validate()?;
        weights.validate()?;
        if state.net.input_dim() != problem.dim() + 1 {
            return Err(Error::Shape {
                expected: problem.dim() + 1,
                got: state.net.input_dim(),
            });
        }
        if state.adam.m.len() != state.net.param_count() {
            return Err(Error::Shape {
                expected: state.net.param_count(),
                got: state.adam.m.len(),
            });
        }
        let exact = match (&problem.exact, test_points.is_empty()) {
            (Some(_), false) => Some(exact_values(problem, &test_points)?),
            _ => None,
        };
        Ok(Trainer {
            problem,
            plan,
            config,
            weights,
            data: Vec::new(),
            test_points,
            exact,
            exec,
            state,
            block_start: None,
        })
    }

    /// Adds observed values for the optional data term.
    pub fn with_data(mut self, data: Vec<LabeledPoint>) -> Self {
        self.data = data;
        self
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn net(&self) -> &FfmNetwork {
        &self.state.net
    }

    pub fn history(&self) -> &TrainHistory {
        &self.state.history
    }

    pub fn epoch(&self) -> usize {
        self.state.epoch
    }

    pub fn done(&self) -> bool {
        self.state.epoch >= self.config.epochs
    }

    pub fn into_state(self) -> TrainState {
        self.state
    }

    /// REL of the current network, if an exact solution is available.
    pub fn current_rel(&self) -> Result<Option<f64>> {
        match &self.exact {
            Some(exact) => {
                let pred = predict(&self.state.net, self.plan, &self.test_points, self.exec);
                relative_error(&pred, exact).map(Some)
            }
            None => Ok(None),
        }
    }

    /// Runs one epoch. A failing loss or optimizer step leaves the state
    /// untouched.
    pub fn step(&mut self) -> Result<()> {
        let e = self.state.epoch;
        let start = *self.block_start.get_or_insert_with(Instant::now);
        let batch = epoch_batch(self.problem, &self.config, e)?;
        let (loss, grad) = loss_and_gradient(
            self.problem,
            &self.state.net,
            self.plan,
            &batch,
            &self.weights,
            &self.data,
            self.exec,
        )?;
        let lr = self.config.lr_at(e);
        let adam = self.config.adam;
        self.state.adam.step(self.state.net.params_mut(), &grad, lr, &adam)?;
        let h = &mut self.state.history;
        h.losses.push(EpochRecord { epoch: e, lr, loss });
        self.state.epoch = e + 1;
        if self.state.epoch.is_multiple_of(1000) {
            h.wall_clock.push(start.elapsed());
            self.block_start = None;
        }
        if self.state.epoch.is_multiple_of(self.config.test_interval) {
            if let Some(rel) = self.current_rel()? {
                self.state.history.rel.push((self.state.epoch, rel));
            }
        }
        Ok(())
    }

    /// Steps until `config.epochs`, calling `after_epoch` after each one.
    pub fn run<F>(&mut self, mut after_epoch: F) -> Result<()>
    where
        F: FnMut(&Trainer<'a>) -> Result<()>,
    {
        while !self.done() {
            self.step()?;
            after_epoch(self)?;
        }
        Ok(())
    }
}

/// Trains `net` from scratch on the problem's default test set.
pub fn train(
    problem: &WaveProblem,
    net: FfmNetwork,
    plan: &NormalizationPlan,
    config: TrainConfig,
    weights: LossWeights,
    exec: Execution,
) -> Result<(TrainHistory, FfmNetwork)> {
    let test = if problem.exact.is_some() {
        crate::geometry::build_test_set(&problem.domain, &problem.defaults.eval_set)?
    } else {
        Vec::new()
    };
    let mut t = Trainer::new(problem, plan, net, config, weights, test, exec)?;
    t.run(|_| Ok(()))?;
    let st = t.into_state();
    Ok((st.history, st.net))
}
