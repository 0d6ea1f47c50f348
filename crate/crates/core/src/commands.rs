//! The `train`, `eval`, `compare`, `gradcheck` and `residualcheck` jobs.
//!
//! Progress goes to the caller-supplied logger; files written to the output
//! directory are deterministic for a fixed configuration.

use std::path::{Path, PathBuf};

use crate::check::{gradcheck, residualcheck, GradReport, ResidualReport};
use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::build_test_set;
use crate::network::FfmNetwork;
use crate::normalize::{Mode, NormalizationPlan};
use crate::problems::{builtin, PROBLEM_NAMES};
use crate::report::{
    num, write_error_grid, write_joined_rel, write_loss_curve, write_rel_curve, write_summary, ERROR_GRID,
    LOSS_CURVE, REL_CURVE, SUMMARY,
};
use crate::train::{exact_values, predict, relative_error, TrainHistory, TrainState, Trainer};

pub const CHECKPOINT: &str = "checkpoint.txt";
pub const CONFIG: &str = "config.toml";

pub type Logger<'a> = &'a mut dyn FnMut(&str);

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn meta_of(cfg: &RunConfig) -> String {
    serde_json::to_string(cfg).expect("run configuration serializes")
}

fn config_of(ckpt: &Checkpoint) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(&ckpt.meta)
        .map_err(|e| Error::Checkpoint(format!("embedded run configuration: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Outcome of one training run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mode: Mode,
    pub history: TrainHistory,
    pub net: FfmNetwork,
    pub final_rel: Option<f64>,
}

/// Trains according to `cfg`, optionally continuing from `resume`, and
/// writes `config.toml`, `loss_curve.csv`, `rel_curve.csv`, `summary.txt`,
/// `checkpoint.txt` and (when an exact solution exists) `error_grid.csv`
/// into `cfg.output_dir`.
pub fn train(cfg: &RunConfig, resume: Option<&Path>, exec: Execution, log: Logger) -> Result<RunOutcome> {
    let cfg = cfg.effective()?;
    let problem = cfg.problem()?;
    let plan = NormalizationPlan::new(cfg.mode, &problem.domain, &problem.time);
    let train_cfg = cfg.train_config()?;
    let out = cfg.output_dir.clone();
    create_dir(&out)?;
    let cfg_path = out.join(CONFIG);
    std::fs::write(&cfg_path, cfg.to_toml()).map_err(|e| Error::io(&cfg_path, e))?;

    let test = if problem.exact.is_some() {
        build_test_set(&problem.domain, &cfg.eval_set()?)?
    } else {
        Vec::new()
    };
    let weights = cfg.weights;
    let mut trainer = match resume {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            let mut theirs = config_of(&ckpt)?;
            theirs.train.epochs = cfg.train.epochs;
            theirs.output_dir = cfg.output_dir.clone();
            if theirs != cfg {
                return Err(Error::Config(format!(
                    "{} was written with a different configuration (only train.epochs and output_dir may change)",
                    path.display()
                )));
            }
            Trainer::resume(&problem, &plan, ckpt.state, train_cfg.clone(), weights, test.clone(), exec)?
        }
        None => {
            let net = FfmNetwork::init(cfg.network_config()?)?;
            Trainer::new(&problem, &plan, net, train_cfg.clone(), weights, test.clone(), exec)?
        }
    };

    let meta = meta_of(&cfg);
    let ckpt_path = out.join(CHECKPOINT);
    let save = |t: &Trainer| -> Result<()> {
        Checkpoint {
            meta: meta.clone(),
            seed: train_cfg.seed,
            state: t.state().clone(),
        }
        .save(&ckpt_path)
    };
    let interval = cfg.train.checkpoint_interval;
    let name = format!("{}/{}", problem.name, cfg.mode.name());
    log(&format!("{name}: training {} epochs from epoch {}", train_cfg.epochs, trainer.epoch()));
    trainer.run(|t| {
        let e = t.epoch();
        if e % train_cfg.test_interval == 0 {
            let l = t.history().losses.last().map_or(f64::NAN, |r| r.loss.total);
            let rel = t.history().rel.last().filter(|r| r.0 == e).map(|r| num(r.1));
            log(&format!("{name}: epoch {e} loss {} rel {}", num(l), rel.unwrap_or("-".into())));
        }
        if interval > 0 && e % interval == 0 {
            save(t)?;
        }
        Ok(())
    })?;
    save(&trainer)?;

    let TrainState { net, history, .. } = trainer.into_state();
    write_loss_curve(&out.join(LOSS_CURVE), &history)?;
    write_rel_curve(&out.join(REL_CURVE), &history)?;
    let mut summary = vec![
        ("problem".to_string(), problem.name.clone()),
        ("mode".to_string(), cfg.mode.name().to_string()),
        ("epochs".to_string(), train_cfg.epochs.to_string()),
        ("seed".to_string(), train_cfg.seed.to_string()),
        ("parameters".to_string(), net.param_count().to_string()),
    ];
    if let Some(l) = history.losses.last() {
        summary.push(("final_loss".into(), num(l.loss.total)));
    }
    let mut final_rel = None;
    if !test.is_empty() {
        let exact = exact_values(&problem, &test)?;
        let pred = predict(&net, &plan, &test, exec);
        write_error_grid(&out.join(ERROR_GRID), &test, &exact, &pred)?;
        let rel = relative_error(&pred, &exact)?;
        if let Some(r0) = history.initial_rel {
            summary.push(("initial_rel".into(), num(r0)));
        }
        summary.push(("final_rel".into(), num(rel)));
        summary.push(("test_points".into(), test.len().to_string()));
        final_rel = Some(rel);
    }
    write_summary(&out.join(SUMMARY), &summary)?;
    Ok(RunOutcome {
        mode: cfg.mode,
        history,
        net,
        final_rel,
    })
}

/// Trains the same configuration under all four normalization modes, each
/// in `<output_dir>/<mode>/`, then writes a joined `rel_curve.csv` and a
/// `summary.txt` with one final-REL line per mode.
pub fn compare(cfg: &RunConfig, exec: Execution, log: Logger) -> Result<Vec<RunOutcome>> {
    let root = cfg.output_dir.clone();
    create_dir(&root)?;
    let mut runs = Vec::new();
    for mode in Mode::ALL {
        let mut sub = cfg.clone();
        sub.mode = mode;
        sub.output_dir = root.join(mode.name());
        runs.push(train(&sub, None, exec, log)?);
    }
    let joined: Vec<(Mode, &TrainHistory)> = runs.iter().map(|r| (r.mode, &r.history)).collect();
    write_joined_rel(&root.join(REL_CURVE), &joined)?;
    let lines: Vec<(String, String)> = runs
        .iter()
        .map(|r| {
            let v = r.final_rel.map(num).unwrap_or_else(|| "n/a".into());
            (format!("final_rel {}", r.mode.name()), v)
        })
        .collect();
    write_summary(&root.join(SUMMARY), &lines)?;
    Ok(runs)
}

/// Overrides for `eval`.
#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Configuration to use instead of the one stored in the checkpoint.
    pub config: Option<RunConfig>,
    pub output_dir: Option<PathBuf>,
}

/// Evaluates a checkpoint on the configured evaluation set, writing
/// `error_grid.csv` and `summary.txt`. Returns the REL.
pub fn eval(checkpoint: &Path, opts: &EvalOptions, exec: Execution) -> Result<f64> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let cfg = match &opts.config {
        Some(c) => c.clone(),
        None => config_of(&ckpt)?,
    };
    let problem = cfg.problem()?;
    let net = ckpt.state.net;
    if net.config() != &cfg.network_config()? {
        return Err(Error::Config(format!(
            "{} holds a network that does not match the configuration",
            checkpoint.display()
        )));
    }
    let plan = NormalizationPlan::new(cfg.mode, &problem.domain, &problem.time);
    let test = build_test_set(&problem.domain, &cfg.eval_set()?)?;
    let exact = exact_values(&problem, &test)?;
    let pred = predict(&net, &plan, &test, exec);
    let rel = relative_error(&pred, &exact)?;
    let out = opts.output_dir.clone().unwrap_or(cfg.output_dir.clone());
    create_dir(&out)?;
    write_error_grid(&out.join(ERROR_GRID), &test, &exact, &pred)?;
    write_summary(
        &out.join(SUMMARY),
        &[
            ("problem".into(), problem.name.clone()),
            ("mode".into(), cfg.mode.name().into()),
            ("epoch".into(), ckpt.state.epoch.to_string()),
            ("test_points".into(), test.len().to_string()),
            ("rel".into(), num(rel)),
        ],
    )?;
    Ok(rel)
}

/// Derivative check of the network described by `cfg` (freshly initialised).
pub fn gradcheck_config(cfg: &RunConfig, points: usize, seed: u64) -> Result<GradReport> {
    let net = FfmNetwork::init(cfg.network_config()?)?;
    gradcheck(&net, points, 200, seed)
}

/// Exact-solution residuals for the named problems (all built-ins when
/// empty) in every normalization mode.
pub fn residualcheck_all(problems: &[String], n: usize, seed: u64) -> Result<Vec<ResidualReport>> {
    let names: Vec<String> = if problems.is_empty() {
        PROBLEM_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        problems.to_vec()
    };
    let mut out = Vec::new();
    for name in &names {
        let p = builtin(name)?;
        for mode in Mode::ALL {
            out.push(residualcheck(&p, mode, n, seed)?);
        }
    }
    Ok(out)
}
