//! Run configuration: one TOML file per run, with `section.key=value`
//! overrides applied on top before validation.
//!
//! ```toml
//! problem = "example1_large"
//! mode = "spatial"
//! output_dir = "runs/large-s"
//!
//! [network]
//! hidden_widths = [20, 15, 15, 10]
//! subnet_count = 10
//!
//! [train]
//! epochs = 30000
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EvalSet, SampleCounts};
use crate::loss::LossWeights;
use crate::network::{FirstLayer, NetworkConfig};
use crate::normalize::Mode;
use crate::optim::AdamConfig;
use crate::problems::{builtin, CustomProblemSpec, WaveProblem};
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in problem name, or `custom` together with a `[custom]` table.
    pub problem: String,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub weights: LossWeights,
    /// Overrides the problem's evaluation set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomProblemSpec>,
}

fn default_mode() -> Mode {
    Mode::None
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub hidden_widths: Vec<usize>,
    /// Number of subnetworks; scales default to `1..=subnet_count`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subnet_count: Option<usize>,
    /// Explicit per-subnetwork scales (overrides `subnet_count`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    pub first_layer: FirstLayer,
    pub init_seed: u64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            hidden_widths: NetworkConfig::DEFAULT_WIDTHS.to_vec(),
            subnet_count: None,
            scales: None,
            first_layer: FirstLayer::Fourier,
            init_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    /// Collocation counts; unset values come from the problem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_interior: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_boundary: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_initial: Option<usize>,
    pub test_interval: usize,
    pub lr0: f64,
    pub decay_rate: f64,
    pub decay_interval_epochs: usize,
    pub continuous_decay: bool,
    pub seed: u64,
    pub hole_faces: bool,
    /// Epochs between checkpoints; 0 writes only the final one.
    pub checkpoint_interval: usize,
    pub adam: AdamConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::new(SampleCounts {
            interior: 1,
            boundary: 1,
            initial: 1,
        });
        TrainSection {
            epochs: t.epochs,
            n_interior: None,
            n_boundary: None,
            n_initial: None,
            test_interval: t.test_interval,
            lr0: t.lr0,
            decay_rate: t.decay_rate,
            decay_interval_epochs: t.decay_interval_epochs,
            continuous_decay: t.continuous_decay,
            seed: t.seed,
            hole_faces: t.hole_faces,
            checkpoint_interval: 1000,
            adam: t.adam,
        }
    }
}

impl RunConfig {
    pub fn for_problem(problem: &str) -> Self {
        RunConfig {
            problem: problem.to_string(),
            mode: default_mode(),
            output_dir: default_output(),
            network: NetworkSection::default(),
            train: TrainSection::default(),
            weights: LossWeights::default(),
            eval: None,
            custom: None,
        }
    }

    /// Parses TOML text, applies `key=value` overrides (dotted keys address
    /// tables), and validates the result.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.problem()?;
        self.weights.validate()?;
        self.network_config()?.validate()?;
        self.train_config()?.validate()
    }

    pub fn problem(&self) -> Result<WaveProblem> {
        match (&self.custom, self.problem.as_str()) {
            (Some(spec), "custom") => spec.build(),
            (None, "custom") => Err(Error::Config(
                "problem = \"custom\" needs a [custom] table".into(),
            )),
            (Some(_), other) => Err(Error::Config(format!(
                "a [custom] table requires problem = \"custom\", not `{other}`"
            ))),
            (None, name) => builtin(name),
        }
    }

    pub fn network_config(&self) -> Result<NetworkConfig> {
        let problem = self.problem()?;
        let n = &self.network;
        let scales = match (&n.scales, n.subnet_count) {
            (Some(s), Some(q)) if s.len() != q => {
                return Err(Error::Config(format!(
                    "network.scales has {} entries but network.subnet_count is {q}",
                    s.len()
                )))
            }
            (Some(s), _) => s.clone(),
            (None, q) => {
                let q = q.unwrap_or(problem.defaults.subnets);
                (1..=q).map(|a| a as f64).collect()
            }
        };
        Ok(NetworkConfig {
            input_dim: problem.dim() + 1,
            hidden_widths: n.hidden_widths.clone(),
            scales,
            first_layer: n.first_layer,
            init_seed: n.init_seed,
        })
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let problem = self.problem()?;
        let t = &self.train;
        let d = problem.defaults.counts;
        Ok(TrainConfig {
            epochs: t.epochs,
            counts: SampleCounts {
                interior: t.n_interior.unwrap_or(d.interior),
                boundary: t.n_boundary.unwrap_or(d.boundary),
                initial: t.n_initial.unwrap_or(d.initial),
            },
            test_interval: t.test_interval,
            lr0: t.lr0,
            decay_rate: t.decay_rate,
            decay_interval_epochs: t.decay_interval_epochs,
            continuous_decay: t.continuous_decay,
            adam: t.adam,
            seed: t.seed,
            hole_faces: t.hole_faces,
        })
    }

    pub fn eval_set(&self) -> Result<EvalSet> {
        match &self.eval {
            Some(e) => Ok(e.clone()),
            None => Ok(self.problem()?.defaults.eval_set),
        }
    }

    /// The same configuration with every problem-dependent default written
    /// out explicitly.
    pub fn effective(&self) -> Result<Self> {
        let mut out = self.clone();
        let net = self.network_config()?;
        let train = self.train_config()?;
        out.network.subnet_count = Some(net.scales.len());
        out.network.scales = Some(net.scales);
        out.train.n_interior = Some(train.counts.interior);
        out.train.n_boundary = Some(train.counts.boundary);
        out.train.n_initial = Some(train.counts.initial);
        out.eval = Some(self.eval_set()?);
        Ok(out)
    }
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    // TOML literal if it parses as one, bare string otherwise
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| {
        Error::Config(format!("override `{spec}` has an empty key"))
    })?;
    let mut table = doc;
    for p in parts {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in override `{key}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse("problem = \"example1_small\"\nepochz = 3\n", &[]).unwrap_err();
        assert!(err.to_string().contains("epochz"), "{err}");
        let err = RunConfig::parse(
            "problem = \"example1_small\"\n[train]\nlr = 0.1\n",
            &[],
        )
        .unwrap_err();
        assert!(err.to_string().contains("lr"), "{err}");
    }

    #[test]
    fn overrides_apply_before_validation() {
        let cfg = RunConfig::parse(
            "problem = \"example1_small\"\n",
            &["train.epochs=5".into(), "mode=spatial".into(), "network.subnet_count=3".into()],
        )
        .unwrap();
        assert_eq!(cfg.train.epochs, 5);
        assert_eq!(cfg.mode, Mode::Spatial);
        assert_eq!(cfg.network_config().unwrap().scales, vec![1.0, 2.0, 3.0]);
        assert!(RunConfig::parse("problem = \"example1_small\"\n", &["train.epochs=0".into()]).is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = RunConfig::for_problem("example3_porous").effective().unwrap();
        let back = RunConfig::parse(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_problem() {
        let err = RunConfig::parse("problem = \"nope\"\n", &[]).unwrap_err();
        assert!(matches!(err, Error::UnknownProblem(_)));
    }
}
