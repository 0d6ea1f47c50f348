//! Versioned text checkpoints.
//!
//! Layout (one record per line, every `f64` written as the 16 hex digits of
//! its bit pattern so values round-trip exactly):
//!
//! ```text
//! wave-fpinn checkpoint v1
//! meta <caller-supplied single-line text, e.g. the run configuration>
//! network <NetworkConfig as JSON>
//! seed <u64>
//! epoch <completed epochs>
//! params <n>
//! <n lines: parameter>
//! adam <step> <n>
//! <n lines: first moment, second moment>
//! losses <k>
//! <k lines: epoch lr pde bc ic_value ic_velocity data total>
//! rel <r>
//! <r lines: epoch rel>
//! initial_rel <f64 | none>
//! end
//! ```
//!
//! Wall-clock timings are not stored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::loss::LossBreakdown;
use crate::network::{FfmNetwork, NetworkConfig};
use crate::optim::AdamState;
use crate::train::{EpochRecord, TrainHistory, TrainState};

const MAGIC: &str = "wave-fpinn checkpoint v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: String,
    pub seed: u64,
    pub state: TrainState,
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn unhex(s: &str) -> Result<f64> {
    if s.len() != 16 {
        return Err(bad(format!("expected 16 hex digits, got `{s}`")));
    }
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|_| bad(format!("invalid hex float `{s}`")))
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let st = &self.state;
        let mut out = String::new();
        let cfg = serde_json::to_string(st.net.config()).expect("network config serializes");
        // writing into a String cannot fail
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "meta {}", self.meta.replace('\n', " "));
        let _ = writeln!(out, "network {cfg}");
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "epoch {}", st.epoch);
        let _ = writeln!(out, "params {}", st.net.params().len());
        for p in st.net.params() {
            let _ = writeln!(out, "{}", hex(*p));
        }
        let _ = writeln!(out, "adam {} {}", st.adam.step, st.adam.m.len());
        for (m, v) in st.adam.m.iter().zip(&st.adam.v) {
            let _ = writeln!(out, "{} {}", hex(*m), hex(*v));
        }
        let h = &st.history;
        let _ = writeln!(out, "losses {}", h.losses.len());
        for r in &h.losses {
            let l = &r.loss;
            let vals = [r.lr, l.pde, l.bc, l.ic_value, l.ic_velocity, l.data, l.total];
            let _ = write!(out, "{}", r.epoch);
            for v in vals {
                let _ = write!(out, " {}", hex(v));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "rel {}", h.rel.len());
        for (e, r) in &h.rel {
            let _ = writeln!(out, "{e} {}", hex(*r));
        }
        match h.initial_rel {
            Some(r) => {
                let _ = writeln!(out, "initial_rel {}", hex(r));
            }
            None => out.push_str("initial_rel none\n"),
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(format!("truncated before {what}")));
        if next("header")? != MAGIC {
            return Err(bad("not a version 1 checkpoint"));
        }
        let meta = field(next("meta")?, "meta")?.to_string();
        let config: NetworkConfig = serde_json::from_str(field(next("network")?, "network")?)
            .map_err(|e| bad(format!("network config: {e}")))?;
        let seed = parse_num(field(next("seed")?, "seed")?)?;
        let epoch = parse_num(field(next("epoch")?, "epoch")?)?;
        let n: usize = parse_num(field(next("params")?, "params")?)?;
        let mut params = Vec::with_capacity(n);
        for _ in 0..n {
            params.push(unhex(next("parameter")?)?);
        }
        let net = FfmNetwork::from_params(config, params)?;

        let adam_head: Vec<&str> = field(next("adam")?, "adam")?.split(' ').collect();
        let [step, na] = adam_head[..] else {
            return Err(bad("adam header needs a step and a length"));
        };
        let (step, na): (u64, usize) = (parse_num(step)?, parse_num(na)?);
        if na != n {
            return Err(bad(format!("adam moments have length {na}, parameters {n}")));
        }
        let mut adam = AdamState::new(n);
        adam.step = step;
        for i in 0..n {
            let (m, v) = next("moments")?
                .split_once(' ')
                .ok_or_else(|| bad("moment line needs two values"))?;
            adam.m[i] = unhex(m)?;
            adam.v[i] = unhex(v)?;
        }

        let mut history = TrainHistory::default();
        let k: usize = parse_num(field(next("losses")?, "losses")?)?;
        for _ in 0..k {
            let row: Vec<&str> = next("loss row")?.split(' ').collect();
            if row.len() != 8 {
                return Err(bad("loss rows have 8 fields"));
            }
            let v: Vec<f64> = row[1..].iter().map(|s| unhex(s)).collect::<Result<_>>()?;
            history.losses.push(EpochRecord {
                epoch: parse_num(row[0])?,
                lr: v[0],
                loss: LossBreakdown {
                    pde: v[1],
                    bc: v[2],
                    ic_value: v[3],
                    ic_velocity: v[4],
                    data: v[5],
                    total: v[6],
                },
            });
        }
        let r: usize = parse_num(field(next("rel")?, "rel")?)?;
        for _ in 0..r {
            let (e, v) = next("rel row")?
                .split_once(' ')
                .ok_or_else(|| bad("rel rows have 2 fields"))?;
            history.rel.push((parse_num(e)?, unhex(v)?));
        }
        history.initial_rel = match field(next("initial_rel")?, "initial_rel")? {
            "none" => None,
            s => Some(unhex(s)?),
        };
        if next("end")? != "end" {
            return Err(bad("missing end marker"));
        }
        Ok(Checkpoint {
            meta,
            seed,
            state: TrainState {
                net,
                adam,
                epoch,
                history,
            },
        })
    }

    /// Writes via a temporary file and a rename, so an interrupted write
    /// never replaces the previous checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_text()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn field<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| bad(format!("expected `{key} ...`, found `{line}`")))
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| bad(format!("invalid integer `{s}`")))
}
