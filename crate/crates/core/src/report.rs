//! Deterministic CSV and text outputs.
//!
//! Numbers are written in Rust's shortest round-trip scientific notation
//! (`1.5e-3`), independent of locale. No file contains wall-clock data, so
//! re-running a seeded job reproduces every file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::SpaceTimePoint;
use crate::normalize::Mode;
use crate::train::TrainHistory;

pub const LOSS_CURVE: &str = "loss_curve.csv";
pub const REL_CURVE: &str = "rel_curve.csv";
pub const ERROR_GRID: &str = "error_grid.csv";
pub const SUMMARY: &str = "summary.txt";

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// One row per epoch: the loss measured before that epoch's update.
pub fn write_loss_curve(path: &Path, history: &TrainHistory) -> Result<()> {
    let header = strings(&["epoch", "loss_total", "loss_pde", "loss_bc", "loss_icv", "loss_icd", "lr"]);
    let rows = history.losses.iter().map(|r| {
        let l = &r.loss;
        vec![
            r.epoch.to_string(),
            num(l.total),
            num(l.pde),
            num(l.bc),
            num(l.ic_value),
            num(l.ic_velocity),
            num(r.lr),
        ]
    });
    write_csv(path, &header, rows)
}

pub fn write_rel_curve(path: &Path, history: &TrainHistory) -> Result<()> {
    let rows = history.rel.iter().map(|(e, r)| vec![e.to_string(), num(*r)]);
    write_csv(path, &strings(&["epoch", "rel"]), rows)
}

/// REL curves of several runs side by side, one column per mode. Epochs
/// missing from a run are left empty.
pub fn write_joined_rel(path: &Path, runs: &[(Mode, &TrainHistory)]) -> Result<()> {
    let mut header = vec!["epoch".to_string()];
    header.extend(runs.iter().map(|(m, _)| m.name().to_string()));
    let mut epochs: Vec<usize> = runs
        .iter()
        .flat_map(|(_, h)| h.rel.iter().map(|r| r.0))
        .collect();
    epochs.sort_unstable();
    epochs.dedup();
    let rows = epochs.into_iter().map(|e| {
        let mut row = vec![e.to_string()];
        for (_, h) in runs {
            row.push(h.rel.iter().find(|r| r.0 == e).map(|r| num(r.1)).unwrap_or_default());
        }
        row
    });
    write_csv(path, &header, rows)
}

/// Point-wise comparison: `x1,..,xd,t,exact,pred,abs_err`.
pub fn write_error_grid(path: &Path, points: &[SpaceTimePoint], exact: &[f64], pred: &[f64]) -> Result<()> {
    let d = points.first().map_or(0, |p| p.x.len());
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.extend(strings(&["t", "exact", "pred", "abs_err"]));
    let rows = points.iter().zip(exact).zip(pred).map(|((p, u), v)| {
        let mut row: Vec<String> = p.x.iter().map(|x| num(*x)).collect();
        row.extend([num(p.t), num(*u), num(*v), num((v - u).abs())]);
        row
    });
    write_csv(path, &header, rows)
}

/// `key: value` lines.
pub fn write_summary(path: &Path, lines: &[(String, String)]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in lines {
        let _ = writeln!(s, "{k}: {v}");
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_rel_history_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(REL_CURVE);
        write_rel_curve(&p, &TrainHistory::default()).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "epoch,rel\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -2.5e-300, 0.1 + 0.2, f64::MAX] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
