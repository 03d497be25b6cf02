//! Result files. Everything is rendered in memory first and written only
//! once the whole run has succeeded.

use std::path::Path;

use flyq_core::optimize::GenerationStats;
use flyq_core::wavepacket::AmplitudeLevel;
use flyq_core::{ControlSchedule, ProbabilityLadder, C64};
use flyq_core::network::SourceDesign;
use serde_json::{Map, Value};

use crate::CliError;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

/// Fields of `diagnostics.json` that vary between identical runs.
pub const VOLATILE_FIELDS: [&str; 2] = ["timestamp_unix", "runtime_seconds"];

#[derive(Debug, Clone, Default)]
pub struct Bundle {
    files: Vec<(String, Vec<u8>)>,
    pub diagnostics: Map<String, Value>,
}

impl Bundle {
    pub fn files(&self) -> &[(String, Vec<u8>)] {
        &self.files
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn push(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn diagnostics_json(&self) -> Vec<u8> {
        let mut s = serde_json::to_vec_pretty(&Value::Object(self.diagnostics.clone())).expect("diagnostics serialize");
        s.push(b'\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes).map_err(io)?;
        }
        std::fs::write(dir.join(DIAGNOSTICS_FILE), self.diagnostics_json()).map_err(io)
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

// shortest round-trip representation, so identical numbers give identical bytes
fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn ladder_csv(ladder: &ProbabilityLadder) -> Vec<u8> {
    csv_bytes(
        &["ell", "probability", "error_estimate"],
        ladder
            .probs
            .iter()
            .zip(&ladder.level_error_estimates)
            .enumerate()
            .map(|(l, (p, e))| vec![l.to_string(), num(*p), num(*e)]),
    )
}

pub fn one_photon_csv(level: &AmplitudeLevel) -> Vec<u8> {
    csv_bytes(
        &["tau", "re", "im"],
        level.grid().iter().zip(level.values()).map(|(t, v)| vec![num(*t), num(v.re), num(v.im)]),
    )
}

/// Rows `(τ1, τ2, re, im)` with `τ1 ≤ τ2`.
pub fn two_photon_csv(level: &AmplitudeLevel) -> Vec<u8> {
    let grid = level.grid();
    let mut rows = Vec::with_capacity(level.values().len());
    level.for_each(|idx, v| rows.push(vec![num(grid[idx[0]]), num(grid[idx[1]]), num(v.re), num(v.im)]));
    csv_bytes(&["tau1", "tau2", "re", "im"], rows)
}

pub fn controls_csv(schedule: &ControlSchedule, grid: &[f64]) -> Vec<u8> {
    csv_bytes(
        &["t", "u_re", "u_im", "epsilon", "gamma"],
        grid.iter().map(|&t| {
            let u: C64 = schedule.drive().eval(t);
            vec![num(t), num(u.re), num(u.im), num(schedule.detuning().eval(t)), num(schedule.coupling().eval(t))]
        }),
    )
}

pub fn design_csv(d: &SourceDesign) -> Vec<u8> {
    csv_bytes(
        &["tau", "nu", "phi", "gamma", "epsilon", "tail_mass"],
        (0..d.times.len()).map(|k| {
            vec![num(d.times[k]), num(d.nu[k]), num(d.phi[k]), num(d.gamma[k]), num(d.epsilon[k]), num(d.tail_mass[k])]
        }),
    )
}

pub fn history_csv(history: &[GenerationStats]) -> Vec<u8> {
    csv_bytes(
        &["generation", "best_so_far", "generation_best", "mean"],
        history
            .iter()
            .map(|h| vec![h.generation.to_string(), num(h.best_so_far), num(h.generation_best), num(h.mean)]),
    )
}

pub fn params_csv(labels: &[String], params: &[f64]) -> Vec<u8> {
    csv_bytes(
        &["index", "parameter", "value"],
        labels.iter().zip(params).enumerate().map(|(k, (l, v))| vec![k.to_string(), l.clone(), num(*v)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_exact_numbers() {
        let bytes = csv_bytes(&["a", "b"], vec![vec![num(0.1), num(1.0 / 3.0)]]);
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("a,b"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn bundle_writes_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = Bundle::default();
        b.push("x.csv", b"a\n1\n".to_vec());
        b.diagnostics.insert("k".into(), Value::from(1));
        b.write(dir.path()).unwrap();
        assert_eq!(std::fs::read(dir.path().join("x.csv")).unwrap(), b"a\n1\n");
        let d: Value = serde_json::from_slice(&std::fs::read(dir.path().join(DIAGNOSTICS_FILE)).unwrap()).unwrap();
        assert_eq!(d["k"], 1);
    }
}
