use std::fmt::Write as _;
use std::path::Path;

use super::HarnessError;

pub const TRACE_HEADER: &str = "step,time,energy_standard,energy_modified,delta_e,sup_norm,dissipation_ok";

/// Relative slack allowed before a rise in `Ẽ` counts as a dissipation failure.
pub const DISSIPATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub energy_standard: f64,
    pub energy_modified: f64,
    pub delta_e: f64,
    pub sup_norm: f64,
    pub dissipation_ok: bool,
}

/// `true` unless `current` exceeds `previous` by more than the relative tolerance.
pub fn dissipates(previous: f64, current: f64) -> bool {
    current <= previous + DISSIPATION_TOLERANCE * previous.abs()
}

/// Per-step energies, appended as a trajectory advances.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    rows: Vec<TraceRow>,
}

impl EnergyTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row; the dissipation flag compares against the previous row.
    pub fn record(&mut self, step: usize, time: f64, energy_standard: f64, energy_modified: f64, sup_norm: f64) {
        let dissipation_ok = self
            .rows
            .last()
            .is_none_or(|prev| dissipates(prev.energy_modified, energy_modified));
        self.rows.push(TraceRow {
            step,
            time,
            energy_standard,
            energy_modified,
            delta_e: (energy_modified - energy_standard).abs(),
            sup_norm,
            dissipation_ok,
        });
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    /// Steps whose dissipation flag is false.
    pub fn dissipation_failures(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| !r.dissipation_ok).map(|r| r.step).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{}",
                r.step, r.time, r.energy_standard, r.energy_modified, r.delta_e, r.sup_norm, r.dissipation_ok
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_csv()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self, HarnessError> {
        let bad = |line: usize, why: &str| HarnessError::Validation(format!("trace line {line}: {why}"));
        let mut lines = text.lines();
        if lines.next() != Some(TRACE_HEADER) {
            return Err(bad(1, "unexpected header"));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(bad(i + 2, "expected 7 columns"));
            }
            let float = |k: usize| cols[k].parse::<f64>().map_err(|_| bad(i + 2, "bad number"));
            rows.push(TraceRow {
                step: cols[0].parse().map_err(|_| bad(i + 2, "bad step"))?,
                time: float(1)?,
                energy_standard: float(2)?,
                energy_modified: float(3)?,
                delta_e: float(4)?,
                sup_norm: float(5)?,
                dissipation_ok: cols[6].parse().map_err(|_| bad(i + 2, "bad flag"))?,
            });
        }
        Ok(EnergyTrace { rows })
    }
}
