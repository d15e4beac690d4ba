use std::path::{Path, PathBuf};

use log::info;

use super::config::{Model, RunConfig};
use super::field::Field;
use super::snapshot::{read_snapshot, write_snapshot, FORMAT_VERSION};
use super::trace::EnergyTrace;
use super::HarnessError;
use crate::matrix::{MatrixSplitConfig, ThresholdCheck};
use crate::vector::VectorSplitConfig;

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub trace: EnergyTrace,
    pub snapshots: Vec<PathBuf>,
    pub final_field: Field,
    /// Step index of the final state.
    pub final_step: usize,
    /// Present for the matrix model.
    pub threshold: Option<ThresholdCheck>,
}

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:08}.bin"))
}

fn starting_state(cfg: &RunConfig) -> Result<(Field, usize), HarnessError> {
    let grid = cfg.grid()?;
    let Some(path) = &cfg.resume else {
        return Ok((Field::initial(cfg, &grid)?, 0));
    };
    let snap = read_snapshot(path)?;
    let h = &snap.header;
    if h.model != cfg.model || h.d != cfg.d || h.n != cfg.n || h.m != cfg.m {
        return Err(HarnessError::Validation(format!(
            "snapshot {} holds a {} field (d={}, n={}, m={}) that does not match the config",
            path.display(),
            h.model,
            h.d,
            h.n,
            h.m
        )));
    }
    if h.tau != cfg.tau {
        return Err(HarnessError::Validation(format!(
            "snapshot step size {} differs from config tau {}",
            h.tau, cfg.tau
        )));
    }
    Ok((snap.field, h.step))
}

fn metadata(cfg: &RunConfig, field: &Field, start: usize, threshold: Option<&ThresholdCheck>) -> String {
    let mut text = format!(
        "format_version = {FORMAT_VERSION}\nmodel = \"{}\"\nd = {}\nn = {}\nm = {}\ntau = {:e}\nsteps = {}\nstart_step = {start}\nic = \"{}\"\nseed = {}\n",
        cfg.model, cfg.d, cfg.n, cfg.m, cfg.tau, cfg.steps, cfg.ic, cfg.seed
    );
    text += &format!(
        "# constant added to the modified energy: (m/4)(2π)^d for matrices, (1/4)(2π)^d for vectors\nenergy_offset = {:e}\n",
        field.energy_offset()
    );
    if let Some(check) = threshold {
        text += &format!(
            "threshold_policy = \"{}\"\nthreshold_value = {:e}\nthreshold_satisfied = {}\n",
            format!("{:?}", cfg.threshold_policy).to_lowercase(),
            check.value,
            check.satisfied
        );
    }
    text
}

/// Advances one trajectory, recording energies every step and snapshots at the
/// configured cadence (plus the initial and final states).
///
/// Writes `metadata.toml`, `trace.csv` and `snapshot_*.bin` into `out_dir`.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary, HarnessError> {
    cfg.validate()?;
    let threshold = match cfg.model {
        Model::Vector => {
            VectorSplitConfig {
                tau: cfg.tau,
                steps: cfg.steps,
                m: cfg.m,
            }
            .validate()?;
            None
        }
        Model::Matrix => Some(
            MatrixSplitConfig {
                threshold_policy: cfg.threshold_policy,
                ..MatrixSplitConfig::new(cfg.tau, cfg.steps, cfg.m)
            }
            .validate()?,
        ),
    };
    let (mut field, start) = starting_state(cfg)?;
    if let Some((node, value)) = field.first_non_finite() {
        return Err(HarnessError::NonFinite { step: start, node, value });
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| HarnessError::io(&cfg.out_dir, e))?;
    let meta_path = cfg.out_dir.join("metadata.toml");
    std::fs::write(&meta_path, metadata(cfg, &field, start, threshold.as_ref()))
        .map_err(|e| HarnessError::io(&meta_path, e))?;

    let mut trace = EnergyTrace::new();
    let mut snapshots = Vec::new();
    let end = start + cfg.steps;
    for step in start..=end {
        if step > start {
            field = field.step(cfg.tau, cfg.threshold_policy)?;
            if let Some((node, value)) = field.first_non_finite() {
                return Err(HarnessError::NonFinite { step, node, value });
            }
        }
        let standard = field.standard_energy()?;
        let modified = field.modified_energy(cfg.tau)?;
        trace.record(step, step as f64 * cfg.tau, standard, modified, field.sup_norm());
        let cadence = cfg.snapshot_every > 0 && (step - start) % cfg.snapshot_every == 0;
        if step == start || step == end || cadence {
            let path = snapshot_path(&cfg.out_dir, step);
            write_snapshot(&path, &field, cfg.tau, step)?;
            snapshots.push(path);
        }
        if cfg.log_every > 0 && (step - start) % cfg.log_every == 0 {
            info!("step {step}: E = {standard:.10e}, modified E = {modified:.10e}");
        }
    }
    let trace_path = cfg.out_dir.join("trace.csv");
    trace.write_csv(&trace_path)?;
    let failures = trace.dissipation_failures();
    if !failures.is_empty() {
        info!("modified energy increased at {} step(s), first at step {}", failures.len(), failures[0]);
    }
    Ok(RunSummary {
        trace,
        snapshots,
        final_field: field,
        final_step: end,
        threshold,
    })
}
