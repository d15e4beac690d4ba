use std::fmt::Write as _;

use log::info;

use super::config::RunConfig;
use super::field::Field;
use super::HarnessError;

/// The reference solution uses the finest ladder step divided by this.
pub const REFERENCE_REFINEMENT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub ladder: Vec<f64>,
    pub reference_tau: f64,
    pub t_final: f64,
    /// Cell-weighted `ℓ²` error of each ladder entry against the reference.
    pub errors: Vec<f64>,
    /// `log₂(e_k / e_{k+1})` for consecutive ladder entries.
    pub rates: Vec<f64>,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# reference tau = finest tau / {REFERENCE_REFINEMENT} = {:e}, t_final = {:e}\ntau,steps,error,rate\n",
            self.reference_tau, self.t_final
        );
        for (k, (&tau, &err)) in self.ladder.iter().zip(&self.errors).enumerate() {
            let rate = if k == 0 { String::new() } else { format!("{:e}", self.rates[k - 1]) };
            writeln!(out, "{tau:e},{},{err:e},{rate}", steps_for(self.t_final, tau).unwrap_or(0))
                .expect("writing to a String cannot fail");
        }
        out
    }
}

/// `t_final / tau` when it is an integer to relative `1e-9`.
pub fn steps_for(t_final: f64, tau: f64) -> Option<usize> {
    let ratio = t_final / tau;
    let steps = ratio.round();
    ((ratio - steps).abs() <= 1e-9 * ratio.max(1.0) && steps >= 1.0).then_some(steps as usize)
}

/// `1/3200, 1/6400, …` style ladder: `coarsest · 2^{-k}` for `k < levels`.
pub fn halving_ladder(coarsest: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| coarsest / 2f64.powi(k as i32)).collect()
}

fn validate_ladder(ladder: &[f64], t_final: f64) -> Result<(), HarnessError> {
    let bad = |msg: String| Err(HarnessError::Validation(msg));
    if ladder.len() < 2 {
        return bad("the ladder needs at least two step sizes".into());
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        return bad(format!("t_final must be positive, got {t_final}"));
    }
    for pair in ladder.windows(2) {
        if (pair[0] / pair[1] - 2.0).abs() > 1e-12 {
            return bad(format!("ladder must halve at every level: {} then {}", pair[0], pair[1]));
        }
    }
    let reference = ladder[ladder.len() - 1] / REFERENCE_REFINEMENT as f64;
    for &tau in ladder.iter().chain(std::iter::once(&reference)) {
        if !(tau.is_finite() && tau > 0.0) || steps_for(t_final, tau).is_none() {
            return bad(format!("t_final = {t_final} is not a multiple of tau = {tau}"));
        }
    }
    Ok(())
}

/// Errors of each ladder step against a run at `finest / 64`, from the
/// configured initial condition.
pub fn convergence_study(cfg: &RunConfig, ladder: &[f64], t_final: f64) -> Result<ConvergenceReport, HarnessError> {
    validate_ladder(ladder, t_final)?;
    let grid = cfg.grid()?;
    let u0 = Field::initial(cfg, &grid)?;
    let reference_tau = ladder[ladder.len() - 1] / REFERENCE_REFINEMENT as f64;
    let policy = cfg.threshold_policy;
    let steps = |tau: f64| steps_for(t_final, tau).expect("validated");
    info!("reference run: tau = {reference_tau:e}, {} steps", steps(reference_tau));
    let reference = u0.evolve(reference_tau, steps(reference_tau), policy)?;
    let mut errors = Vec::with_capacity(ladder.len());
    for &tau in ladder {
        let approx = u0.evolve(tau, steps(tau), policy)?;
        errors.push(approx.l2_distance(&reference)?);
        info!("tau = {tau:e}: error {:e}", errors[errors.len() - 1]);
    }
    let rates = errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    Ok(ConvergenceReport {
        ladder: ladder.to_vec(),
        reference_tau,
        t_final,
        errors,
        rates,
    })
}
