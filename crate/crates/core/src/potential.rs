//! Scalar building blocks shared by the vector and matrix models.
//!
//! Both models reduce their nonlinear flow and modified potential to
//! functions of a squared magnitude `λ` (`|w|²` for vectors, `σ_i²` for the
//! singular values of a matrix).

use crate::spectral::{check_step, SpectralError};

/// Factor `f` with `S_N(t)w = f · w`, i.e. `e^t / sqrt((e^{2t}-1)λ + 1)`.
///
/// Written as `1 / sqrt(λ(1 - e^{-2t}) + e^{-2t})`, which cannot overflow.
pub fn flow_factor(norm_sq: f64, t: f64) -> f64 {
    let decay = (-2.0 * t).exp();
    1.0 / (norm_sq * -(-2.0 * t).exp_m1() + decay).sqrt()
}

/// `flow_factor(λ, t) - 1` without cancellation for small `t`.
pub fn flow_increment(norm_sq: f64, t: f64) -> f64 {
    let s = (norm_sq - 1.0) * -(-2.0 * t).exp_m1();
    let root = (1.0 + s).sqrt();
    -s / (root * (1.0 + root))
}

/// Squared magnitude after the nonlinear flow, `e^{2t}λ / ((e^{2t}-1)λ + 1)`.
pub fn flow_norm_sq(norm_sq: f64, t: f64) -> f64 {
    norm_sq * flow_factor(norm_sq, t).powi(2)
}

/// The step-dependent potential
/// `g(λ) = λ/(2τ) - e^τ/(τ(e^{2τ}-1)) · (sqrt(1 + (e^{2τ}-1)λ) - 1)`
/// and its radial derivative, evaluated without the `O(1/τ)` cancellation.
#[derive(Debug, Clone, Copy)]
pub struct ModifiedPotential {
    tau: f64,
    /// `e^{2τ} - 1`
    c: f64,
    /// `e^τ - 1`
    em1: f64,
}

impl ModifiedPotential {
    pub fn new(tau: f64) -> Result<Self, SpectralError> {
        check_step(tau)?;
        let c = (2.0 * tau).exp_m1();
        if !c.is_finite() {
            return Err(SpectralError::NonPositiveStep(tau));
        }
        Ok(ModifiedPotential {
            tau,
            c,
            em1: tau.exp_m1(),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `g(λ)` for `λ ≥ 0`.
    pub fn value(&self, norm_sq: f64) -> f64 {
        let s = (1.0 + self.c * norm_sq).sqrt();
        // g = λ (cλ/(s+1) - 2(e^τ-1)) / (2τ(s+1))
        norm_sq * (self.c * norm_sq / (s + 1.0) - 2.0 * self.em1) / (2.0 * self.tau * (s + 1.0))
    }

    /// `φ(λ)` with `∇_w g(|w|²) = φ(|w|²) w`, i.e. `(1 - e^τ/s)/τ`.
    pub fn gradient_factor(&self, norm_sq: f64) -> f64 {
        let s = (1.0 + self.c * norm_sq).sqrt();
        (self.c * norm_sq / (s + 1.0) - self.em1) / (self.tau * s)
    }
}
