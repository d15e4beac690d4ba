//! Periodic grid bookkeeping, discrete Fourier transforms and the heat semigroup.
//!
//! The torus is `[-π, π)^d` sampled at `x_j = -π + 2πj/N` on every axis. Fourier
//! coefficients are normalized as
//!
//! ```text
//! û_k = N^{-d} Σ_j u(x_j) e^{-i k·x_j},     k ∈ {-N/2, …, N/2-1}^d
//! ```
//!
//! so that `∫ u v̄ dx ≈ w Σ_j u_j v̄_j = (2π)^d Σ_k û_k conj(v̂_k)` exactly, with
//! `w = (2π/N)^d` the cell volume. Nodes are stored row-major with axis 0
//! slowest-varying; coefficients are stored in the same layout in FFT order
//! (index `j` on an axis carries wavenumber `j` for `j < N/2`, else `j - N`).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub const MAX_DIM: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("unsupported grid: dimension {dim}, {n} points per axis (need 1 <= d <= 3, N even and >= 4)")]
    InvalidGrid { dim: usize, n: usize },
    #[error("field has {got} values, grid expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("propagation time must be finite and nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("time step must be finite and positive, got {0}")]
    NonPositiveStep(f64),
    #[error("fields live on different grids")]
    GridMismatch,
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid on `[-π, π)^d`.
///
/// Cloning is cheap: the wavenumber table and FFT plans are shared.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    k_squared: Arc<[f64]>,
    plans: Arc<Plans>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl Eq for TorusGrid {}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self, SpectralError> {
        if !(1..=MAX_DIM).contains(&dim) || n < 4 || !n.is_multiple_of(2) {
            return Err(SpectralError::InvalidGrid { dim, n });
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        let len = n.pow(dim as u32);
        let mut grid = TorusGrid {
            dim,
            n,
            k_squared: Arc::from(Vec::new()),
            plans: Arc::new(plans),
        };
        let k_squared: Vec<f64> = (0..len)
            .map(|flat| {
                grid.wavevector(flat)
                    .iter()
                    .map(|&k| (k * k) as f64)
                    .sum()
            })
            .collect();
        grid.k_squared = Arc::from(k_squared);
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total node count `N^d`.
    pub fn len(&self) -> usize {
        self.k_squared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Quadrature weight of a single node, `(2π/N)^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Measure of the torus, `(2π)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Per-axis indices of a flat node (unused axes are zero).
    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % self.n;
            rest /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.dim)
            .fold(0, |acc, &i| acc * self.n + (i % self.n))
    }

    /// Physical coordinates of a flat node (unused axes are zero).
    pub fn node(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = -PI + self.spacing() * idx[axis] as f64;
        }
        x
    }

    /// Signed wavenumber carried by FFT-order index `j` on one axis.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Wavevector of a flat coefficient index (unused axes are zero).
    pub fn wavevector(&self, flat: usize) -> [i64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut k = [0; MAX_DIM];
        for axis in 0..self.dim {
            k[axis] = self.wavenumber(idx[axis]);
        }
        k
    }

    /// `|k|²` for every coefficient, FFT order.
    pub fn k_squared(&self) -> &[f64] {
        &self.k_squared
    }

    fn coefficient_index(&self, k: &[i64]) -> usize {
        let n = self.n as i64;
        k.iter()
            .take(self.dim)
            .fold(0, |acc, &ki| acc * self.n + ki.rem_euclid(n) as usize)
    }

    /// Unnormalized multi-dimensional DFT in place, axis by axis.
    fn fft_in_place(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse {
            &self.plans.inverse
        } else {
            &self.plans.forward
        };
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    plan.process_with_scratch(chunk, &mut scratch);
                }
                continue;
            }
            let outer = data.len() / (n * stride);
            for o in 0..outer {
                for i in 0..stride {
                    let base = o * n * stride + i;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, value) in line.iter().enumerate() {
                        data[base + j * stride] = *value;
                    }
                }
            }
        }
    }

    fn check_len(&self, got: usize) -> Result<(), SpectralError> {
        if got != self.len() {
            return Err(SpectralError::LengthMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }

    /// Parity of `Σ_a k_a`, i.e. the phase `e^{iπΣk}` from the `-π` grid offset.
    fn offset_sign(&self, flat: usize) -> f64 {
        let parity: usize = self.multi_index(flat).iter().sum();
        if parity.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Real scalar values on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self, SpectralError> {
        grid.check_len(values.len())?;
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        ScalarField {
            values: vec![0.0; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        ScalarField {
            values: vec![value; grid.len()],
            grid: grid.clone(),
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; MAX_DIM]) -> f64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.node(j))).collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Quadrature `w Σ_j f(x_j)`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `w Σ_j f(x_j)²`.
    pub fn l2_norm_squared(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn first_non_finite(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite())
            .map(|(i, v)| (i, *v))
    }
}

/// Fourier coefficients `û_k` of a real field, FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient for the wavevector `k` (components beyond `dim` ignored,
    /// taken modulo `N`).
    pub fn coefficient(&self, k: &[i64]) -> Complex64 {
        self.coeffs[self.grid.coefficient_index(k)]
    }

    /// `Σ_k |û_k|²`.
    pub fn power(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

pub fn forward_transform(f: &ScalarField) -> Result<SpectralCoeffs, SpectralError> {
    if let Some((index, value)) = f.first_non_finite() {
        return Err(SpectralError::NonFinite { index, value });
    }
    let grid = &f.grid;
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_in_place(&mut data, false);
    let scale = 1.0 / grid.len() as f64;
    for (flat, c) in data.iter_mut().enumerate() {
        *c *= scale * grid.offset_sign(flat);
    }
    Ok(SpectralCoeffs {
        grid: grid.clone(),
        coeffs: data,
    })
}

/// Synthesizes `Σ_k û_k e^{ik·x_j}` and keeps the real part, which projects
/// onto conjugate-symmetric coefficient sets.
pub fn inverse_transform(c: &SpectralCoeffs) -> ScalarField {
    let grid = &c.grid;
    let mut data: Vec<Complex64> = c
        .coeffs
        .iter()
        .enumerate()
        .map(|(flat, v)| v * grid.offset_sign(flat))
        .collect();
    grid.fft_in_place(&mut data, true);
    ScalarField {
        grid: grid.clone(),
        values: data.into_iter().map(|v| v.re).collect(),
    }
}

/// Applies a real, even Fourier multiplier `m(|k|²)`.
pub(crate) fn apply_multiplier(f: &ScalarField, multiplier: impl Fn(f64) -> f64) -> ScalarField {
    let grid = &f.grid;
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_in_place(&mut data, false);
    let scale = 1.0 / grid.len() as f64;
    for (c, &k2) in data.iter_mut().zip(grid.k_squared.iter()) {
        *c *= scale * multiplier(k2);
    }
    grid.fft_in_place(&mut data, true);
    ScalarField {
        grid: grid.clone(),
        values: data.into_iter().map(|v| v.re).collect(),
    }
}

/// Heat multiplier `e^{-t|k|²}` split as `hi + lo`, so repeated application
/// does not accumulate the rounding of `exp` coherently over many steps.
#[derive(Debug, Clone)]
pub(crate) struct HeatMultiplier {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl HeatMultiplier {
    pub(crate) fn new(grid: &TorusGrid, t: f64) -> Self {
        let (hi, lo) = grid
            .k_squared
            .iter()
            .map(|&k2| {
                let x = -t * k2;
                let x_err = (-t).mul_add(k2, -x);
                let hi = x.exp();
                if hi == 0.0 || !hi.is_normal() {
                    return (hi, 0.0);
                }
                (hi, hi * ((x - hi.ln()) + x_err))
            })
            .unzip();
        HeatMultiplier { hi, lo }
    }

    pub(crate) fn apply(&self, coeffs: &mut [Complex64]) {
        for ((c, &hi), &lo) in coeffs.iter_mut().zip(&self.hi).zip(&self.lo) {
            *c = *c * hi + *c * lo;
        }
    }
}

impl TorusGrid {
    /// `N^{-d}` times the DFT of real nodal values, without the offset phase.
    pub(crate) fn analyze(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft_in_place(&mut data, false);
        let scale = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
        data
    }

    /// Inverse of [`TorusGrid::analyze`], keeping the real part.
    pub(crate) fn synthesize(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.fft_in_place(&mut data, true);
        data.into_iter().map(|v| v.re).collect()
    }
}

/// Multi-component state held in Fourier space for long fused runs.
///
/// Each step transforms only the pointwise increment `S_N(u) - u`, which is
/// `O(τ)`, so FFT round-trip error does not compound on the full state.
pub(crate) struct SpectralState {
    grid: TorusGrid,
    coeffs: Vec<Vec<Complex64>>,
}

impl SpectralState {
    pub(crate) fn new(components: &[ScalarField]) -> Self {
        let grid = components[0].grid().clone();
        let coeffs = components.iter().map(|c| grid.analyze(c.values())).collect();
        SpectralState { grid, coeffs }
    }

    pub(crate) fn apply(&mut self, multiplier: &HeatMultiplier) {
        for c in self.coeffs.iter_mut() {
            multiplier.apply(c);
        }
    }

    pub(crate) fn physical(&self) -> Vec<Vec<f64>> {
        self.coeffs.iter().map(|c| self.grid.synthesize(c)).collect()
    }

    pub(crate) fn add_increment(&mut self, increments: &[Vec<f64>]) {
        for (c, inc) in self.coeffs.iter_mut().zip(increments) {
            for (a, b) in c.iter_mut().zip(self.grid.analyze(inc)) {
                *a += b;
            }
        }
    }

    pub(crate) fn into_fields(self) -> Vec<ScalarField> {
        let grid = self.grid;
        self.coeffs
            .iter()
            .map(|c| ScalarField {
                grid: grid.clone(),
                values: grid.synthesize(c),
            })
            .collect()
    }
}

fn check_time(t: f64) -> Result<(), SpectralError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(SpectralError::NegativeTime(t));
    }
    Ok(())
}

pub(crate) fn check_step(tau: f64) -> Result<(), SpectralError> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(SpectralError::NonPositiveStep(tau));
    }
    Ok(())
}

/// Heat semigroup `e^{tΔ}`: multiplies coefficient `k` by `e^{-t|k|²}`.
pub fn heat_propagate(f: &ScalarField, t: f64) -> Result<ScalarField, SpectralError> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(apply_multiplier(f, |k2| (-t * k2).exp()))
}

/// `∫⟨(e^{-τΔ} - 1)ũ, ũ⟩ dx` for `ũ = e^{(τ/2)Δ}u`, evaluated from the
/// coefficients of `u` as `(2π)^d Σ_k (1 - e^{-τ|k|²}) |û_k|²`.
pub fn dissipation_quadratic(coeffs: &SpectralCoeffs, tau: f64) -> Result<f64, SpectralError> {
    check_step(tau)?;
    let sum: f64 = coeffs
        .coeffs
        .iter()
        .zip(coeffs.grid.k_squared.iter())
        .map(|(c, &k2)| -(-tau * k2).exp_m1() * c.norm_sqr())
        .sum();
    Ok(coeffs.grid.volume() * sum)
}

/// `½ ∫ |∇u|² dx = ½ (2π)^d Σ_k |k|² |û_k|²`.
pub fn dirichlet_energy(coeffs: &SpectralCoeffs) -> f64 {
    let sum: f64 = coeffs
        .coeffs
        .iter()
        .zip(coeffs.grid.k_squared.iter())
        .map(|(c, &k2)| k2 * c.norm_sqr())
        .sum();
    0.5 * coeffs.grid.volume() * sum
}
