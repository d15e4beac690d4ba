//! Vector-valued Allen-Cahn `∂_t u = Δu + (1 - |u|²)u` on the torus.
//!
//! One Strang step is `u ↦ S_L(τ/2) S_N(τ) S_L(τ/2) u` with the heat flow
//! `S_L` applied component-wise and the closed-form nonlinear flow `S_N`
//! applied node-wise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::potential::{flow_factor, flow_increment, ModifiedPotential};
use crate::spectral::{
    check_step, dirichlet_energy, dissipation_quadratic, forward_transform, heat_propagate,
    HeatMultiplier, ScalarField, SpectralError, SpectralState, TorusGrid, MAX_DIM,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("a vector field needs at least one component")]
    NoComponents,
    #[error("components live on different grids")]
    GridMismatch,
    #[error("expected vectors of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("initial magnitude must be finite and nonnegative, got {0}")]
    BadMagnitude(f64),
}

/// `m` scalar components sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self, VectorError> {
        let first = components.first().ok_or(VectorError::NoComponents)?;
        if components.iter().any(|c| c.grid() != first.grid()) {
            return Err(VectorError::GridMismatch);
        }
        Ok(VectorField { components })
    }

    pub fn zeros(grid: &TorusGrid, m: usize) -> Self {
        assert!(m >= 1, "vector fields need m >= 1");
        VectorField {
            components: vec![ScalarField::zeros(grid); m],
        }
    }

    /// Spatially constant field equal to `value` everywhere.
    pub fn constant(grid: &TorusGrid, value: &[f64]) -> Self {
        assert!(!value.is_empty(), "vector fields need m >= 1");
        VectorField {
            components: value.iter().map(|&v| ScalarField::constant(grid, v)).collect(),
        }
    }

    /// Samples `f` at every node; `f` must return `m` values.
    pub fn from_fn(grid: &TorusGrid, m: usize, f: impl Fn([f64; MAX_DIM]) -> Vec<f64>) -> Self {
        let mut field = VectorField::zeros(grid, m);
        for j in 0..grid.len() {
            let v = f(grid.node(j));
            assert_eq!(v.len(), m);
            field.set(j, &v);
        }
        field
    }

    pub fn grid(&self) -> &TorusGrid {
        self.components[0].grid()
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn at(&self, node: usize) -> Vec<f64> {
        self.components.iter().map(|c| c.values()[node]).collect()
    }

    pub fn set(&mut self, node: usize, value: &[f64]) {
        for (c, &v) in self.components.iter_mut().zip(value) {
            c.values_mut()[node] = v;
        }
    }

    pub fn norm_sq_at(&self, node: usize) -> f64 {
        self.components.iter().map(|c| c.values()[node].powi(2)).sum()
    }

    fn map_components(
        &self,
        f: impl Fn(&ScalarField) -> Result<ScalarField, SpectralError>,
    ) -> Result<VectorField, SpectralError> {
        Ok(VectorField {
            components: self.components.iter().map(f).collect::<Result<_, _>>()?,
        })
    }

    /// Component-wise heat flow `e^{tΔ}`.
    pub fn heat(&self, t: f64) -> Result<VectorField, VectorError> {
        Ok(self.map_components(|c| heat_propagate(c, t))?)
    }

    /// Node-wise nonlinear flow `S_N(t)`.
    pub fn nonlinear(&self, t: f64) -> VectorField {
        let mut out = self.clone();
        let len = self.grid().len();
        for j in 0..len {
            let factor = flow_factor(self.norm_sq_at(j), t);
            for c in out.components.iter_mut() {
                c.values_mut()[j] *= factor;
            }
        }
        out
    }

    /// Cell-weighted `ℓ²` distance `sqrt(w Σ_j |u(x_j) - v(x_j)|²)`.
    pub fn l2_distance(&self, other: &VectorField) -> f64 {
        let sum: f64 = self
            .components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)))
            .sum();
        (self.grid().cell_volume() * sum).sqrt()
    }
}

/// Step parameters for the vector model. Any `τ > 0` is admissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorSplitConfig {
    pub tau: f64,
    pub steps: usize,
    pub m: usize,
}

impl VectorSplitConfig {
    pub fn validate(&self) -> Result<(), VectorError> {
        check_step(self.tau)?;
        ModifiedPotential::new(self.tau)?;
        if self.m == 0 {
            return Err(VectorError::NoComponents);
        }
        Ok(())
    }
}

/// Exact solution of `w' = (1 - |w|²)w` at time `t`:
/// `e^t w / sqrt((e^{2t}-1)|w|² + 1)`.
pub fn nonlinear_propagate_vec(w: &[f64], t: f64) -> Vec<f64> {
    let norm_sq: f64 = w.iter().map(|x| x * x).sum();
    let factor = flow_factor(norm_sq, t);
    w.iter().map(|x| x * factor).collect()
}

/// Result of one Strang step. `half` is `ũ^n = S_L(τ/2)u^n`.
#[derive(Debug, Clone)]
pub struct VectorStep {
    pub half: VectorField,
    pub next: VectorField,
}

pub fn strang_step_vec(u: &VectorField, tau: f64) -> Result<VectorStep, VectorError> {
    check_step(tau)?;
    let half = u.heat(0.5 * tau)?;
    let next = half.nonlinear(tau).heat(0.5 * tau)?;
    Ok(VectorStep { half, next })
}

/// `steps` Strang steps with adjacent half heat steps merged into one.
///
/// Algebraically identical to repeated [`strang_step_vec`]; the state stays
/// in Fourier space between steps.
pub fn evolve_vec(u: &VectorField, tau: f64, steps: usize) -> Result<VectorField, VectorError> {
    check_step(tau)?;
    if steps == 0 {
        return Ok(u.clone());
    }
    for c in u.components() {
        if let Some((index, value)) = c.first_non_finite() {
            return Err(SpectralError::NonFinite { index, value }.into());
        }
    }
    let half = HeatMultiplier::new(u.grid(), 0.5 * tau);
    let full = HeatMultiplier::new(u.grid(), tau);
    let mut state = SpectralState::new(u.components());
    state.apply(&half);
    for step in 0..steps {
        let mut values = state.physical();
        let len = values[0].len();
        for j in 0..len {
            let norm_sq: f64 = values.iter().map(|c| c[j] * c[j]).sum();
            let factor = flow_increment(norm_sq, tau);
            for c in values.iter_mut() {
                c[j] *= factor;
            }
        }
        state.add_increment(&values);
        state.apply(if step + 1 == steps { &half } else { &full });
    }
    VectorField::new(state.into_fields())
}

/// `G(w)` from the modified energy; depends on `w` only through `|w|²`.
pub fn g_potential_vec(w: &[f64], tau: f64) -> Result<f64, VectorError> {
    let g = ModifiedPotential::new(tau)?;
    Ok(g.value(w.iter().map(|x| x * x).sum()))
}

/// `∇G(w) = w/τ - e^τ w / (τ sqrt((e^{2τ}-1)|w|² + 1))`.
pub fn g_gradient_vec(w: &[f64], tau: f64) -> Result<Vec<f64>, VectorError> {
    let g = ModifiedPotential::new(tau)?;
    let phi = g.gradient_factor(w.iter().map(|x| x * x).sum());
    Ok(w.iter().map(|x| phi * x).collect())
}

/// Additive constant `¼(2π)^d` that aligns `Ẽ` with the standard energy.
pub fn energy_offset(grid: &TorusGrid) -> f64 {
    0.25 * grid.volume()
}

/// Modified energy `Ẽ(ũ)` at `ũ = S_L(τ/2)u_pre`, plus `¼(2π)^d`.
///
/// Takes the pre-half-step state; the half step is performed here.
pub fn modified_energy_vec(u_pre: &VectorField, tau: f64) -> Result<f64, VectorError> {
    let g = ModifiedPotential::new(tau)?;
    let mut quadratic = 0.0;
    for c in u_pre.components() {
        quadratic += dissipation_quadratic(&forward_transform(c)?, tau)?;
    }
    let half = u_pre.heat(0.5 * tau)?;
    let potential: f64 = (0..half.grid().len()).map(|j| g.value(half.norm_sq_at(j))).sum();
    let grid = u_pre.grid();
    Ok(quadratic / (2.0 * tau) + grid.cell_volume() * potential + energy_offset(grid))
}

/// `∫ ½|∇u|² + ¼(|u|² - 1)² dx`.
pub fn standard_energy_vec(u: &VectorField) -> Result<f64, VectorError> {
    let mut dirichlet = 0.0;
    for c in u.components() {
        dirichlet += dirichlet_energy(&forward_transform(c)?);
    }
    let potential: f64 = (0..u.grid().len())
        .map(|j| 0.25 * (u.norm_sq_at(j) - 1.0).powi(2))
        .sum();
    Ok(dirichlet + u.grid().cell_volume() * potential)
}

/// `max_j |u(x_j)|`.
pub fn sup_magnitude(u: &VectorField) -> f64 {
    (0..u.grid().len())
        .map(|j| u.norm_sq_at(j))
        .fold(0.0, f64::max)
        .sqrt()
}

/// `G(u) - G(v) + |v-u|²/(2τ) + ⟨∇G(u), v-u⟩`; nonnegative by concavity.
pub fn concavity_slack_vec(u: &[f64], v: &[f64], tau: f64) -> Result<f64, VectorError> {
    if u.len() != v.len() {
        return Err(VectorError::LengthMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let grad = g_gradient_vec(u, tau)?;
    let diff: Vec<f64> = v.iter().zip(u).map(|(a, b)| a - b).collect();
    let inner: f64 = grad.iter().zip(&diff).map(|(a, b)| a * b).sum();
    let dist_sq: f64 = diff.iter().map(|x| x * x).sum();
    Ok(g_potential_vec(u, tau)? - g_potential_vec(v, tau)? + dist_sq / (2.0 * tau) + inner)
}

/// `-⟨∇G(u), v-u⟩ ≤ G(u) - G(v) + |v-u|²/(2τ)` with slack tolerance `1e-10`.
pub fn concavity_inequality_check_vec(u: &[f64], v: &[f64], tau: f64) -> Result<bool, VectorError> {
    Ok(concavity_slack_vec(u, v, tau)? >= -1e-10)
}

/// Node-wise i.i.d. directions at fixed `magnitude`.
///
/// Each node draws `v` with components uniform on `[-1, 1)` and sets
/// `u = magnitude · v/|v|`, or `0` when the draw is exactly zero.
pub fn random_direction_ic(
    grid: &TorusGrid,
    m: usize,
    magnitude: f64,
    seed: u64,
) -> Result<VectorField, VectorError> {
    if !(magnitude.is_finite() && magnitude >= 0.0) {
        return Err(VectorError::BadMagnitude(magnitude));
    }
    if m == 0 {
        return Err(VectorError::NoComponents);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = VectorField::zeros(grid, m);
    let mut draw = vec![0.0; m];
    for j in 0..grid.len() {
        for x in draw.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let norm = draw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            let scaled: Vec<f64> = draw.iter().map(|x| magnitude * x / norm).collect();
            field.set(j, &scaled);
        }
    }
    Ok(field)
}

/// `amplitude · (cos x sin y, sin x cos y)` normalized to sup magnitude `amplitude`.
///
/// Needs `d ≥ 2`; extra axes are ignored.
pub fn trig_ic(grid: &TorusGrid, amplitude: f64) -> Result<VectorField, VectorError> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(VectorError::BadMagnitude(amplitude));
    }
    if grid.dim() < 2 {
        return Err(SpectralError::InvalidGrid {
            dim: grid.dim(),
            n: grid.n(),
        }
        .into());
    }
    let raw = VectorField::from_fn(grid, 2, |x| {
        vec![x[0].cos() * x[1].sin(), x[0].sin() * x[1].cos()]
    });
    rescale(raw, amplitude)
}

fn rescale(raw: VectorField, amplitude: f64) -> Result<VectorField, VectorError> {
    let sup = sup_magnitude(&raw);
    if sup == 0.0 {
        return Ok(raw);
    }
    let scale = amplitude / sup;
    let components = raw
        .into_components()
        .into_iter()
        .map(|c| {
            let grid = c.grid().clone();
            ScalarField::new(grid, c.into_values().into_iter().map(|v| v * scale).collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    VectorField::new(components)
}

/// Wavevectors of the deterministic smooth data; modes past `dim` are dropped.
const SMOOTH_MODES: [[i64; 3]; 12] = [
    [1, 0, 1],
    [0, 1, 2],
    [2, -1, 0],
    [1, 3, -1],
    [-4, 2, 1],
    [3, 5, 2],
    [6, -3, -2],
    [-2, 7, 3],
    [9, 4, -1],
    [-11, 8, 2],
    [5, -14, 4],
    [16, 12, -3],
];

/// Deterministic band-limited data, rescaled so that `sup_x |u(x)| = amplitude`.
///
/// Component `i` is `Σ_k |k|^{-1/2} cos(k·x + φ_{ik})` over a fixed set of
/// wavevectors with `|k|_∞ ≤ 16`; the phases depend on `i`.
pub fn smooth_ic(grid: &TorusGrid, m: usize, amplitude: f64) -> Result<VectorField, VectorError> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(VectorError::BadMagnitude(amplitude));
    }
    if m == 0 {
        return Err(VectorError::NoComponents);
    }
    let dim = grid.dim();
    let raw = VectorField::from_fn(grid, m, |x| {
        (0..m)
            .map(|i| {
                SMOOTH_MODES
                    .iter()
                    .enumerate()
                    .filter_map(|(p, k)| {
                        let k = &k[..dim];
                        let k_sq: i64 = k.iter().map(|v| v * v).sum();
                        if k_sq == 0 {
                            return None;
                        }
                        let phase = 0.7 * (i as f64 + 1.0) * (p as f64 + 1.0);
                        let arg: f64 = k.iter().zip(&x).map(|(&ka, xa)| ka as f64 * xa).sum();
                        Some((arg + phase).cos() / (k_sq as f64).sqrt().sqrt())
                    })
                    .sum()
            })
            .collect()
    });
    rescale(raw, amplitude)
}
