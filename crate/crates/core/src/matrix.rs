//! Matrix-valued Allen-Cahn `∂_t U = ΔU + U - U Uᵀ U` on the torus.
//!
//! The heat flow acts entry-wise. The nonlinear flow
//! `S_N(t)A = ((e^{2t}-1)AAᵀ + I)^{-1/2} e^t A` shares the singular vectors of
//! `A`, so it is applied as the scalar map `σ ↦ e^tσ / sqrt((e^{2t}-1)σ² + 1)`
//! on singular values and the inverse square root is never formed.

use std::f64::consts::PI;

use log::warn;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{flow_increment, ModifiedPotential};
use crate::spectral::{
    check_step, dissipation_quadratic, forward_transform, HeatMultiplier, ScalarField,
    SpectralError, SpectralState, TorusGrid, MAX_DIM,
};
use crate::vector::{VectorError, VectorField};

/// Step bound for modified-energy dissipation: `m e^τ(e^{2τ}-1) ≤ 0.43`.
pub const THRESHOLD_BOUND: f64 = 0.43;

/// Pivots at or below this are treated as singular by the projection scheme.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("matrix size must be at least 1")]
    ZeroSize,
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite matrix entry {value}")]
    NonFinite { value: f64 },
    #[error("SVD did not converge")]
    SvdFailed,
    #[error("step bound violated: m e^τ(e^{{2τ}}-1) = {value} > {bound}")]
    Threshold { value: f64, bound: f64 },
    #[error("Frobenius norm {norm} exceeds sqrt(m) = {limit}")]
    OutsideBall { norm: f64, limit: f64 },
    #[error("matrix at node {node} (x = {x:?}) is singular: σ_min = {sigma_min}")]
    SingularNode {
        node: usize,
        x: [f64; MAX_DIM],
        sigma_min: f64,
    },
    #[error("polar data needs d = 2 and m = 2, got d = {dim}, m = {m}")]
    UnsupportedPolar { dim: usize, m: usize },
}

/// A field of `m×m` matrices; entry `(i, j)` is component `i·m + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    m: usize,
    entries: VectorField,
}

impl MatrixField {
    pub fn new(m: usize, entries: Vec<ScalarField>) -> Result<Self, MatrixError> {
        if m == 0 {
            return Err(MatrixError::ZeroSize);
        }
        if entries.len() != m * m {
            return Err(MatrixError::LengthMismatch {
                expected: m * m,
                got: entries.len(),
            });
        }
        Ok(MatrixField {
            m,
            entries: VectorField::new(entries)?,
        })
    }

    pub fn zeros(grid: &TorusGrid, m: usize) -> Self {
        MatrixField {
            m,
            entries: VectorField::zeros(grid, m * m),
        }
    }

    /// Constant field; `value` is row-major.
    pub fn constant(grid: &TorusGrid, m: usize, value: &[f64]) -> Self {
        assert_eq!(value.len(), m * m);
        MatrixField {
            m,
            entries: VectorField::constant(grid, value),
        }
    }

    /// Samples `f`, which returns a row-major `m×m` matrix, at every node.
    pub fn from_fn(grid: &TorusGrid, m: usize, f: impl Fn([f64; MAX_DIM]) -> Vec<f64>) -> Self {
        MatrixField {
            m,
            entries: VectorField::from_fn(grid, m * m, f),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.entries.grid()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entries(&self) -> &[ScalarField] {
        self.entries.components()
    }

    /// The entries viewed as an `m²`-component vector field.
    pub fn as_vector(&self) -> &VectorField {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<ScalarField> {
        self.entries.into_components()
    }

    /// Row-major matrix at a node.
    pub fn at(&self, node: usize) -> Vec<f64> {
        self.entries.at(node)
    }

    pub fn set(&mut self, node: usize, value: &[f64]) {
        self.entries.set(node, value)
    }

    pub fn frobenius_at(&self, node: usize) -> f64 {
        self.entries.norm_sq_at(node).sqrt()
    }

    /// Entry-wise heat flow.
    pub fn heat(&self, t: f64) -> Result<MatrixField, MatrixError> {
        Ok(MatrixField {
            m: self.m,
            entries: self.entries.heat(t)?,
        })
    }

    /// Node-wise `S_N(t)`, parallel over nodes.
    pub fn nonlinear(&self, t: f64) -> Result<MatrixField, MatrixError> {
        let values: Vec<Vec<f64>> = self.entries().iter().map(|c| c.values().to_vec()).collect();
        let increments = nonlinear_increments(&values, self.m, t)?;
        let mut out = self.clone();
        for (node, inc) in increments.iter().enumerate() {
            let next: Vec<f64> = self.at(node).iter().zip(inc).map(|(x, d)| x + d).collect();
            out.set(node, &next);
        }
        Ok(out)
    }

    /// Cell-weighted `ℓ²` distance with the Frobenius norm pointwise.
    pub fn l2_distance(&self, other: &MatrixField) -> f64 {
        self.entries.l2_distance(&other.entries)
    }
}

/// `A = L diag(σ) Rᵀ` with `σ` sorted descending.
#[derive(Debug, Clone)]
pub struct SingularData {
    pub left: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub right: DMatrix<f64>,
}

impl SingularData {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.with_values(|s| s)
    }

    /// `L diag(f(σ_i)) Rᵀ`.
    pub fn with_values(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let diag = DMatrix::from_diagonal(&self.singular_values.iter().map(|&s| f(s)).collect::<Vec<_>>().into());
        &self.left * diag * self.right.transpose()
    }
}

fn to_matrix(a: &[f64], m: usize) -> Result<DMatrix<f64>, MatrixError> {
    if a.len() != m * m {
        return Err(MatrixError::LengthMismatch {
            expected: m * m,
            got: a.len(),
        });
    }
    if let Some(&value) = a.iter().find(|v| !v.is_finite()) {
        return Err(MatrixError::NonFinite { value });
    }
    Ok(DMatrix::from_row_slice(m, m, a))
}

fn to_row_major(a: &DMatrix<f64>) -> Vec<f64> {
    a.transpose().as_slice().to_vec()
}

/// SVD of a row-major `m×m` matrix.
pub fn singular_data(a: &[f64], m: usize) -> Result<SingularData, MatrixError> {
    let mat = to_matrix(a, m)?;
    // nalgebra's bidiagonal SVD loses up to ~1e-7 on clustered singular values,
    // which is exactly the near-equilibrium regime; faer stays at roundoff.
    let svd = faer::Mat::<f64>::from_fn(m, m, |r, c| mat[(r, c)])
        .svd()
        .map_err(|_| MatrixError::SvdFailed)?;
    let (left, values, right) = (svd.U(), svd.S(), svd.V());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    Ok(SingularData {
        left: DMatrix::from_fn(m, m, |r, c| left[(r, order[c])]),
        singular_values: order.iter().map(|&i| values[i]).collect(),
        right: DMatrix::from_fn(m, m, |r, c| right[(r, order[c])]),
    })
}

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `S_N(t)A - A` through the singular values; small for small `t`.
fn nonlinear_increment(a: &[f64], m: usize, t: f64) -> Result<Vec<f64>, MatrixError> {
    let svd = singular_data(a, m)?;
    Ok(to_row_major(&svd.with_values(|s| s * flow_increment(s * s, t))))
}

/// Per-node increments; `values` holds the `m²` entry arrays.
fn nonlinear_increments(values: &[Vec<f64>], m: usize, t: f64) -> Result<Vec<Vec<f64>>, MatrixError> {
    let len = values[0].len();
    (0..len)
        .into_par_iter()
        .map(|node| {
            let a: Vec<f64> = values.iter().map(|c| c[node]).collect();
            nonlinear_increment(&a, m, t)
        })
        .collect()
}

/// Exact solution of `U' = U - U Uᵀ U` at time `t` from a row-major `A`.
pub fn nonlinear_propagate_mat(a: &[f64], m: usize, t: f64) -> Result<Vec<f64>, MatrixError> {
    let inc = nonlinear_increment(a, m, t)?;
    Ok(a.iter().zip(&inc).map(|(x, d)| x + d).collect())
}

/// What to do when `m e^τ(e^{2τ}-1)` exceeds the dissipation bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdPolicy {
    /// Refuse to step.
    Enforce,
    /// Step anyway and log a warning.
    #[default]
    Warn,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCheck {
    pub satisfied: bool,
    /// `bound - value`; negative when violated.
    pub margin: f64,
    pub value: f64,
}

/// `m e^τ(e^{2τ}-1)` against an arbitrary bound.
pub fn threshold_check_with_bound(tau: f64, m: usize, bound: f64) -> ThresholdCheck {
    let value = m as f64 * tau.exp() * (2.0 * tau).exp_m1();
    ThresholdCheck {
        satisfied: value <= bound,
        margin: bound - value,
        value,
    }
}

pub fn threshold_check(tau: f64, m: usize) -> ThresholdCheck {
    threshold_check_with_bound(tau, m, THRESHOLD_BOUND)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixSplitConfig {
    pub tau: f64,
    pub steps: usize,
    pub m: usize,
    pub threshold_policy: ThresholdPolicy,
    pub threshold_bound: f64,
}

impl MatrixSplitConfig {
    pub fn new(tau: f64, steps: usize, m: usize) -> Self {
        MatrixSplitConfig {
            tau,
            steps,
            m,
            threshold_policy: ThresholdPolicy::default(),
            threshold_bound: THRESHOLD_BOUND,
        }
    }

    /// Validates `τ` and `m` and applies the threshold policy.
    pub fn validate(&self) -> Result<ThresholdCheck, MatrixError> {
        check_step(self.tau)?;
        ModifiedPotential::new(self.tau)?;
        if self.m == 0 {
            return Err(MatrixError::ZeroSize);
        }
        let check = threshold_check_with_bound(self.tau, self.m, self.threshold_bound);
        if !check.satisfied {
            match self.threshold_policy {
                ThresholdPolicy::Enforce => {
                    return Err(MatrixError::Threshold {
                        value: check.value,
                        bound: self.threshold_bound,
                    })
                }
                ThresholdPolicy::Warn => warn!(
                    "m e^τ(e^2τ-1) = {:.4} exceeds {}; modified-energy dissipation is not guaranteed",
                    check.value, self.threshold_bound
                ),
                ThresholdPolicy::Ignore => {}
            }
        }
        Ok(check)
    }
}

/// Result of one Strang step. `half` is `Ũ^n = S_L(τ/2)U^n`.
#[derive(Debug, Clone)]
pub struct MatrixStep {
    pub half: MatrixField,
    pub next: MatrixField,
}

fn enforce(tau: f64, m: usize, policy: ThresholdPolicy) -> Result<(), MatrixError> {
    check_step(tau)?;
    let check = threshold_check(tau, m);
    if policy == ThresholdPolicy::Enforce && !check.satisfied {
        return Err(MatrixError::Threshold {
            value: check.value,
            bound: THRESHOLD_BOUND,
        });
    }
    Ok(())
}

/// One Strang step. Under [`ThresholdPolicy::Enforce`] a step above the bound is refused.
pub fn strang_step_mat(u: &MatrixField, tau: f64, policy: ThresholdPolicy) -> Result<MatrixStep, MatrixError> {
    enforce(tau, u.m(), policy)?;
    let half = u.heat(0.5 * tau)?;
    let next = half.nonlinear(tau)?.heat(0.5 * tau)?;
    Ok(MatrixStep { half, next })
}

/// `steps` Strang steps with merged half heat steps, state kept in Fourier space.
pub fn evolve_mat(
    u: &MatrixField,
    tau: f64,
    steps: usize,
    policy: ThresholdPolicy,
) -> Result<MatrixField, MatrixError> {
    enforce(tau, u.m(), policy)?;
    if steps == 0 {
        return Ok(u.clone());
    }
    for c in u.entries() {
        if let Some((index, value)) = c.first_non_finite() {
            return Err(SpectralError::NonFinite { index, value }.into());
        }
    }
    let m = u.m();
    let half = HeatMultiplier::new(u.grid(), 0.5 * tau);
    let full = HeatMultiplier::new(u.grid(), tau);
    let mut state = SpectralState::new(u.entries());
    state.apply(&half);
    for step in 0..steps {
        let mut values = state.physical();
        let increments = nonlinear_increments(&values, m, tau)?;
        for (node, inc) in increments.iter().enumerate() {
            for (c, d) in values.iter_mut().zip(inc) {
                c[node] = *d;
            }
        }
        state.add_increment(&values);
        state.apply(if step + 1 == steps { &half } else { &full });
    }
    MatrixField::new(m, state.into_fields())
}

/// `⟨G(A), I⟩_F = Σ_i g(σ_i²)`.
pub fn g_potential_mat(a: &[f64], m: usize, tau: f64) -> Result<f64, MatrixError> {
    let g = ModifiedPotential::new(tau)?;
    let svd = singular_data(a, m)?;
    Ok(svd.singular_values.iter().map(|s| g.value(s * s)).sum())
}

/// Additive constant `(m/4)(2π)^d` reported with `Ẽ`.
pub fn energy_offset_mat(grid: &TorusGrid, m: usize) -> f64 {
    0.25 * m as f64 * grid.volume()
}

/// Modified energy at `Ũ = S_L(τ/2)U_pre`, plus `(m/4)(2π)^d`.
pub fn modified_energy_mat(u_pre: &MatrixField, tau: f64) -> Result<f64, MatrixError> {
    let g = ModifiedPotential::new(tau)?;
    let mut quadratic = 0.0;
    for c in u_pre.entries() {
        quadratic += dissipation_quadratic(&forward_transform(c)?, tau)?;
    }
    let half = u_pre.heat(0.5 * tau)?;
    let m = u_pre.m();
    let potential: f64 = (0..half.grid().len())
        .into_par_iter()
        .map(|j| {
            let svd = singular_data(&half.at(j), m)?;
            Ok(svd.singular_values.iter().map(|s| g.value(s * s)).sum::<f64>())
        })
        .collect::<Result<Vec<f64>, MatrixError>>()?
        .iter()
        .sum();
    let grid = u_pre.grid();
    Ok(quadratic / (2.0 * tau) + grid.cell_volume() * potential + energy_offset_mat(grid, m))
}

/// `¼‖AᵀA - I‖_F²` via singular values, `¼Σ(σ_i² - 1)²`.
pub fn orthogonality_potential(a: &[f64], m: usize) -> Result<f64, MatrixError> {
    let svd = singular_data(a, m)?;
    Ok(svd.singular_values.iter().map(|s| 0.25 * (s * s - 1.0).powi(2)).sum())
}

/// `∫ ½‖∇U‖_F² + ¼‖UᵀU - I‖_F² dx`.
pub fn standard_energy_mat(u: &MatrixField) -> Result<f64, MatrixError> {
    let mut dirichlet = 0.0;
    for c in u.entries() {
        dirichlet += crate::spectral::dirichlet_energy(&forward_transform(c)?);
    }
    let m = u.m();
    let potential: f64 = (0..u.grid().len())
        .into_par_iter()
        .map(|j| orthogonality_potential(&u.at(j), m))
        .collect::<Result<Vec<f64>, MatrixError>>()?
        .iter()
        .sum();
    Ok(dirichlet + u.grid().cell_volume() * potential)
}

/// `max_j ‖U(x_j)‖_F`.
pub fn sup_frobenius(u: &MatrixField) -> f64 {
    crate::vector::sup_magnitude(u.as_vector())
}

/// `h(s) = ⟨G(U₀ + sH), I⟩_F`.
pub fn taylor_h(u0: &[f64], h: &[f64], m: usize, tau: f64, s: f64) -> Result<f64, MatrixError> {
    let phi: Vec<f64> = u0.iter().zip(h).map(|(a, b)| a + s * b).collect();
    g_potential_mat(&phi, m, tau)
}

/// `h'(0) = Tr(U₀Hᵀ)/τ - (e^τ/τ) Tr((I + (e^{2τ}-1)U₀U₀ᵀ)^{-1/2} U₀ Hᵀ)`.
pub fn taylor_h_prime(u0: &[f64], h: &[f64], m: usize, tau: f64) -> Result<f64, MatrixError> {
    let g = ModifiedPotential::new(tau)?;
    let grad = singular_data(u0, m)?.with_values(|s| g.gradient_factor(s * s) * s);
    Ok(to_row_major(&grad).iter().zip(h).map(|(a, b)| a * b).sum())
}

/// `h(0) - h(1) + ‖H‖_F²/τ + h'(0)`; nonnegative under the step bound.
pub fn taylor_slack(u0: &[f64], h: &[f64], m: usize, tau: f64) -> Result<f64, MatrixError> {
    let limit = (m as f64).sqrt();
    let tip: Vec<f64> = u0.iter().zip(h).map(|(a, b)| a + b).collect();
    for norm in [frobenius(u0), frobenius(&tip)] {
        if norm > limit * (1.0 + 1e-12) {
            return Err(MatrixError::OutsideBall { norm, limit });
        }
    }
    let check = threshold_check(tau, m);
    if !check.satisfied {
        return Err(MatrixError::Threshold {
            value: check.value,
            bound: THRESHOLD_BOUND,
        });
    }
    let h_sq: f64 = h.iter().map(|x| x * x).sum();
    Ok(taylor_h(u0, h, m, tau, 0.0)? - taylor_h(u0, h, m, tau, 1.0)?
        + h_sq / tau
        + taylor_h_prime(u0, h, m, tau)?)
}

/// `-h'(0) ≤ h(0) - h(1) + ‖H‖_F²/τ` with slack tolerance `1e-10`.
pub fn taylor_inequality_check(u0: &[f64], h: &[f64], m: usize, tau: f64) -> Result<bool, MatrixError> {
    Ok(taylor_slack(u0, h, m, tau)? >= -1e-10)
}

/// Baseline scheme: a full heat step, then node-wise projection `A ↦ LRᵀ`
/// onto the orthogonal group.
pub fn projection_split_step(u: &MatrixField, tau: f64) -> Result<MatrixField, MatrixError> {
    let heated = u.heat(tau)?;
    let m = u.m();
    let grid = u.grid().clone();
    let projected = (0..grid.len())
        .into_par_iter()
        .map(|node| {
            let svd = singular_data(&heated.at(node), m)?;
            let sigma_min = svd.singular_values[m - 1];
            if sigma_min <= SINGULAR_TOLERANCE {
                return Err(MatrixError::SingularNode {
                    node,
                    x: grid.node(node),
                    sigma_min,
                });
            }
            Ok(to_row_major(&svd.with_values(|_| 1.0)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = heated;
    for (node, value) in projected.iter().enumerate() {
        out.set(node, value);
    }
    Ok(out)
}

/// `sign(det U(x_j))` at every node.
pub fn det_sign_field(u: &MatrixField) -> Result<Vec<i8>, MatrixError> {
    let m = u.m();
    (0..u.grid().len())
        .map(|node| {
            let det = to_matrix(&u.at(node), m)?.determinant();
            Ok(if det > 0.0 {
                1
            } else if det < 0.0 {
                -1
            } else {
                0
            })
        })
        .collect()
}

/// The two line-defect initial data on the 2D torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarVariant {
    /// Rotations inside `r < 0.6π + 0.12π sin 6θ`, `α = (π/2) sin(x + y)`.
    Star,
    /// Rotations where `|x| > 0.5π|sin 1.25y| + 0.4π`, `α = y`.
    Stripe,
}

impl PolarVariant {
    pub fn rotation_region(self, x: f64, y: f64) -> bool {
        match self {
            PolarVariant::Star => {
                let (r, theta) = (x.hypot(y), y.atan2(x));
                r < 0.6 * PI + 0.12 * PI * (6.0 * theta).sin()
            }
            PolarVariant::Stripe => x.abs() > 0.5 * PI * (1.25 * y).sin().abs() + 0.4 * PI,
        }
    }

    pub fn angle(self, x: f64, y: f64) -> f64 {
        match self {
            PolarVariant::Star => 0.5 * PI * (x + y).sin(),
            PolarVariant::Stripe => y,
        }
    }
}

/// Rotation `[c, -s; s, c]` inside the variant's region, reflection `[c, s; s, -c]` outside.
pub fn polar_ic(grid: &TorusGrid, variant: PolarVariant) -> Result<MatrixField, MatrixError> {
    if grid.dim() != 2 {
        return Err(MatrixError::UnsupportedPolar { dim: grid.dim(), m: 2 });
    }
    Ok(MatrixField::from_fn(grid, 2, |p| {
        let (x, y) = (p[0], p[1]);
        let (s, c) = variant.angle(x, y).sin_cos();
        if variant.rotation_region(x, y) {
            vec![c, -s, s, c]
        } else {
            vec![c, s, s, -c]
        }
    }))
}

/// Node-wise i.i.d. matrices with entries uniform on `[-1, 1)`,
/// rescaled so that `‖U(x)‖_F = radius` wherever the draw is nonzero.
pub fn random_matrix_ic(grid: &TorusGrid, m: usize, radius: f64, seed: u64) -> Result<MatrixField, MatrixError> {
    if m == 0 {
        return Err(MatrixError::ZeroSize);
    }
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(VectorError::BadMagnitude(radius).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = MatrixField::zeros(grid, m);
    let mut draw = vec![0.0; m * m];
    for node in 0..grid.len() {
        for x in draw.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let norm = frobenius(&draw);
        if norm > 0.0 {
            let scaled: Vec<f64> = draw.iter().map(|x| radius * x / norm).collect();
            field.set(node, &scaled);
        }
    }
    Ok(field)
}

/// Outcome of evolving rank-one data `a aᵀ` by the matrix flow, next to the
/// outer product of the vector flow applied to `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneComparison {
    pub matrix_flow: Vec<f64>,
    pub outer_of_vector_flow: Vec<f64>,
    /// Frobenius distance between the two.
    pub discrepancy: f64,
}

/// Exploratory check: does `S_N(t)(a aᵀ)` equal `u uᵀ` with `u = S_N(t)a`?
///
/// It does only for `|a| = 1`; the matrix flow scales `a aᵀ` by
/// `e^t(1 + (e^{2t}-1)|a|⁴)^{-1/2}`, the outer product by
/// `e^{2t}(1 + (e^{2t}-1)|a|²)^{-1}`.
pub fn rank_one_comparison(a: &[f64], t: f64) -> Result<RankOneComparison, MatrixError> {
    let m = a.len();
    if m == 0 {
        return Err(MatrixError::ZeroSize);
    }
    let outer = |v: &[f64]| -> Vec<f64> { v.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect() };
    let matrix_flow = nonlinear_propagate_mat(&outer(a), m, t)?;
    let outer_of_vector_flow = outer(&crate::vector::nonlinear_propagate_vec(a, t));
    let discrepancy = frobenius(
        &matrix_flow
            .iter()
            .zip(&outer_of_vector_flow)
            .map(|(x, y)| x - y)
            .collect::<Vec<_>>(),
    );
    Ok(RankOneComparison {
        matrix_flow,
        outer_of_vector_flow,
        discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rotation(theta: f64) -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        vec![c, -s, s, c]
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let a = [0.3, -2.0, 0.1, 1.5, 0.2, 0.7, -0.4, 0.0, 0.9];
        let svd = singular_data(&a, 3).unwrap();
        assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(svd.singular_values.iter().all(|&s| s >= 0.0));
        let back = to_row_major(&svd.reconstruct());
        assert!(max_diff(&back, &a) <= 1e-12 * (1.0 + frobenius(&a)));
        assert!(singular_data(&[f64::NAN, 0.0, 0.0, 1.0], 2).is_err());
    }

    #[test]
    fn propagator_fixed_points() {
        let q = rotation(0.7);
        for &t in &[0.01, 1.0, 10.0] {
            assert!(max_diff(&nonlinear_propagate_mat(&q, 2, t).unwrap(), &q) < 1e-14);
        }
        assert_eq!(nonlinear_propagate_mat(&[0.0; 9], 3, 2.0).unwrap(), vec![0.0; 9]);
    }

    #[test]
    fn diagonal_data_follows_the_scalar_flow() {
        let out = nonlinear_propagate_mat(&[2.0, 0.0, 0.0, 0.5], 2, 0.3).unwrap();
        let f = |s: f64| 0.3_f64.exp() * s / (((0.6_f64).exp() - 1.0) * s * s + 1.0).sqrt();
        assert_abs_diff_eq!(out[0], f(2.0), epsilon = 1e-14);
        assert_abs_diff_eq!(out[3], f(0.5), epsilon = 1e-14);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn threshold_examples() {
        let c = threshold_check(0.01, 2);
        assert!(c.satisfied);
        assert_abs_diff_eq!(c.value, 0.0408, epsilon = 1e-3);
        assert!(!threshold_check(10.0, 1).satisfied);
        let star = threshold_check(0.0897, 2);
        assert!(star.margin.abs() < 2e-3, "{star:?}");
        let mut cfg = MatrixSplitConfig::new(1.0, 1, 2);
        assert!(cfg.validate().is_ok());
        cfg.threshold_policy = ThresholdPolicy::Enforce;
        assert!(matches!(cfg.validate(), Err(MatrixError::Threshold { .. })));
    }

    #[test]
    fn energies_of_simple_fields() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let q = MatrixField::constant(&grid, 2, &rotation(0.4));
        assert_abs_diff_eq!(standard_energy_mat(&q).unwrap(), 0.0, epsilon = 1e-13);
        let zero = MatrixField::zeros(&grid, 2);
        assert_abs_diff_eq!(standard_energy_mat(&zero).unwrap(), 0.5 * grid.volume(), epsilon = 1e-12);
        let tau = 0.01;
        let g1 = ModifiedPotential::new(tau).unwrap().value(1.0);
        assert_abs_diff_eq!(
            modified_energy_mat(&q, tau).unwrap(),
            grid.volume() * (2.0 * g1 + 0.5),
            epsilon = 1e-11
        );
        assert_abs_diff_eq!(sup_frobenius(&q), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(sup_frobenius(&zero), 0.0);
    }

    #[test]
    fn orthogonal_constant_field_is_fixed() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let q = MatrixField::constant(&grid, 2, &rotation(1.1));
        let next = strang_step_mat(&q, 0.5, ThresholdPolicy::Ignore).unwrap().next;
        assert!(next.l2_distance(&q) < 1e-13);
        let zero = MatrixField::zeros(&grid, 2);
        assert_eq!(strang_step_mat(&zero, 0.5, ThresholdPolicy::Ignore).unwrap().next, zero);
        assert!(strang_step_mat(&q, 0.5, ThresholdPolicy::Enforce).is_err());
    }

    #[test]
    fn fused_evolution_matches_stepping() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let u0 = random_matrix_ic(&grid, 2, 1.2, 9).unwrap();
        let mut u = u0.clone();
        for _ in 0..5 {
            u = strang_step_mat(&u, 0.01, ThresholdPolicy::Warn).unwrap().next;
        }
        let fused = evolve_mat(&u0, 0.01, 5, ThresholdPolicy::Warn).unwrap();
        assert!(fused.l2_distance(&u) < 1e-12);
    }

    #[test]
    fn taylor_examples() {
        let u0 = rotation(0.2);
        assert_abs_diff_eq!(taylor_slack(&u0, &[0.0; 4], 2, 0.05).unwrap(), 0.0, epsilon = 1e-12);
        assert!(matches!(
            taylor_slack(&[2.0, 0.0, 0.0, 0.0], &[0.0; 4], 2, 0.05),
            Err(MatrixError::OutsideBall { .. })
        ));
        assert!(matches!(taylor_slack(&u0, &[0.0; 4], 2, 0.5), Err(MatrixError::Threshold { .. })));
    }

    #[test]
    fn projection_examples() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let d = MatrixField::constant(&grid, 2, &[2.0, 0.0, 0.0, 0.5]);
        let p = projection_split_step(&d, 0.0).unwrap();
        assert!(max_diff(&p.at(5), &[1.0, 0.0, 0.0, 1.0]) < 1e-14);
        let singular = MatrixField::constant(&grid, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            projection_split_step(&singular, 0.1),
            Err(MatrixError::SingularNode { node: 0, .. })
        ));
    }

    #[test]
    fn det_signs() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let rot = MatrixField::constant(&grid, 2, &rotation(0.3));
        assert!(det_sign_field(&rot).unwrap().iter().all(|&s| s == 1));
        let refl = MatrixField::constant(&grid, 2, &[0.6, 0.8, 0.8, -0.6]);
        assert!(det_sign_field(&refl).unwrap().iter().all(|&s| s == -1));
        assert!(det_sign_field(&MatrixField::zeros(&grid, 2)).unwrap().iter().all(|&s| s == 0));
    }

    #[test]
    fn polar_data() {
        let grid = TorusGrid::new(2, 16).unwrap();
        for variant in [PolarVariant::Star, PolarVariant::Stripe] {
            let u = polar_ic(&grid, variant).unwrap();
            for j in 0..grid.len() {
                assert_abs_diff_eq!(u.frobenius_at(j), 2f64.sqrt(), epsilon = 1e-14);
            }
        }
        assert!(PolarVariant::Star.rotation_region(0.0, 0.0));
        assert!(PolarVariant::Stripe.rotation_region(PI, 0.0));
        let origin = grid.flat_index(&[8, 8]);
        assert_eq!(det_sign_field(&polar_ic(&grid, PolarVariant::Star).unwrap()).unwrap()[origin], 1);
        assert!(polar_ic(&TorusGrid::new(1, 16).unwrap(), PolarVariant::Star).is_err());
    }

    #[test]
    fn rank_one_agrees_only_on_the_sphere() {
        let unit = rank_one_comparison(&[0.6, 0.8], 0.7).unwrap();
        assert!(unit.discrepancy < 1e-14);
        let t = 0.7_f64;
        let a = [1.5, 0.0];
        let off = rank_one_comparison(&a, t).unwrap();
        let c = (2.0 * t).exp() - 1.0;
        let matrix_scale = t.exp() / (1.0 + c * 1.5_f64.powi(4)).sqrt();
        let outer_scale = (2.0 * t).exp() / (1.0 + c * 2.25);
        assert_abs_diff_eq!(off.matrix_flow[0], matrix_scale * 2.25, epsilon = 1e-13);
        assert_abs_diff_eq!(off.outer_of_vector_flow[0], outer_scale * 2.25, epsilon = 1e-13);
        assert!(off.discrepancy > 0.03);
    }
}
