//! Brute-force RK4 integrators for the pointwise nonlinear flows.
//!
//! These are deliberately naive: fixed steps, plain row-major arrays and no
//! linear algebra beyond products, so they share no code with the closed-form
//! propagators they check.

/// Fixed-step classical RK4 settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Substeps per unit of time; a run to time `t` uses `ceil(t · rate)` steps.
    pub substeps_per_unit_time: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            substeps_per_unit_time: 1e4,
        }
    }
}

impl OracleConfig {
    pub fn substeps(&self, t: f64) -> usize {
        ((t * self.substeps_per_unit_time).ceil() as usize).max(1)
    }
}

fn rk4(y0: &[f64], t: f64, cfg: &OracleConfig, rhs: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    assert!(t >= 0.0 && t.is_finite(), "oracle time must be finite and nonnegative");
    if t == 0.0 {
        return y0.to_vec();
    }
    let steps = cfg.substeps(t);
    let h = t / steps as f64;
    let axpy = |y: &[f64], a: f64, k: &[f64]| -> Vec<f64> {
        y.iter().zip(k).map(|(y, k)| y + a * k).collect()
    };
    let mut y = y0.to_vec();
    for _ in 0..steps {
        let k1 = rhs(&y);
        let k2 = rhs(&axpy(&y, 0.5 * h, &k1));
        let k3 = rhs(&axpy(&y, 0.5 * h, &k2));
        let k4 = rhs(&axpy(&y, h, &k3));
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// RK4 solution of `u' = (1 - |u|²)u` at time `t`.
pub fn integrate_vector_ode(a: &[f64], t: f64, cfg: &OracleConfig) -> Vec<f64> {
    rk4(a, t, cfg, |u| {
        let s = 1.0 - u.iter().map(|x| x * x).sum::<f64>();
        u.iter().map(|x| s * x).collect()
    })
}

fn matmul(a: &[f64], b: &[f64], m: usize, transpose_b: bool) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = (0..m)
                .map(|k| a[i * m + k] * if transpose_b { b[j * m + k] } else { b[k * m + j] })
                .sum();
        }
    }
    out
}

/// RK4 solution of `U' = U - U Uᵀ U` at time `t`; `a` is row-major `m×m`.
pub fn integrate_matrix_ode(a: &[f64], m: usize, t: f64, cfg: &OracleConfig) -> Vec<f64> {
    assert_eq!(a.len(), m * m, "matrix must have m² entries");
    rk4(a, t, cfg, |u| {
        let uut = matmul(u, u, m, true);
        let uutu = matmul(&uut, u, m, false);
        u.iter().zip(&uutu).map(|(x, y)| x - y).collect()
    })
}
