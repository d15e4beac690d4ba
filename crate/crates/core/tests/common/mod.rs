#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use strang_ac::spectral::TorusGrid;

/// Uniform entries rescaled to a norm uniform on `[0, radius]`.
pub fn random_in_ball(rng: &mut ChaCha8Rng, len: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = norm(&v);
    let target = radius * rng.random_range(0.0..=1.0);
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x *= target / norm);
    }
    v
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn identity(m: usize) -> Vec<f64> {
    (0..m * m).map(|k| if k % (m + 1) == 0 { 1.0 } else { 0.0 }).collect()
}

pub fn matmul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    (0..m * m)
        .map(|k| (0..m).map(|l| a[(k / m) * m + l] * b[l * m + k % m]).sum())
        .collect()
}

pub fn transpose(a: &[f64], m: usize) -> Vec<f64> {
    (0..m * m).map(|k| a[(k % m) * m + k / m]).collect()
}

/// Product of three Householder reflections, row-major.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut q = identity(m);
    for _ in 0..3 {
        let v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let h: Vec<f64> = (0..m * m)
            .map(|k| {
                let (i, j) = (k / m, k % m);
                f64::from(u8::from(i == j)) - 2.0 * v[i] * v[j] / vv
            })
            .collect();
        q = matmul(&h, &q, m);
    }
    q
}

/// Second derivative of the trigonometric interpolant on a 1D grid, as a dense matrix.
pub fn laplacian_matrix(grid: &TorusGrid) -> Vec<f64> {
    let n = grid.n();
    let half = (n / 2) as i64;
    let mut lap = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let theta = grid.node(i)[0] - grid.node(j)[0];
            lap[i * n + j] = -(1 - half..half)
                .map(|k| (k * k) as f64 * (k as f64 * theta).cos())
                .sum::<f64>()
                / n as f64;
        }
    }
    lap
}

/// Classical RK4 in time for `u' = Δu + f(u)` on a 1D grid, with `f` acting
/// on the vector of components at one node.
pub fn pde_reference(
    grid: &TorusGrid,
    initial: &[Vec<f64>],
    reaction: &dyn Fn(&[f64]) -> Vec<f64>,
    t: f64,
    substeps: usize,
) -> Vec<Vec<f64>> {
    assert_eq!(grid.dim(), 1);
    let (n, m) = (grid.n(), initial.len());
    let lap = laplacian_matrix(grid);
    let rhs = |u: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = (0..m)
            .map(|c| (0..n).map(|i| (0..n).map(|j| lap[i * n + j] * u[c][j]).sum()).collect())
            .collect();
        for i in 0..n {
            let local: Vec<f64> = (0..m).map(|c| u[c][i]).collect();
            for (c, r) in reaction(&local).into_iter().enumerate() {
                out[c][i] += r;
            }
        }
        out
    };
    let axpy = |u: &[Vec<f64>], k: &[Vec<f64>], h: f64| -> Vec<Vec<f64>> {
        u.iter().zip(k).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + h * y).collect()).collect()
    };
    let mut u = initial.to_vec();
    let h = t / substeps as f64;
    for _ in 0..substeps {
        let k1 = rhs(&u);
        let k2 = rhs(&axpy(&u, &k1, 0.5 * h));
        let k3 = rhs(&axpy(&u, &k2, 0.5 * h));
        let k4 = rhs(&axpy(&u, &k3, h));
        for c in 0..m {
            for i in 0..n {
                u[c][i] += h / 6.0 * (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]);
            }
        }
    }
    u
}

/// Cyclic Jacobi eigen-decomposition of a symmetric row-major matrix:
/// returns `(eigenvalues, eigenvectors as columns)`.
pub fn jacobi_eigen(a: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = identity(m);
    for _sweep in 0..100 {
        let off: f64 = (0..m * m).filter(|k| k / m != k % m).map(|k| a[k] * a[k]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (akp, akq) = (a[k * m + p], a[k * m + q]);
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[p * m + k], a[q * m + k]);
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let (vkp, vkq) = (v[k * m + p], v[k * m + q]);
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..m).map(|i| a[i * m + i]).collect(), v)
}
