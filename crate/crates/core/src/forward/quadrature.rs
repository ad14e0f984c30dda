//! Trigonometric quadrature and differentiation weights on the equidistant
//! parameter grid `t_j = j pi / n`, `j = 0..2n-1`.

use std::f64::consts::PI;

/// Weights `R_j` for `int_0^{2 pi} ln(4 sin^2((t_i - s)/2)) f(s) ds ~ sum_j R_|i-j| f(t_j)`:
/// `R_j = -(2 pi / n) sum_{m=1}^{n-1} cos(m j pi / n) / m - (-1)^j pi / n^2`.
pub fn quad_weights_r(n: usize) -> Vec<f64> {
    assert!(n >= 2, "quadrature needs n >= 2");
    let nf = n as f64;
    (0..2 * n)
        .map(|j| {
            let s: f64 = (1..n)
                .map(|m| (m as f64 * j as f64 * PI / nf).cos() / m as f64)
                .sum();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / nf * s - sign * PI / (nf * nf)
        })
        .collect()
}

/// Weights `W_j` with `-(1/4 pi) int cot((t_i - s)/2) f'(s) ds ~ sum_j W_|i-j| f(t_j)`,
/// i.e. the operator `f -> -|D| f / 2` on the trigonometric interpolant.
pub fn cot_derivative_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let nf = n as f64;
    (0..2 * n)
        .map(|j| {
            let s: f64 = (1..n)
                .map(|m| m as f64 * (m as f64 * j as f64 * PI / nf).cos())
                .sum();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            -(2.0 * s + nf * sign) / (4.0 * nf)
        })
        .collect()
}

/// Entry `(i, j)` of the trigonometric differentiation matrix on `2n` nodes.
#[inline]
pub fn diff_matrix_entry(n: usize, i: usize, j: usize) -> f64 {
    if i == j {
        return 0.0;
    }
    let d = i as f64 - j as f64;
    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
    0.5 * sign / (0.5 * d * PI / n as f64).tan()
}

/// `ln(4 sin^2((t - s)/2))`
#[inline]
pub fn log_kernel(dt: f64) -> f64 {
    let s = (0.5 * dt).sin();
    (4.0 * s * s).ln()
}

/// Trigonometric Lagrange basis on `2n` nodes evaluated at offset `u = t - t_j`.
#[inline]
pub fn trig_lagrange(n: usize, u: f64) -> f64 {
    let half = 0.5 * u;
    let s = half.sin();
    if s.abs() < 1e-14 {
        // u = 0 mod 2 pi
        return 1.0;
    }
    (n as f64 * u).sin() * half.cos() / (2.0 * n as f64 * s)
}
