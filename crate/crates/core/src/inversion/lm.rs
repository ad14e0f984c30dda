//! Tikhonov-regularized Gauss-Newton step with the discrepancy rule for `beta`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Acceptance tolerance of the discrepancy equation, relative to `||r||`.
pub const DISCREPANCY_TOL: f64 = 1e-8;
/// Bisection stops well inside the acceptance tolerance.
const BISECTION_TOL: f64 = 1e-3 * DISCREPANCY_TOL;
const MAX_BISECTIONS: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct LmStep {
    pub delta_a: Vec<f64>,
    pub beta: f64,
    /// Linearized residual `||J delta_a + r||` at the returned step.
    pub linear_residual: f64,
    /// The Gauss-Newton residual already exceeds `rho ||r||`.
    pub discrepancy_unattainable: bool,
}

/// Stacked real system `[Re J; Im J]`, `[Re r; Im r]`.
pub fn stack_real(j: &DMatrix<Complex64>, r: &[Complex64]) -> (DMatrix<f64>, DVector<f64>) {
    let m = j.nrows();
    let a = DMatrix::from_fn(2 * m, j.ncols(), |row, col| {
        if row < m {
            j[(row, col)].re
        } else {
            j[(row - m, col)].im
        }
    });
    let b = DVector::from_fn(2 * m, |row, _| if row < m { r[row].re } else { r[row - m].im });
    (a, b)
}

/// Singular triplets of the stacked system, reduced to what the scalar
/// search needs.
struct Spectrum {
    sigma: Vec<f64>,
    /// `u_i . b`
    coef: Vec<f64>,
    v: DMatrix<f64>,
    /// `||b||^2 - sum coef^2`, the part of `b` outside the range of `U`.
    outside: f64,
}

impl Spectrum {
    fn residual(&self, beta: f64) -> f64 {
        let mut acc = self.outside;
        for (s, c) in self.sigma.iter().zip(&self.coef) {
            let f = if *s == 0.0 { 1.0 } else { beta / (s * s + beta) };
            acc += (f * c) * (f * c);
        }
        acc.max(0.0).sqrt()
    }

    fn step(&self, beta: f64) -> Vec<f64> {
        let mut x = DVector::<f64>::zeros(self.v.nrows());
        for (i, (s, c)) in self.sigma.iter().zip(&self.coef).enumerate() {
            let d = s * s + beta;
            if *s == 0.0 || d == 0.0 {
                continue;
            }
            x -= self.v.column(i) * (s * c / d);
        }
        x.as_slice().to_vec()
    }
}

/// Minimizes `||J da + r||^2 + beta ||da||^2` over real `da`, with `beta`
/// chosen so that `||J da + r|| = rho ||r||`.
pub fn lm_step(jacobian: &DMatrix<Complex64>, r: &[Complex64], rho: f64) -> Result<LmStep> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidInput(format!("rho = {rho} must lie in (0, 1)")));
    }
    if r.len() != jacobian.nrows() {
        return Err(Error::Dimension(format!(
            "residual has {} entries, Jacobian has {} rows",
            r.len(),
            jacobian.nrows()
        )));
    }
    if jacobian.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))
        || r.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::InvalidInput("non-finite Jacobian or residual".into()));
    }
    let cols = jacobian.ncols();
    let (a, b) = stack_real(jacobian, r);
    let rnorm = b.norm();
    if rnorm == 0.0 {
        return Ok(LmStep {
            delta_a: vec![0.0; cols],
            beta: 0.0,
            linear_residual: 0.0,
            discrepancy_unattainable: false,
        });
    }
    let rows = a.nrows();
    let svd = a.svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    let cutoff = sigma_max * f64::EPSILON * (rows.max(cols) as f64);
    let sigma: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|s| if *s > cutoff { *s } else { 0.0 })
        .collect();
    let coef: Vec<f64> = (0..sigma.len()).map(|i| u.column(i).dot(&b)).collect();
    let outside = b.norm_squared() - coef.iter().map(|c| c * c).sum::<f64>();
    let spec = Spectrum {
        sigma,
        coef,
        v: v_t.transpose(),
        outside,
    };
    let target = rho * rnorm;
    let tol = BISECTION_TOL * rnorm;

    let gauss_newton = spec.residual(0.0);
    if gauss_newton > target {
        return Ok(LmStep {
            delta_a: spec.step(0.0),
            beta: 0.0,
            linear_residual: gauss_newton,
            discrepancy_unattainable: true,
        });
    }
    // residual(beta) increases from the Gauss-Newton value to ||r||; bracket in log beta
    let scale = sigma_max.max(f64::MIN_POSITIVE).powi(2);
    let (mut lo, mut hi) = ((scale * 1e-30).ln(), (scale * 1e30).ln());
    let mut beta = scale;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        beta = mid.exp();
        let res = spec.residual(beta);
        if (res - target).abs() <= tol {
            break;
        }
        if res > target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(LmStep {
        delta_a: spec.step(beta),
        beta,
        linear_residual: spec.residual(beta),
        discrepancy_unattainable: false,
    })
}
