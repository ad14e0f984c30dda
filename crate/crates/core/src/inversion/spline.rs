//! Cardinal B-spline basis used to parametrize profile updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ProfileSpec, ProfileValue, SurfaceProfile};

/// Default degree parameter of the cardinal spline.
pub const DEFAULT_KAPPA: u32 = 4;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Value, first and second derivative of the centered cardinal B-spline of
/// degree `kappa` (support `[-(kappa+1)/2, (kappa+1)/2]`).
pub fn spline_phi_derivs(t: f64, kappa: u32) -> ProfileValue {
    let half = 0.5 * (kappa + 1) as f64;
    if t.abs() >= half || kappa == 0 {
        if kappa == 0 && t.abs() < half {
            return ProfileValue { h: 1.0, dh: 0.0, d2h: 0.0 };
        }
        return ProfileValue::ZERO;
    }
    // Even function: evaluate at -|t| where fewer truncated powers are active.
    let sign = if t > 0.0 { -1.0 } else { 1.0 };
    let x = -t.abs();
    let kf = kappa as f64;
    let norm = factorial(kappa);
    let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for j in 0..=kappa + 1 {
        let z = x + half - j as f64;
        if z <= 0.0 {
            break;
        }
        let c = if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(kappa + 1, j) / norm;
        v += c * z.powi(kappa as i32);
        d1 += c * kf * z.powi(kappa as i32 - 1);
        if kappa >= 2 {
            d2 += c * kf * (kf - 1.0) * z.powi(kappa as i32 - 2);
        }
    }
    ProfileValue {
        h: v,
        dh: sign * d1,
        d2h: d2,
    }
}

/// Centered cardinal B-spline of degree `kappa`.
pub fn spline_phi(t: f64, kappa: u32) -> f64 {
    spline_phi_derivs(t, kappa).h
}

/// Basis `phi_i(x) = phi((x - c_i) / step)`, `step = 2R/(M+5)`,
/// `c_i = (i+2) step - R` for `i = 1..M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    pub m: usize,
    pub radius: f64,
    pub kappa: u32,
}

impl SplineBasis {
    pub fn new(m: usize, radius: f64, kappa: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("spline basis needs M >= 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("radius {radius} must be > 0")));
        }
        // support half-width (kappa+1)/2 steps must stay inside (-R, R)
        if !(1..=4).contains(&kappa) {
            return Err(Error::InvalidInput(format!(
                "kappa = {kappa}: basis support leaves (-R, R) unless 1 <= kappa <= 4"
            )));
        }
        Ok(Self { m, radius, kappa })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.radius / (self.m as f64 + 5.0)
    }

    /// Center of basis function `i` (zero-based; the one-based index is `i + 1`).
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 3.0) * self.step() - self.radius
    }

    pub fn eval_basis(&self, i: usize, x1: f64) -> ProfileValue {
        let h = self.step();
        let p = spline_phi_derivs((x1 - self.center(i)) / h, self.kappa);
        ProfileValue {
            h: p.h,
            dh: p.dh / h,
            d2h: p.d2h / (h * h),
        }
    }

    /// `sum_i a_i phi_i(x1)` with derivatives, visiting only basis functions
    /// whose support contains `x1`.
    pub fn eval_sum(&self, coefficients: &[f64], x1: f64) -> ProfileValue {
        let h = self.step();
        let half = 0.5 * (self.kappa + 1) as f64;
        // (x1 - c_i)/h in (-half, half)  <=>  i in (u - half, u + half)
        let u = (x1 + self.radius) / h - 3.0;
        let lo = (u - half).floor().max(0.0) as usize;
        let hi = ((u + half).ceil().max(0.0) as usize).min(self.m.saturating_sub(1));
        let mut acc = ProfileValue::ZERO;
        if u + half < 0.0 {
            return acc;
        }
        for (i, a) in coefficients.iter().enumerate().take(hi + 1).skip(lo) {
            let b = self.eval_basis(i, x1);
            acc.h += a * b.h;
            acc.dh += a * b.dh;
            acc.d2h += a * b.d2h;
        }
        acc
    }
}

/// `h(x1) = sum a_i phi_i(x1)` as a surface profile.
pub fn profile_from_coeffs(basis: &SplineBasis, coefficients: &[f64]) -> Result<SurfaceProfile> {
    if coefficients.len() != basis.m {
        return Err(Error::Dimension(format!(
            "expected {} spline coefficients, got {}",
            basis.m,
            coefficients.len()
        )));
    }
    if coefficients.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidInput("non-finite spline coefficient".into()));
    }
    SurfaceProfile::new(
        ProfileSpec::Spline {
            coefficients: coefficients.to_vec(),
            kappa: basis.kappa,
        },
        basis.radius,
    )
}
