//! Real-argument Bessel functions of orders 0 and 1 and the outgoing Hankel
//! functions built from them.
//!
//! Three regimes are used:
//!
//! * `z < SERIES_MAX`: ascending power series,
//! * `SERIES_MAX <= z < ASYMPTOTIC_MIN`: Miller backward recurrence for `J_n`
//!   normalised by `J_0 + 2 sum J_2k = 1`, with `Y_0`, `Y_1` from the Neumann
//!   series over the same sequence,
//! * `z >= ASYMPTOTIC_MIN`: Hankel asymptotic expansion summed to its
//!   smallest term.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex value type used throughout the solver.
pub type ComplexValue = Complex64;

pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Upper end of the power-series regime.
pub const SERIES_MAX: f64 = 2.0;
/// Lower end of the asymptotic-expansion regime.
pub const ASYMPTOTIC_MIN: f64 = 25.0;

const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;
const PI: f64 = std::f64::consts::PI;

/// `J0, J1, Y0, Y1` evaluated at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselSet {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl BesselSet {
    #[inline]
    pub fn h0(&self) -> Complex64 {
        Complex64::new(self.j0, self.y0)
    }

    #[inline]
    pub fn h1(&self) -> Complex64 {
        Complex64::new(self.j1, self.y1)
    }
}

/// Evaluates all four functions at `z > 0`. This is the single entry point the
/// kernel code uses, so the backend can be swapped here.
pub fn bessel_set(z: f64) -> Result<BesselSet> {
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::domain("bessel_set", format!("z = {z} must be finite and > 0")));
    }
    Ok(bessel_set_unchecked(z))
}

#[inline]
pub(crate) fn bessel_set_unchecked(z: f64) -> BesselSet {
    if z < SERIES_MAX {
        series(z)
    } else if z < ASYMPTOTIC_MIN {
        miller(z)
    } else {
        asymptotic(z)
    }
}

/// `J_order(z)` for `order` in {0, 1} and `z >= 0`.
pub fn bessel_j(order: u32, z: f64) -> Result<f64> {
    check_order("bessel_j", order)?;
    if !z.is_finite() || z < 0.0 {
        return Err(Error::domain("bessel_j", format!("z = {z} must be finite and >= 0")));
    }
    if z == 0.0 {
        return Ok(if order == 0 { 1.0 } else { 0.0 });
    }
    let b = bessel_set_unchecked(z);
    Ok(if order == 0 { b.j0 } else { b.j1 })
}

/// `Y_order(z)` for `order` in {0, 1} and `z > 0`.
pub fn bessel_y(order: u32, z: f64) -> Result<f64> {
    check_order("bessel_y", order)?;
    let b = bessel_set(z).map_err(|_| {
        Error::domain("bessel_y", format!("z = {z} must be finite and > 0"))
    })?;
    Ok(if order == 0 { b.y0 } else { b.y1 })
}

/// `H^(1)_order(z) = J_order(z) + i Y_order(z)`.
pub fn hankel1(order: u32, z: f64) -> Result<ComplexValue> {
    check_order("hankel1", order)?;
    let b = bessel_set(z)?;
    Ok(if order == 0 { b.h0() } else { b.h1() })
}

fn check_order(func: &'static str, order: u32) -> Result<()> {
    if order > 1 {
        return Err(Error::domain(func, format!("order {order} not supported (0 or 1)")));
    }
    Ok(())
}

fn series(z: f64) -> BesselSet {
    let q = 0.25 * z * z;
    let log_half = (0.5 * z).ln();

    // J0, Y0 share the (q^m / m!^2) terms; J1, Y1 share (q^m / (m! (m+1)!)).
    let mut t0 = 1.0;
    let mut t1 = 1.0;
    let mut j0 = 1.0;
    let mut j1 = 1.0;
    let mut y0_tail = 0.0;
    let mut harmonic = 0.0;
    // psi(1) + psi(2) = -2 gamma + 1
    let mut y1_tail = 1.0 - 2.0 * EULER_GAMMA;
    for m in 1..60 {
        let mf = m as f64;
        t0 *= -q / (mf * mf);
        t1 *= -q / (mf * (mf + 1.0));
        harmonic += 1.0 / mf;
        let harmonic_next = harmonic + 1.0 / (mf + 1.0);
        j0 += t0;
        j1 += t1;
        y0_tail -= harmonic * t0;
        y1_tail += (harmonic + harmonic_next - 2.0 * EULER_GAMMA) * t1;
        if t0.abs() < 1e-18 && t1.abs() < 1e-18 {
            break;
        }
    }
    let j1 = 0.5 * z * j1;
    let y0 = FRAC_2_PI * ((log_half + EULER_GAMMA) * j0 + y0_tail);
    let y1 = -FRAC_2_PI / z + FRAC_2_PI * log_half * j1 - 0.5 * z * y1_tail / PI;
    BesselSet { j0, j1, y0, y1 }
}

fn miller(z: f64) -> BesselSet {
    // Start well above z so that J_start is negligible at double precision.
    let start = 2 * ((z as usize + 48) / 2);
    let two_over_z = 2.0 / z;

    let mut j_next = 0.0; // J_{m+1}
    let mut j_cur = 1e-280; // J_m
    let mut norm = 0.0;
    let mut sum_y0 = 0.0;
    let mut sum_y1 = 0.0;
    let mut j_odd_above = 0.0; // J_{2k+1} seen on the way down
    let mut j1 = 0.0;

    let mut m = start;
    loop {
        if m % 2 == 0 {
            if m > 0 {
                let kf = (m / 2) as f64;
                let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
                norm += 2.0 * j_cur;
                sum_y0 += sign * j_cur / kf;
                // J_{2k-1} is not known yet; add its part when m - 1 is reached.
                sum_y1 -= sign * j_odd_above / kf;
            } else {
                norm += j_cur;
            }
        } else {
            // m = 2k - 1, contributes to the k = (m + 1) / 2 term.
            let k = m.div_ceil(2);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum_y1 += sign * j_cur / k as f64;
            j_odd_above = j_cur;
            if m == 1 {
                j1 = j_cur;
            }
        }
        if m == 0 {
            break;
        }
        let j_prev = (m as f64) * two_over_z * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        m -= 1;
        if j_cur.abs() > 1e250 {
            let s = 1e-250;
            j_cur *= s;
            j_next *= s;
            norm *= s;
            sum_y0 *= s;
            sum_y1 *= s;
            j_odd_above *= s;
            j1 *= s;
        }
    }
    let j0 = j_cur / norm;
    let j1 = j1 / norm;
    let sum_y0 = sum_y0 / norm;
    let sum_y1 = sum_y1 / norm;
    let log_term = (0.5 * z).ln() + EULER_GAMMA;
    let y0 = FRAC_2_PI * log_term * j0 - 2.0 * FRAC_2_PI * sum_y0;
    let y1 = -FRAC_2_PI * j0 / z + FRAC_2_PI * log_term * j1 + FRAC_2_PI * sum_y1;
    BesselSet { j0, j1, y0, y1 }
}

/// Hankel expansion `P_nu`, `Q_nu` for nu in {0, 1}.
fn asymptotic_pq(nu2x4: f64, z: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (nu2x4 - odd * odd) / (k as f64 * 8.0 * z);
        let mag = term.abs();
        if mag > last {
            break;
        }
        last = mag;
        // term index k: even -> P with sign (-1)^(k/2), odd -> Q with sign (-1)^((k-1)/2)
        let contribution = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 0 {
            p += contribution;
        } else {
            q += contribution;
        }
        if mag < 1e-18 {
            break;
        }
    }
    (p, q)
}

fn asymptotic(z: f64) -> BesselSet {
    let amp = (FRAC_2_PI / z).sqrt();
    let (s, c) = z.sin_cos();
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    // chi0 = z - pi/4, chi1 = z - 3pi/4
    let (cos0, sin0) = ((c + s) * r2, (s - c) * r2);
    let (cos1, sin1) = ((s - c) * r2, -(s + c) * r2);
    let (p0, q0) = asymptotic_pq(0.0, z);
    let (p1, q1) = asymptotic_pq(4.0, z);
    BesselSet {
        j0: amp * (p0 * cos0 - q0 * sin0),
        y0: amp * (p0 * sin0 + q0 * cos0),
        j1: amp * (p1 * cos1 - q1 * sin1),
        y1: amp * (p1 * sin1 + q1 * cos1),
    }
}
