//! Graded-mesh substitution `omega` clustering nodes at the two corners.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Grading exponent.
pub const GRADING_P: f64 = 4.0;

/// `(v, v', v'')` of the cubic polynomial on `[0, pi]`.
fn v_with_derivs(s: f64) -> (f64, f64, f64) {
    let p = GRADING_P;
    let c3 = 1.0 / p - 0.5;
    let u = (PI - 2.0 * s) / PI;
    let du = -2.0 / PI;
    let v = c3 * u * u * u - u / p + 0.5;
    let dv = (3.0 * c3 * u * u - 1.0 / p) * du;
    let d2v = 6.0 * c3 * u * du * du;
    (v, dv, d2v)
}

/// `v(s) = (1/p - 1/2)((pi - 2s)/pi)^3 + (1/p)(2s - pi)/pi + 1/2` with `p = 4`.
pub fn grading_v(s: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&s) {
        return Err(Error::domain("grading_v", format!("s = {s} outside [0, pi]")));
    }
    Ok(v_with_derivs(s).0)
}

/// Value and first two derivatives of `omega` at one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

fn omega_half(s: f64) -> Grading {
    let p = GRADING_P;
    let (v, dv, d2v) = v_with_derivs(s);
    let (w0, dw0, d2w0) = v_with_derivs(PI - s);
    let (w, dw, d2w) = (w0, -dw0, d2w0);

    let pow = |x: f64, e: f64| if x <= 0.0 { 0.0 } else { x.powf(e) };
    let big_v = pow(v, p);
    let big_w = pow(w, p);
    let dv_p = p * pow(v, p - 1.0) * dv;
    let dw_p = p * pow(w, p - 1.0) * dw;
    let d2v_p = p * (p - 1.0) * pow(v, p - 2.0) * dv * dv + p * pow(v, p - 1.0) * d2v;
    let d2w_p = p * (p - 1.0) * pow(w, p - 2.0) * dw * dw + p * pow(w, p - 1.0) * d2w;

    let sum = big_v + big_w;
    let dsum = dv_p + dw_p;
    let num = dv_p * big_w - big_v * dw_p;
    let dnum = d2v_p * big_w - big_v * d2w_p;
    Grading {
        value: PI * big_v / sum,
        d1: PI * num / (sum * sum),
        d2: PI * (dnum * sum - 2.0 * num * dsum) / (sum * sum * sum),
    }
}

/// `omega(s)` on `[0, 2 pi]` with its first and second derivatives.
pub fn grading_omega_full(s: f64) -> Result<Grading> {
    if !(0.0..=2.0 * PI).contains(&s) {
        return Err(Error::domain("grading_omega", format!("s = {s} outside [0, 2 pi]")));
    }
    if s <= PI {
        Ok(omega_half(s))
    } else {
        let g = omega_half(s - PI);
        Ok(Grading {
            value: g.value + PI,
            ..g
        })
    }
}

/// `(omega(s), omega'(s))` for `s` in `[0, 2 pi]`.
pub fn grading_omega(s: f64) -> Result<(f64, f64)> {
    grading_omega_full(s).map(|g| (g.value, g.d1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v_examples() {
        assert!(grading_v(0.0).unwrap().abs() < 1e-15);
        assert!((grading_v(PI / 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((grading_v(PI).unwrap() - 1.0).abs() < 1e-15);
        assert!(grading_v(-0.1).is_err());
        assert!(grading_v(PI + 1e-9).is_err());
    }

    #[test]
    fn omega_examples() {
        let (w, dw) = grading_omega(0.0).unwrap();
        assert_eq!((w, dw), (0.0, 0.0));
        let (w, _) = grading_omega(PI / 2.0).unwrap();
        assert!((w - PI / 2.0).abs() < 1e-14);
        let (w, dw) = grading_omega(PI).unwrap();
        assert!((w - PI).abs() < 1e-14 && dw.abs() < 1e-12);
        let (w, dw) = grading_omega(2.0 * PI).unwrap();
        assert!((w - 2.0 * PI).abs() < 1e-14 && dw.abs() < 1e-12);
        for i in 0..=50 {
            let s = PI * i as f64 / 50.0;
            let a = grading_omega(s).unwrap().0;
            let b = grading_omega(s + PI).unwrap().0;
            assert!((b - a - PI).abs() < 1e-14);
        }
        assert!(grading_omega(7.0).is_err());
    }

    #[test]
    fn monotone_on_fine_grid() {
        let n = 10_000;
        let mut last = -1.0;
        for i in 0..=n {
            let s = 2.0 * PI * i as f64 / n as f64;
            let g = grading_omega_full(s).unwrap();
            assert!(g.value > last, "not increasing at s = {s}");
            assert!(g.d1 >= 0.0);
            last = g.value;
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for i in 1..40 {
            let s = 2.0 * PI * i as f64 / 40.0 + 0.013;
            let h = 1e-5;
            let g = grading_omega_full(s).unwrap();
            let gp = grading_omega_full(s + h).unwrap();
            let gm = grading_omega_full(s - h).unwrap();
            let d1 = (gp.value - gm.value) / (2.0 * h);
            let d2 = (gp.d1 - gm.d1) / (2.0 * h);
            assert!((d1 - g.d1).abs() < 1e-7 * (1.0 + g.d1.abs()), "s = {s}");
            assert!((d2 - g.d2).abs() < 1e-6 * (1.0 + g.d2.abs()), "s = {s}");
        }
    }
}
