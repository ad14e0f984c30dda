//! Nyström discretization of the combined-layer boundary integral equation
//! on the closed curve, far-field evaluation and potential evaluation.

mod farfield;
mod kernels;
mod potential;
pub mod quadrature;
mod system;

pub use farfield::{far_field, observation_angles, FarFieldPattern};
pub use kernels::{
    combined_kernel_at, kernel_k, kernel_k1, kernel_k2, kernel_k3, split_kernel, KernelSplit,
};
pub use potential::{potential_eval, PotentialEvaluator};
pub use quadrature::quad_weights_r;
pub use system::{assemble, assemble_with, rhs, AssemblyOptions, Density, ForwardSystem};


use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use num_complex::Complex64;

/// Plane wave `exp(i k x . d)` with `d = (sin theta, -cos theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentWave {
    pub k: f64,
    pub theta: f64,
}

impl IncidentWave {
    pub fn new(k: f64, theta: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidInput(format!("wavenumber {k} must be > 0")));
        }
        let half = std::f64::consts::FRAC_PI_2;
        if !(theta > -half && theta < half) {
            return Err(Error::InvalidInput(format!(
                "incidence angle {theta} must lie in (-pi/2, pi/2)"
            )));
        }
        Ok(Self { k, theta })
    }

    pub fn direction(&self) -> Vec2 {
        Vec2::new(self.theta.sin(), -self.theta.cos())
    }

    /// `u^i + u^r`, the field scattered by the unperturbed plane.
    pub fn plane_field(&self, x: Vec2) -> Complex64 {
        let (s, c) = self.theta.sin_cos();
        let a = self.k * (x.x * s - x.y * c);
        let b = self.k * (x.x * s + x.y * c);
        Complex64::from_polar(1.0, a) - Complex64::from_polar(1.0, b)
    }

    /// `grad(u^i + u^r) . nu`
    pub fn plane_field_normal_derivative(&self, x: Vec2, normal: Vec2) -> Complex64 {
        let (s, c) = self.theta.sin_cos();
        let a = self.k * (x.x * s - x.y * c);
        let b = self.k * (x.x * s + x.y * c);
        let i = Complex64::new(0.0, self.k);
        let di = normal.dot(Vec2::new(s, -c));
        let dr = normal.dot(Vec2::new(s, c));
        i * (di * Complex64::from_polar(1.0, a) - dr * Complex64::from_polar(1.0, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incident_wave_validation_and_direction() {
        assert!(IncidentWave::new(0.0, 0.0).is_err());
        assert!(IncidentWave::new(1.0, 1.6).is_err());
        let w = IncidentWave::new(2.0, 0.4).unwrap();
        let d = w.direction();
        assert!((d.norm() - 1.0).abs() < 1e-15);
        assert!(d.y < 0.0);
    }

    #[test]
    fn plane_field_vanishes_on_axis_and_gradient_matches_fd() {
        let w = IncidentWave::new(3.0, 0.7).unwrap();
        assert!(w.plane_field(Vec2::new(0.37, 0.0)).norm() < 1e-15);
        let x = Vec2::new(0.2, 0.3);
        let nu = Vec2::new(0.6, 0.8);
        let h = 1e-6;
        let fd = (w.plane_field(x + nu * h) - w.plane_field(x - nu * h)) / (2.0 * h);
        assert!((fd - w.plane_field_normal_derivative(x, nu)).norm() < 1e-8);
        // flat-surface trace -2ik cos(theta) exp(ik x1 sin(theta))
        let x = Vec2::new(-0.4, 0.0);
        let up = Vec2::new(0.0, 1.0);
        let expect = Complex64::new(0.0, -2.0 * 3.0 * 0.7f64.cos())
            * Complex64::from_polar(1.0, 3.0 * -0.4 * 0.7f64.sin());
        assert!((w.plane_field_normal_derivative(x, up) - expect).norm() < 1e-14);
    }
}
