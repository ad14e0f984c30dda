//! Surface profiles, the corner grading and the discretized closed curve
//! made of the truncated surface and the lower half circle.

mod grading;
mod mesh;
mod profile;

pub use grading::{grading_omega, grading_omega_full, grading_v, Grading, GRADING_P};
pub use mesh::{build_mesh, BoundaryMesh, CurvePoint, Segment, CORNER_CROWD, MIN_MESH_N};
pub use profile::{ProfileSpec, ProfileValue, SurfaceProfile, SUPPORT_TOL};

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// `self.x * o.y - self.y * o.x`
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Mirror image about the `x1` axis.
#[inline]
pub fn reflect(p: Vec2) -> Vec2 {
    Vec2::new(p.x, -p.y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection() {
        assert_eq!(reflect(Vec2::new(1.0, 2.0)), Vec2::new(1.0, -2.0));
        assert_eq!(reflect(Vec2::ZERO), Vec2::ZERO);
        let p = Vec2::new(-0.3, 7.5);
        assert_eq!(reflect(reflect(p)), p);
    }
}
