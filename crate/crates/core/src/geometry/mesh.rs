use std::f64::consts::PI;

use super::{grading_omega_full, SurfaceProfile, Vec2};
use crate::error::{Error, Result};

pub const MIN_MESH_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    /// `x_B` at `t = 0` or `x_A` at `t = pi`.
    Corner,
    /// The truncated surface, `0 < t < pi`.
    Surface,
    /// The lower half circle, `pi < t < 2 pi`.
    Arc,
}

/// Geometry of the parametrized curve at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub point: Vec2,
    /// `x'(t)`
    pub deriv: Vec2,
    /// `x''(t)`
    pub second: Vec2,
    pub speed: f64,
    /// Unit normal pointing out of the region below the surface and inside the
    /// circle: upward on the surface, radially outward on the arc. Zero at corners.
    pub normal: Vec2,
    pub segment: Segment,
}

impl CurvePoint {
    /// `nu . x'' * |x'|`, i.e. signed curvature times `|x'|^3`.
    #[inline]
    pub fn curvature_term(&self) -> f64 {
        self.deriv.y * self.second.x - self.deriv.x * self.second.y
    }
}

/// Distance to a corner, relative to `R`, below which a node counts as crowded.
pub const CORNER_CROWD: f64 = 1e-4;

/// Nodes `t_j = j pi / n`, `j = 0..2n-1`, on the closed curve.
#[derive(Debug, Clone)]
pub struct BoundaryMesh {
    n: usize,
    profile: SurfaceProfile,
    nodes: Vec<CurvePoint>,
}

impl BoundaryMesh {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nodes, `2n`.
    pub fn len(&self) -> usize {
        2 * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.profile.radius
    }

    pub fn profile(&self) -> &SurfaceProfile {
        &self.profile
    }

    pub fn nodes(&self) -> &[CurvePoint] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> &CurvePoint {
        &self.nodes[j]
    }

    /// Parameter spacing `pi / n`.
    pub fn spacing(&self) -> f64 {
        PI / self.n as f64
    }

    pub fn is_corner(&self, j: usize) -> bool {
        j == 0 || j == self.n
    }

    /// The corner a non-corner node `j` lies within `CORNER_CROWD * R` of.
    /// Graded nodes that close to a corner carry a collocation artifact, so
    /// consumers that interpolate or differentiate the density read the
    /// corner value there instead.
    pub fn crowded_corner(&self, j: usize) -> Option<usize> {
        if self.is_corner(j) {
            return None;
        }
        let p = self.nodes[j].point;
        let crowd = CORNER_CROWD * self.radius();
        [0, self.n].into_iter().find(|&c| (p - self.nodes[c].point).norm() < crowd)
    }

    /// Copy of nodal values with crowded nodes replaced by their corner value.
    pub fn decrowd<T: Copy>(&self, values: &[T]) -> Vec<T> {
        (0..values.len())
            .map(|j| match self.crowded_corner(j) {
                Some(c) => values[c],
                None => values[j],
            })
            .collect()
    }

    /// Interior surface node indices `1..n-1`.
    pub fn surface_indices(&self) -> std::ops::Range<usize> {
        1..self.n
    }

    /// Geometry at an arbitrary parameter; `t` is reduced modulo `2 pi`.
    pub fn point_at(&self, t: f64) -> CurvePoint {
        curve_point(&self.profile, t.rem_euclid(2.0 * PI))
    }
}

fn curve_point(profile: &SurfaceProfile, t: f64) -> CurvePoint {
    let r = profile.radius;
    let g = grading_omega_full(t.clamp(0.0, 2.0 * PI)).expect("parameter in range");
    let (point, deriv, second, segment) = if t <= PI {
        let scale = -2.0 * r / PI;
        let x1 = scale * g.value + r;
        let dx1 = scale * g.d1;
        let d2x1 = scale * g.d2;
        let p = profile.eval(x1);
        let segment = if t == 0.0 || t == PI {
            Segment::Corner
        } else {
            Segment::Surface
        };
        (
            Vec2::new(x1, p.h),
            Vec2::new(dx1, p.dh * dx1),
            Vec2::new(d2x1, p.d2h * dx1 * dx1 + p.dh * d2x1),
            segment,
        )
    } else {
        let (s, c) = g.value.sin_cos();
        (
            Vec2::new(r * c, r * s),
            Vec2::new(-s, c) * (r * g.d1),
            Vec2::new(-s, c) * (r * g.d2) - Vec2::new(c, s) * (r * g.d1 * g.d1),
            Segment::Arc,
        )
    };
    let speed = deriv.norm();
    let normal = if speed > 0.0 {
        Vec2::new(deriv.y, -deriv.x) * (1.0 / speed)
    } else {
        Vec2::ZERO
    };
    CurvePoint {
        t,
        point,
        deriv,
        second,
        speed,
        normal,
        segment,
    }
}

/// Discretizes the closed curve for `profile` with `2n` graded nodes.
pub fn build_mesh(profile: &SurfaceProfile, n: usize) -> Result<BoundaryMesh> {
    if n < MIN_MESH_N {
        return Err(Error::InvalidInput(format!("mesh size n = {n} must be >= {MIN_MESH_N}")));
    }
    let h = PI / n as f64;
    let nodes = (0..2 * n)
        .map(|j| {
            let mut p = curve_point(profile, j as f64 * h);
            // exact corner tags regardless of floating point in j * h
            p.segment = if j == 0 || j == n {
                Segment::Corner
            } else if j < n {
                Segment::Surface
            } else {
                Segment::Arc
            };
            if j == n {
                p.t = PI;
            }
            p
        })
        .collect::<Vec<_>>();
    if nodes
        .iter()
        .any(|p| !(p.point.x.is_finite() && p.point.y.is_finite() && p.speed.is_finite()))
    {
        return Err(Error::InvalidInput("profile produced non-finite geometry".into()));
    }
    Ok(BoundaryMesh {
        n,
        profile: profile.clone(),
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ProfileSpec;

    fn mesh(spec: ProfileSpec, n: usize) -> BoundaryMesh {
        build_mesh(&SurfaceProfile::new(spec, 1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn corners_and_flat_normals() {
        let m = mesh(ProfileSpec::Flat, 8);
        assert_eq!(m.node(0).point, Vec2::new(1.0, 0.0));
        assert!((m.node(8).point - Vec2::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(m.node(0).speed, 0.0);
        assert!(m.node(8).speed < 1e-15);
        for j in m.surface_indices() {
            assert!((m.node(j).normal - Vec2::new(0.0, 1.0)).norm() < 1e-15);
            assert_eq!(m.node(j).segment, Segment::Surface);
        }
        assert!(build_mesh(&SurfaceProfile::flat(1.0), 7).is_err());
    }

    #[test]
    fn mesh_invariants() {
        for spec in [ProfileSpec::Example1, ProfileSpec::Example2, ProfileSpec::Example4] {
            let m = mesh(spec, 32);
            for (j, p) in m.nodes().iter().enumerate() {
                if m.is_corner(j) {
                    assert_eq!(p.segment, Segment::Corner);
                    continue;
                }
                assert!(p.normal.dot(p.deriv).abs() < 1e-12);
                assert!((p.normal.norm() - 1.0).abs() < 1e-14);
                if j > m.n() {
                    assert!((p.point.norm() - 1.0).abs() < 1e-12);
                    assert!((p.normal - p.point).norm() < 1e-12);
                    assert!(p.point.y < 0.0);
                }
            }
        }
    }

    #[test]
    fn nested_refinement() {
        let a = mesh(ProfileSpec::Example3, 16);
        let b = mesh(ProfileSpec::Example3, 32);
        for j in 0..a.len() {
            assert_eq!(a.node(j).point, b.node(2 * j).point);
        }
    }

    #[test]
    fn arc_length_of_half_circle() {
        let m = mesh(ProfileSpec::Flat, 128);
        let len: f64 = (m.n() + 1..m.len()).map(|j| m.spacing() * m.node(j).speed).sum();
        assert!((len / PI - 1.0).abs() < 1e-6, "arc length {len}");
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let m = mesh(ProfileSpec::Example1, 16);
        for t in [0.3, 1.1, 2.9, 3.5, 4.4, 6.0] {
            let h = 1e-6;
            let p = m.point_at(t);
            let fd = (m.point_at(t + h).deriv - m.point_at(t - h).deriv) * (0.5 / h);
            assert!((fd - p.second).norm() < 1e-6 * (1.0 + p.second.norm()), "t = {t}");
            let fd1 = (m.point_at(t + h).point - m.point_at(t - h).point) * (0.5 / h);
            assert!((fd1 - p.deriv).norm() < 1e-7 * (1.0 + p.deriv.norm()));
        }
    }
}
