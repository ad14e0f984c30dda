//! Combined-layer kernels in parametrized form and their logarithmic splitting
//! `K = K1 ln(4 sin^2((t - s)/2)) + K2`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::quadrature::log_kernel;
use crate::error::{Error, Result};
use crate::geometry::{reflect, BoundaryMesh, CurvePoint, Vec2};
use crate::specfun::{bessel_set_unchecked, EULER_GAMMA};

const I: Complex64 = Complex64::new(0.0, 1.0);
const FRAC_1_4PI: f64 = 0.25 / PI;

/// Logarithmic coefficient and smooth remainder of the kernel at one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSplit {
    pub log_part: Complex64,
    pub smooth: Complex64,
}

/// `[dPhi_k(x, y)/dnu(y) - i eta Phi_k(x, y)] |x'(s)|` for an arbitrary
/// target point `x` and source node `y = x(s)`.
#[inline]
pub fn combined_kernel_at(x: Vec2, source: &CurvePoint, k: f64, eta: f64) -> Option<Complex64> {
    let d = x - source.point;
    let r = d.norm();
    if r == 0.0 {
        return None;
    }
    let b = bessel_set_unchecked(k * r);
    let phi = 0.25 * I * b.h0();
    let dphi = 0.25 * I * k * b.h1() * (source.normal.dot(d) / r);
    Some((dphi - I * eta * phi) * source.speed)
}

/// Diagonal limit of the smooth part for a source with speed `|x'| > 0`.
#[inline]
pub(crate) fn smooth_diagonal(p: &CurvePoint, k: f64, eta: f64) -> Complex64 {
    let speed = p.speed;
    if speed == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let single = (0.25 * I - ((0.5 * k * speed).ln() + EULER_GAMMA) / (2.0 * PI)) * speed;
    let double = p.curvature_term() * FRAC_1_4PI / (speed * speed);
    -I * eta * single + double
}

/// Splits the combined kernel for target `x(t)` and source `x(s)`.
pub fn split_kernel(
    target: &CurvePoint,
    source: &CurvePoint,
    k: f64,
    eta: f64,
) -> Result<KernelSplit> {
    if target.t == source.t {
        return Ok(KernelSplit {
            log_part: I * eta * FRAC_1_4PI * source.speed,
            smooth: smooth_diagonal(source, k, eta),
        });
    }
    let d = target.point - source.point;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::domain(
            "split_kernel",
            format!("coincident points at parameters {} and {}", target.t, source.t),
        ));
    }
    let b = bessel_set_unchecked(k * r);
    let nd = source.normal.dot(d) / r;
    let full = (0.25 * I * k * b.h1() * nd - I * eta * 0.25 * I * b.h0()) * source.speed;
    let log_part = -FRAC_1_4PI * (k * b.j1 * nd - I * eta * b.j0) * source.speed;
    Ok(KernelSplit {
        log_part,
        smooth: full - log_part * log_kernel(target.t - source.t),
    })
}

fn check_source(mesh: &BoundaryMesh, i: usize, j: usize) -> Result<()> {
    let len = mesh.len();
    if i >= len || j >= len {
        return Err(Error::Dimension(format!("node index out of range ({i}, {j}) for {len} nodes")));
    }
    if mesh.is_corner(j) {
        return Err(Error::InvalidInput(format!("source node {j} is a corner")));
    }
    Ok(())
}

/// `K(t_i, t_j)`, the unsplit kernel; requires `i != j`.
pub fn kernel_k(mesh: &BoundaryMesh, k: f64, eta: f64, i: usize, j: usize) -> Result<Complex64> {
    check_source(mesh, i, j)?;
    if i == j {
        return Err(Error::CoincidentPoints {
            source_index: j,
            target_index: i,
        });
    }
    combined_kernel_at(mesh.node(i).point, mesh.node(j), k, eta).ok_or(Error::CoincidentPoints {
        source_index: j,
        target_index: i,
    })
}

/// `K1(t_i, t_j)`, the coefficient of the logarithm.
pub fn kernel_k1(mesh: &BoundaryMesh, k: f64, eta: f64, i: usize, j: usize) -> Result<Complex64> {
    check_source(mesh, i, j)?;
    Ok(split_kernel(mesh.node(i), mesh.node(j), k, eta)?.log_part)
}

/// `K2(t_i, t_j) = K - K1 ln(4 sin^2((t_i - t_j)/2))`, with its analytic diagonal limit.
pub fn kernel_k2(mesh: &BoundaryMesh, k: f64, eta: f64, i: usize, j: usize) -> Result<Complex64> {
    check_source(mesh, i, j)?;
    Ok(split_kernel(mesh.node(i), mesh.node(j), k, eta)?.smooth)
}

/// `K3(t_i, t_j)`: the kernel with the target reflected about the axis.
pub fn kernel_k3(mesh: &BoundaryMesh, k: f64, eta: f64, i: usize, j: usize) -> Result<Complex64> {
    check_source(mesh, i, j)?;
    if i <= mesh.n() {
        return Err(Error::InvalidInput(format!("K3 target {i} is not an arc node")));
    }
    combined_kernel_at(reflect(mesh.node(i).point), mesh.node(j), k, eta).ok_or(
        Error::CoincidentPoints {
            source_index: j,
            target_index: i,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, ProfileSpec, SurfaceProfile};
    use crate::specfun::hankel1;

    fn mesh(spec: ProfileSpec, n: usize) -> BoundaryMesh {
        build_mesh(&SurfaceProfile::new(spec, 1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn flat_pairs_are_pure_single_layer() {
        let m = mesh(ProfileSpec::Flat, 16);
        let (k, eta) = (3.0, 2.0);
        let (i, j) = (3, 9);
        let r = (m.node(i).point - m.node(j).point).norm();
        let expect = -I * eta * 0.25 * I * hankel1(0, k * r).unwrap() * m.node(j).speed;
        assert!((kernel_k(&m, k, eta, i, j).unwrap() - expect).norm() < 1e-15);
        assert_eq!(kernel_k1(&m, k, 0.0, i, j).unwrap(), Complex64::new(0.0, 0.0));
        assert!(kernel_k2(&m, k, 0.0, i, j).unwrap().norm() < 1e-16);
        assert!(kernel_k2(&m, k, 0.0, i, i).unwrap().norm() < 1e-16);
        let d = kernel_k1(&m, k, eta, i, i).unwrap();
        assert!((d - I * eta * m.node(i).speed / (4.0 * PI)).norm() < 1e-16);
    }

    /// Independent recomputation of all four kernels from the Hankel
    /// functions at one off-diagonal pair on a curved geometry.
    #[test]
    fn spot_values() {
        let m = mesh(ProfileSpec::Example1, 16);
        let (k, eta) = (2.5, 1.5);
        let (i, j) = (20, 7);
        let x = m.node(i).point;
        let y = m.node(j);
        let check = |target: Vec2| {
            let d = target - y.point;
            let r = d.norm();
            let h0 = hankel1(0, k * r).unwrap();
            let h1 = hankel1(1, k * r).unwrap();
            let dl = I * k / 4.0 * h1 * y.normal.dot(d) / r;
            let sl = I / 4.0 * h0;
            (dl - I * eta * sl) * y.speed
        };
        let kk = kernel_k(&m, k, eta, i, j).unwrap();
        assert!((kk - check(x)).norm() < 1e-14);
        let r = (x - y.point).norm();
        let k1 = -(k * crate::specfun::bessel_j(1, k * r).unwrap() * y.normal.dot(x - y.point) / r
            - I * eta * crate::specfun::bessel_j(0, k * r).unwrap())
            * y.speed
            / (4.0 * PI);
        assert!((kernel_k1(&m, k, eta, i, j).unwrap() - k1).norm() < 1e-15);
        let dt = (i as f64 - j as f64) * PI / 16.0;
        let k2 = kk - k1 * (4.0 * (dt / 2.0).sin().powi(2)).ln();
        assert!((kernel_k2(&m, k, eta, i, j).unwrap() - k2).norm() < 1e-14);
        let k3 = kernel_k3(&m, k, eta, i, j).unwrap();
        assert!((k3 - check(reflect(x))).norm() < 1e-14);
        assert!(kernel_k3(&m, k, eta, 3, j).is_err());
        assert!(kernel_k(&m, k, eta, 3, 0).is_err());
        assert!(kernel_k(&m, k, eta, 3, 3).is_err());
    }

    /// The analytic diagonal of K2 must agree with the off-diagonal formula
    /// as the source parameter approaches the target.
    #[test]
    fn diagonal_limit_oracle() {
        // one-sided at the central flat node, where the grading is symmetric
        let m = mesh(ProfileSpec::Flat, 32);
        let target = m.node(16);
        for &(k, eta) in &[(1.0, 1.0), (5.0, 5.0), (13.0, 13.0)] {
            let diag = split_kernel(target, target, k, eta).unwrap().smooth;
            let near = m.point_at(target.t + 1e-5);
            let off = split_kernel(target, &near, k, eta).unwrap().smooth;
            assert!((diag - off).norm() <= 1e-6, "k = {k}: {diag} vs {off}");
        }
        // centred elsewhere, which removes the first-order drift of |x'(s)|
        for spec in [ProfileSpec::Flat, ProfileSpec::Example1, ProfileSpec::Example3] {
            let m = mesh(spec, 32);
            for &(k, eta) in &[(1.0, 1.0), (5.0, 5.0), (5.0, 0.0)] {
                for i in [5usize, 16, 27, 40, 50] {
                    let target = m.node(i);
                    let diag = split_kernel(target, target, k, eta).unwrap().smooth;
                    let eps = 1e-5;
                    let a = split_kernel(target, &m.point_at(target.t + eps), k, eta).unwrap();
                    let b = split_kernel(target, &m.point_at(target.t - eps), k, eta).unwrap();
                    let mid = 0.5 * (a.smooth + b.smooth);
                    assert!((diag - mid).norm() <= 1e-6, "i = {i}, k = {k}: {diag} vs {mid}");
                }
            }
        }
    }

    #[test]
    fn reflected_single_layer_matches_direct_on_axis() {
        let m = mesh(ProfileSpec::Flat, 16);
        // source on the axis: |x - y| = |x^re - y|
        let (i, j) = (24, 5);
        let single = |f: fn(&BoundaryMesh, f64, f64, usize, usize) -> Result<Complex64>| {
            f(&m, 2.0, 1.0, i, j).unwrap() - f(&m, 2.0, 0.0, i, j).unwrap()
        };
        assert!((single(kernel_k) - single(kernel_k3)).norm() < 1e-15);
        // the double-layer parts flip sign under the mirror
        let a = kernel_k(&m, 2.0, 0.0, i, j).unwrap();
        let b = kernel_k3(&m, 2.0, 0.0, i, j).unwrap();
        assert!((a + b).norm() < 1e-15 && a.norm() > 1e-3);
    }

    #[test]
    fn arc_double_layer_bounded_near_diagonal() {
        let m = mesh(ProfileSpec::Flat, 64);
        let target = m.node(96);
        for e in [1e-2, 1e-4, 1e-6] {
            let near = m.point_at(target.t + e);
            let v = combined_kernel_at(target.point, &near, 3.0, 0.0).unwrap();
            assert!(v.norm() < 1.0);
        }
    }
}
