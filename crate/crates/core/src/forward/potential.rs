//! Evaluation of `u^s = D phi - i eta S phi` at points off the curve.
//!
//! Far from the curve the nodal trapezoidal rule is spectrally accurate. Close
//! to it the integrand is nearly singular, so the density is interpolated
//! trigonometrically and integrated against the exact kernel with adaptive
//! Gauss-Legendre panels.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use super::kernels::combined_kernel_at;
use super::Density;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, CurvePoint, Vec2};

/// Points closer than this many local node spacings use adaptive quadrature.
const NEAR_SPACINGS: f64 = 8.0;
const ON_CURVE_TOL: f64 = 1e-13;
const MAX_DEPTH: u32 = 40;
const ABS_TOL: f64 = 1e-13;
const REL_TOL: f64 = 1e-10;
/// Panels farther than this many panel radii are integrated without refinement.
const NEAR_PANEL: f64 = 3.0;

fn gauss_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(16.try_into().expect("nonzero degree"))
            .iter()
            .map(|(x, w)| (*x, *w))
            .collect()
    })
}

/// Barycentric trigonometric interpolant on `2n` equispaced nodes.
struct TrigInterpolant<'a> {
    values: &'a [Complex64],
    h: f64,
}

impl TrigInterpolant<'_> {
    fn eval(&self, s: f64) -> Complex64 {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for (j, v) in self.values.iter().enumerate() {
            let half = 0.5 * (s - j as f64 * self.h);
            let sn = half.sin();
            if sn.abs() < 1e-15 {
                return *v;
            }
            let c = half.cos() / sn;
            let c = if j % 2 == 0 { c } else { -c };
            num += *v * c;
            den += c;
        }
        num / den
    }
}

fn distance_to_curve(mesh: &BoundaryMesh, x: Vec2) -> f64 {
    let (j, _) = mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, p)| (j, (p.point - x).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("mesh has nodes");
    let h = mesh.spacing();
    let f = |s: f64| (mesh.point_at(s).point - x).norm();
    let t = j as f64 * h;
    // golden-section search on the two adjacent panels
    let (mut a, mut b) = (t - h, t + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd).min(f(t))
}

fn is_near(mesh: &BoundaryMesh, x: Vec2) -> bool {
    let h = mesh.spacing();
    let len = mesh.len();
    (0..len).any(|j| {
        let local = (0..3)
            .map(|o| mesh.node((j + len + o - 1) % len).speed)
            .fold(0.0, f64::max)
            * h;
        (mesh.node(j).point - x).norm() < NEAR_SPACINGS * local
    })
}

/// `u^s(x)` from the density on the curve. Fails for points on the curve.
pub fn potential_eval(
    mesh: &BoundaryMesh,
    density: &Density,
    k: f64,
    eta: f64,
    x: Vec2,
) -> Result<Complex64> {
    PotentialEvaluator::new(mesh, density, k, eta)?.eval(x)
}

/// Gauss-Legendre samples on one mesh panel `[t_j, t_{j+1}]`.
struct Panel {
    a: f64,
    b: f64,
    center: Vec2,
    radius: f64,
    /// `(point, weight * interpolated density)`
    samples: Vec<(CurvePoint, Complex64)>,
}

/// Evaluates the potential of one density at many points, sharing the
/// interpolated density on the base panels.
pub struct PotentialEvaluator<'a> {
    mesh: &'a BoundaryMesh,
    density: &'a Density,
    k: f64,
    eta: f64,
    values: Vec<Complex64>,
    panels: Vec<Panel>,
    max_speed: f64,
    scale: f64,
}

impl<'a> PotentialEvaluator<'a> {
    pub fn new(mesh: &'a BoundaryMesh, density: &'a Density, k: f64, eta: f64) -> Result<Self> {
        if density.values.len() != mesh.len() {
            return Err(Error::Dimension(format!(
                "density has {} values, mesh has {} nodes",
                density.values.len(),
                mesh.len()
            )));
        }
        let h = mesh.spacing();
        let values = mesh.decrowd(&density.values);
        let interp = TrigInterpolant { values: &values, h };
        let panels = (0..mesh.len())
            .map(|j| {
                let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                let samples: Vec<_> = gauss_rule()
                    .iter()
                    .map(|&(t, w)| {
                        let s = mid + half * t;
                        (mesh.point_at(s), w * half * interp.eval(s))
                    })
                    .collect();
                let center = mesh.point_at(mid).point;
                let radius = [mesh.node(j).point, mesh.point_at(b).point]
                    .into_iter()
                    .chain(samples.iter().map(|(p, _)| p.point))
                    .map(|q| (q - center).norm())
                    .fold(0.0, f64::max);
                Panel {
                    a,
                    b,
                    center,
                    radius,
                    samples,
                }
            })
            .collect();
        let max_speed = mesh.nodes().iter().map(|p| p.speed).fold(0.0, f64::max);
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0) * max_speed;
        Ok(Self {
            mesh,
            density,
            k,
            eta,
            values,
            panels,
            max_speed,
            scale,
        })
    }

    pub fn eval(&self, x: Vec2) -> Result<Complex64> {
        let (mesh, k, eta) = (self.mesh, self.k, self.eta);
        if !(x.x.is_finite() && x.y.is_finite()) {
            return Err(Error::InvalidInput("evaluation point must be finite".into()));
        }
        let dist = distance_to_curve(mesh, x);
        if dist <= ON_CURVE_TOL * mesh.radius() {
            return Err(Error::PointOnCurve { distance: dist });
        }
        let n = mesh.n();
        let h = mesh.spacing();
        if !is_near(mesh, x) {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in (1..mesh.len()).filter(|&j| j != n) {
                let kern = combined_kernel_at(x, mesh.node(j), k, eta)
                    .ok_or(Error::PointOnCurve { distance: 0.0 })?;
                acc += kern * self.density.values[j];
            }
            return Ok(h * acc);
        }

        let interp = TrigInterpolant {
            values: &self.values,
            h,
        };
        let kernel = |p: &CurvePoint| -> Complex64 {
            if p.speed == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            combined_kernel_at(x, p, k, eta).unwrap_or(Complex64::new(0.0, 0.0))
        };
        let panel = |a: f64, b: f64| -> Complex64 {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            gauss_rule()
                .iter()
                .map(|&(t, w)| {
                    let s = mid + half * t;
                    w * kernel(&mesh.point_at(s)) * interp.eval(s)
                })
                .sum::<Complex64>()
                * half
        };
        let ctx = Adaptive {
            panel: &panel,
            min_width: 1e-2 * dist / self.max_speed,
        };
        let mut total = Complex64::new(0.0, 0.0);
        for p in &self.panels {
            let base: Complex64 = p.samples.iter().map(|(q, v)| kernel(q) * v).sum();
            total += if (x - p.center).norm() > NEAR_PANEL * p.radius {
                base
            } else {
                adapt(&ctx, p.a, p.b, base, ABS_TOL * self.scale, 0)
            };
        }
        Ok(total)
    }
}

struct Adaptive<'a> {
    panel: &'a dyn Fn(f64, f64) -> Complex64,
    /// Panels narrower than this are resolved well below the target distance.
    min_width: f64,
}

fn adapt(ctx: &Adaptive, a: f64, b: f64, whole: Complex64, tol: f64, depth: u32) -> Complex64 {
    let panel = ctx.panel;
    let m = 0.5 * (a + b);
    let left = panel(a, m);
    let right = panel(m, b);
    let split = left + right;
    // kernel values carry ~1e-10 relative cancellation error this close to the curve
    let floor = REL_TOL * (left.norm() + right.norm());
    if depth >= MAX_DEPTH || b - a < ctx.min_width || (split - whole).norm() <= tol.max(floor) {
        return split;
    }
    adapt(ctx, a, m, left, 0.5 * tol, depth + 1) + adapt(ctx, m, b, right, 0.5 * tol, depth + 1)
}
