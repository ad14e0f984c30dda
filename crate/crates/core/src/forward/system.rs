use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use rayon::prelude::*;

use super::kernels::{combined_kernel_at, split_kernel};
use super::quadrature::quad_weights_r;
use super::IncidentWave;
use crate::error::{Error, Result};
use crate::geometry::{reflect, BoundaryMesh};

/// Pivot ratio `min |U_ii| / max |U_ii|` below which the system is treated as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

/// Assembly switches used by the self-check suite.
#[derive(Debug, Clone, Copy, Default)]
pub struct AssemblyOptions {
    /// Added to every diagonal `K2(t_i, t_i)` entry. Fault injection only.
    #[doc(hidden)]
    pub k2_diagonal_offset: Complex64,
}

/// Nodal density values `phi_j`, `j = 0..2n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub values: Vec<Complex64>,
}

/// The assembled and factorized Nyström matrix for one `(mesh, k, eta)`.
pub struct ForwardSystem {
    k: f64,
    eta: f64,
    mesh: BoundaryMesh,
    matrix: DMatrix<Complex64>,
    lu: LU<Complex64, Dyn, Dyn>,
    pivot_ratio: f64,
}

impl std::fmt::Debug for ForwardSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForwardSystem")
            .field("k", &self.k)
            .field("eta", &self.eta)
            .field("n", &self.mesh.n())
            .field("pivot_ratio", &self.pivot_ratio)
            .finish()
    }
}

pub fn assemble(mesh: &BoundaryMesh, k: f64, eta: f64) -> Result<ForwardSystem> {
    assemble_with(mesh, k, eta, AssemblyOptions::default())
}

pub fn assemble_with(
    mesh: &BoundaryMesh,
    k: f64,
    eta: f64,
    options: AssemblyOptions,
) -> Result<ForwardSystem> {
    if !(k > 0.0 && k.is_finite()) || !eta.is_finite() {
        return Err(Error::InvalidInput(format!("need k > 0 and finite eta (k = {k}, eta = {eta})")));
    }
    let n = mesh.n();
    let len = mesh.len();
    let weights = quad_weights_r(n);
    let h = mesh.spacing();

    let rows: Vec<Vec<Complex64>> = (0..len)
        .into_par_iter()
        .map(|i| -> Result<Vec<Complex64>> {
            let target = mesh.node(i);
            let arc = i > n;
            let scale = if arc { 1.0 } else { 2.0 };
            let mirrored = reflect(target.point);
            let mut row = vec![Complex64::new(0.0, 0.0); len];
            for j in (1..len).filter(|&j| j != n) {
                let source = mesh.node(j);
                let split = split_kernel(target, source, k, eta).map_err(|_| {
                    Error::CoincidentPoints {
                        source_index: j,
                        target_index: i,
                    }
                })?;
                let mut smooth = split.smooth;
                if i == j {
                    smooth += options.k2_diagonal_offset;
                }
                let mut v = scale * (weights[i.abs_diff(j)] * split.log_part + h * smooth);
                if arc {
                    let k3 = combined_kernel_at(mirrored, source, k, eta).ok_or(
                        Error::CoincidentPoints {
                            source_index: j,
                            target_index: i,
                        },
                    )?;
                    v += h * k3;
                }
                row[j] = v;
            }
            row[i] += if i > 0 && i < n { 1.0 } else { 0.5 };
            Ok(row)
        })
        .collect::<Result<_>>()?;

    if rows.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let matrix = DMatrix::from_fn(len, len, |i, j| rows[i][j]);
    let lu = matrix.clone().lu();
    let diag = lu.u().diagonal();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for z in diag.iter() {
        let a = z.norm();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    let pivot_ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(pivot_ratio >= SINGULAR_PIVOT_RATIO) {
        return Err(Error::SingularSystem { k, pivot_ratio });
    }
    Ok(ForwardSystem {
        k,
        eta,
        mesh: mesh.clone(),
        matrix,
        lu,
        pivot_ratio,
    })
}

/// `g = -2 (u^i + u^r)` at interior surface nodes, zero on the arc and at corners.
pub fn rhs(mesh: &BoundaryMesh, incident: &IncidentWave) -> Vec<Complex64> {
    let mut g = vec![Complex64::new(0.0, 0.0); mesh.len()];
    for j in mesh.surface_indices() {
        g[j] = -2.0 * incident.plane_field(mesh.node(j).point);
    }
    g
}

impl ForwardSystem {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mesh(&self) -> &BoundaryMesh {
        &self.mesh
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `min |U_ii| / max |U_ii|` of the LU factor.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// 1-norm condition number, computed from the explicit inverse.
    pub fn condition_number(&self) -> f64 {
        let norm1 = |m: &DMatrix<Complex64>| {
            m.column_iter()
                .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0f64, f64::max)
        };
        match self.lu.try_inverse() {
            Some(inv) => norm1(&self.matrix) * norm1(&inv),
            None => f64::INFINITY,
        }
    }

    pub fn solve(&self, g: &[Complex64]) -> Result<Density> {
        if g.len() != self.mesh.len() {
            return Err(Error::Dimension(format!(
                "right-hand side has {} entries, system has {}",
                g.len(),
                self.mesh.len()
            )));
        }
        let b = DVector::from_column_slice(g);
        let x = self.lu.solve(&b).ok_or(Error::SingularSystem {
            k: self.k,
            pivot_ratio: self.pivot_ratio,
        })?;
        if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::SingularSystem {
                k: self.k,
                pivot_ratio: self.pivot_ratio,
            });
        }
        Ok(Density {
            values: x.as_slice().to_vec(),
        })
    }

    /// Solves for several right-hand sides against the one factorization.
    pub fn solve_many(&self, rhs: &[Vec<Complex64>]) -> Result<Vec<Density>> {
        rhs.par_iter().map(|g| self.solve(g)).collect()
    }

    /// `||A phi - g|| / ||g||` (absolute when `g = 0`).
    pub fn residual(&self, density: &Density, g: &[Complex64]) -> f64 {
        let x = DVector::from_column_slice(&density.values);
        let b = DVector::from_column_slice(g);
        let r = (&self.matrix * x - &b).norm();
        let gn = b.norm();
        if gn > 0.0 {
            r / gn
        } else {
            r
        }
    }
}
