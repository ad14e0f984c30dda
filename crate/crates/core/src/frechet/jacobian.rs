use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::trace::{normal_derivative_with, NormalDerivativeTrace, TraceMethod, TraceOperator};
use crate::error::{Error, Result};
use crate::forward::{far_field, rhs, Density, FarFieldPattern, ForwardSystem, IncidentWave};
use crate::geometry::BoundaryMesh;
use crate::inversion::spline::SplineBasis;

/// Far-field derivative with respect to the spline coefficients. Rows are
/// ordered direction-major: `row = l * n_angles + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub matrix: DMatrix<Complex64>,
    pub n_directions: usize,
    pub n_angles: usize,
}

impl Jacobian {
    pub fn column(&self, i: usize) -> Vec<Complex64> {
        self.matrix.column(i).iter().copied().collect()
    }

    /// `J a` for real coefficients.
    pub fn apply(&self, a: &[f64]) -> Result<Vec<Complex64>> {
        if a.len() != self.matrix.ncols() {
            return Err(Error::Dimension(format!(
                "{} coefficients for {} columns",
                a.len(),
                self.matrix.ncols()
            )));
        }
        let v = nalgebra::DVector::from_iterator(a.len(), a.iter().map(|x| Complex64::new(*x, 0.0)));
        Ok((&self.matrix * v).as_slice().to_vec())
    }
}

/// Far fields at the current profile together with the Jacobian there.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub far_fields: Vec<FarFieldPattern>,
    pub jacobian: Jacobian,
}

/// `g'_j = -2 nu_2(t_j) dh(x1(t_j)) du/dnu(t_j)` at interior surface nodes, zero elsewhere.
pub fn derivative_rhs(
    mesh: &BoundaryMesh,
    trace: &NormalDerivativeTrace,
    delta_h: impl Fn(f64) -> f64,
) -> Result<Vec<Complex64>> {
    if trace.values.len() + 1 != mesh.n() {
        return Err(Error::Dimension(format!(
            "trace has {} values for a mesh with n = {}",
            trace.values.len(),
            mesh.n()
        )));
    }
    let mut g = vec![Complex64::new(0.0, 0.0); mesh.len()];
    for j in mesh.surface_indices() {
        let p = mesh.node(j);
        let dh = delta_h(p.point.x);
        if dh != 0.0 {
            g[j] = -2.0 * p.normal.y * dh * trace.at(j);
        }
    }
    Ok(g)
}

pub fn jacobian(
    system: &ForwardSystem,
    incidents: &[IncidentWave],
    basis: &SplineBasis,
    angles: &[f64],
) -> Result<Jacobian> {
    Ok(linearize(system, incidents, basis, angles, TraceMethod::default())?.jacobian)
}

pub fn linearize(
    system: &ForwardSystem,
    incidents: &[IncidentWave],
    basis: &SplineBasis,
    angles: &[f64],
    method: TraceMethod,
) -> Result<Linearization> {
    check_incidents(system, incidents)?;
    let mesh = system.mesh();
    let densities = system.solve_many(&incidents.iter().map(|w| rhs(mesh, w)).collect::<Vec<_>>())?;
    let far_fields = densities
        .par_iter()
        .map(|d| far_field(mesh, d, system.k(), system.eta(), angles))
        .collect::<Result<Vec<_>>>()?;
    let jacobian = jacobian_from_densities(system, incidents, &densities, basis, angles, method)?;
    Ok(Linearization { far_fields, jacobian })
}

fn check_incidents(system: &ForwardSystem, incidents: &[IncidentWave]) -> Result<()> {
    if incidents.is_empty() {
        return Err(Error::InvalidInput("at least one incident direction is required".into()));
    }
    if let Some(w) = incidents.iter().find(|w| w.k != system.k()) {
        return Err(Error::InvalidInput(format!(
            "incident wavenumber {} differs from system wavenumber {}",
            w.k,
            system.k()
        )));
    }
    Ok(())
}

/// Jacobian at the profile of `system`, given the forward densities for each
/// incident wave.
pub fn jacobian_from_densities(
    system: &ForwardSystem,
    incidents: &[IncidentWave],
    densities: &[Density],
    basis: &SplineBasis,
    angles: &[f64],
    method: TraceMethod,
) -> Result<Jacobian> {
    check_incidents(system, incidents)?;
    if densities.len() != incidents.len() {
        return Err(Error::Dimension(format!(
            "{} densities for {} incident waves",
            densities.len(),
            incidents.len()
        )));
    }
    let (k, eta) = (system.k(), system.eta());
    let mesh = system.mesh();
    let m = basis.m;
    let operator = match method {
        TraceMethod::Quadrature => Some(TraceOperator::new(mesh, k, eta)?),
        TraceMethod::Extrapolation { .. } => None,
    };
    let traces = incidents
        .iter()
        .zip(densities)
        .map(|(w, d)| match &operator {
            Some(op) => {
                let s = op.apply(d)?;
                let values = mesh
                    .surface_indices()
                    .zip(s)
                    .map(|(j, v)| {
                        let p = mesh.node(j);
                        v + w.plane_field_normal_derivative(p.point, p.normal)
                    })
                    .collect();
                Ok(NormalDerivativeTrace { values })
            }
            None => normal_derivative_with(mesh, d, w, k, eta, method),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut derivative_rhs_all = Vec::with_capacity(incidents.len() * m);
    for trace in &traces {
        for i in 0..m {
            derivative_rhs_all.push(derivative_rhs(mesh, trace, |x| basis.eval_basis(i, x).h)?);
        }
    }
    let solutions = system.solve_many(&derivative_rhs_all)?;
    let columns = solutions
        .par_iter()
        .map(|d| far_field(mesh, d, k, eta, angles))
        .collect::<Result<Vec<_>>>()?;

    let n_angles = angles.len();
    let n_dir = incidents.len();
    let mut matrix = DMatrix::<Complex64>::zeros(n_dir * n_angles, m);
    for l in 0..n_dir {
        for i in 0..m {
            let col = &columns[l * m + i];
            for (j, v) in col.values.iter().enumerate() {
                matrix[(l * n_angles + j, i)] = *v;
            }
        }
    }
    Ok(Jacobian {
        matrix,
        n_directions: n_dir,
        n_angles,
    })
}
