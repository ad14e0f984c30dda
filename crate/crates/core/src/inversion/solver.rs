//! Multi-frequency continuation with regularized Newton steps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lm::lm_step;
use super::measurements::{EtaRule, MeasurementSet, MeshRule};
use super::spline::{profile_from_coeffs, SplineBasis};
use crate::error::{Error, Result};
use crate::forward::{assemble, far_field, rhs, FarFieldPattern, ForwardSystem, IncidentWave};
use crate::frechet::{jacobian_from_densities, TraceMethod};
use crate::geometry::build_mesh;

/// Replaces `delta` in the stopping rule when the data are exact.
pub const DELTA_FLOOR: f64 = 1e-8;
/// Block norms below this use the absolute residual in `err_k`.
pub const DEGENERATE_NORM: f64 = 1e-14;

/// `(1/n_d) sum_l ||F_l - u_l|| / ||u_l||`, absolute for blocks with `||u_l|| < 1e-14`.
pub fn err_k(computed: &[Vec<Complex64>], measured: &[Vec<Complex64>]) -> Result<f64> {
    if computed.len() != measured.len() || computed.is_empty() {
        return Err(Error::Dimension(format!(
            "{} computed blocks for {} measured blocks",
            computed.len(),
            measured.len()
        )));
    }
    let mut total = 0.0;
    for (f, u) in computed.iter().zip(measured) {
        if f.len() != u.len() {
            return Err(Error::Dimension(format!("block lengths {} and {}", f.len(), u.len())));
        }
        let diff = f.iter().zip(u).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        total += if norm < DEGENERATE_NORM { diff } else { diff / norm };
    }
    Ok(total / computed.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionSettings {
    pub rho: f64,
    pub tau: f64,
    pub max_iterations: usize,
    /// Relative increase of `Err_k` between accepted iterations that aborts a stage.
    pub tripwire: f64,
    pub mesh: MeshRule,
    pub eta: EtaRule,
    pub trace: TraceMethod,
}

impl Default for InversionSettings {
    fn default() -> Self {
        Self {
            rho: 0.8,
            tau: 1.5,
            max_iterations: 25,
            tripwire: 1.5,
            mesh: MeshRule::default(),
            eta: EtaRule::Fixed(0.0),
            trace: TraceMethod::default(),
        }
    }
}

impl InversionSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidInput(format!("rho = {} must lie in (0, 1)", self.rho)));
        }
        if !(self.tau > 1.0 && self.tau.is_finite()) {
            return Err(Error::InvalidInput(format!("tau = {} must be > 1", self.tau)));
        }
        if !(self.tripwire > 1.0) {
            return Err(Error::InvalidInput(format!("tripwire = {} must be > 1", self.tripwire)));
        }
        if let TraceMethod::Extrapolation { eps } = self.trace {
            if !(eps > 0.0) {
                return Err(Error::InvalidInput(format!("extrapolation offset {eps} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn mesh_for(&self, k: f64) -> usize {
        self.mesh.n_for(k)
    }
}

/// What ended a row of the log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationEvent {
    /// A step was taken.
    Step,
    /// `Err_k <= tau delta`.
    Converged,
    /// The stage iteration cap was reached.
    IterationCap,
    /// `Err_k` grew past the tripwire; the previous coefficients are kept.
    Diverged,
    /// The forward system was singular at this wavenumber.
    SingularSystem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub stage: usize,
    pub k: f64,
    pub iteration: usize,
    /// `Err_k` at the coefficients entering this iteration.
    pub err: f64,
    pub threshold: f64,
    pub beta: Option<f64>,
    pub step_norm: Option<f64>,
    pub discrepancy_unattainable: bool,
    pub event: IterationEvent,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub k: f64,
    pub iterations: usize,
    pub initial_err: Option<f64>,
    pub final_err: Option<f64>,
    pub converged: bool,
    /// Coefficients at the end of the stage.
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionResult {
    pub coefficients: Vec<f64>,
    pub stages: Vec<StageResult>,
    pub log: Vec<IterationLog>,
    /// Noise level used in the stopping rule (`delta`, or the floor for exact data).
    pub effective_delta: f64,
}

struct Forward {
    system: ForwardSystem,
    incidents: Vec<IncidentWave>,
    densities: Vec<crate::forward::Density>,
    far_fields: Vec<Vec<Complex64>>,
}

struct StageSetup<'a> {
    basis: &'a SplineBasis,
    k: f64,
    eta: f64,
    directions: &'a [f64],
    angles: &'a [f64],
    n: usize,
}

fn forward_at(setup: &StageSetup, a: &[f64]) -> Result<Forward> {
    let StageSetup {
        basis,
        k,
        eta,
        directions,
        angles,
        n,
    } = *setup;
    let profile = profile_from_coeffs(basis, a)?;
    let mesh = build_mesh(&profile, n)?;
    let system = assemble(&mesh, k, eta)?;
    let incidents = directions
        .iter()
        .map(|&t| IncidentWave::new(k, t))
        .collect::<Result<Vec<_>>>()?;
    let densities = system.solve_many(&incidents.iter().map(|w| rhs(&mesh, w)).collect::<Vec<_>>())?;
    let far_fields = densities
        .iter()
        .map(|d| far_field(&mesh, d, k, eta, angles).map(|f: FarFieldPattern| f.values))
        .collect::<Result<Vec<_>>>()?;
    Ok(Forward {
        system,
        incidents,
        densities,
        far_fields,
    })
}

/// Frequency continuation from `h = 0`: at each wavenumber, regularized Newton
/// steps (with `eta = 0` by default) until `Err_k <= tau delta` or the iteration cap.
pub fn invert(
    measurements: &MeasurementSet,
    basis: &SplineBasis,
    settings: &InversionSettings,
) -> Result<InversionResult> {
    invert_with_progress(measurements, basis, settings, |_| {})
}

/// As [`invert`], reporting each log row as it is produced.
pub fn invert_with_progress(
    measurements: &MeasurementSet,
    basis: &SplineBasis,
    settings: &InversionSettings,
    mut progress: impl FnMut(&IterationLog),
) -> Result<InversionResult> {
    measurements.validate()?;
    settings.validate()?;
    let effective_delta = if measurements.delta > 0.0 {
        measurements.delta
    } else {
        DELTA_FLOOR
    };
    let threshold = settings.tau * effective_delta;
    let mut a = vec![0.0; basis.m];
    let mut stages = Vec::new();
    let mut log = Vec::new();
    let mut push = |entry: IterationLog, log: &mut Vec<IterationLog>| {
        progress(&entry);
        log.push(entry);
    };
    let angles = &measurements.angles;
    let dirs = &measurements.directions;

    for (stage, &k) in measurements.wavenumbers.iter().enumerate() {
        let data = &measurements.values[stage];
        let setup = StageSetup {
            basis,
            k,
            eta: settings.eta.eta(k),
            directions: dirs,
            angles,
            n: settings.mesh_for(k),
        };
        let mut converged = false;
        let mut iterations = 0;
        let entry = |iteration: usize, err: f64, event: IterationEvent| IterationLog {
            stage,
            k,
            iteration,
            err,
            threshold,
            beta: None,
            step_norm: None,
            discrepancy_unattainable: false,
            event,
            message: None,
        };
        let mut current = match forward_at(&setup, &a) {
            Ok(f) => f,
            Err(e @ Error::SingularSystem { .. }) => {
                let mut row = entry(0, f64::NAN, IterationEvent::SingularSystem);
                row.message = Some(e.to_string());
                push(row, &mut log);
                stages.push(StageResult {
                    k,
                    iterations: 0,
                    initial_err: None,
                    final_err: None,
                    converged: false,
                    coefficients: a.clone(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut err = err_k(&current.far_fields, data)?;
        let initial_err = Some(err);
        loop {
            if err <= threshold {
                converged = true;
                push(entry(iterations, err, IterationEvent::Converged), &mut log);
                break;
            }
            if iterations >= settings.max_iterations {
                push(entry(iterations, err, IterationEvent::IterationCap), &mut log);
                break;
            }
            let jac = jacobian_from_densities(
                &current.system,
                &current.incidents,
                &current.densities,
                basis,
                angles,
                settings.trace,
            )?;
            let residual: Vec<Complex64> = current
                .far_fields
                .iter()
                .zip(data)
                .flat_map(|(f, u)| f.iter().zip(u).map(|(x, y)| x - y).collect::<Vec<_>>())
                .collect();
            let step = lm_step(&jac.matrix, &residual, settings.rho)?;
            let trial: Vec<f64> = a.iter().zip(&step.delta_a).map(|(x, d)| x + d).collect();
            let mut row = entry(iterations, err, IterationEvent::Step);
            row.beta = Some(step.beta);
            row.step_norm = Some(step.delta_a.iter().map(|d| d * d).sum::<f64>().sqrt());
            row.discrepancy_unattainable = step.discrepancy_unattainable;
            iterations += 1;
            let next = forward_at(&setup, &trial).and_then(|f| {
                let e = err_k(&f.far_fields, data)?;
                Ok((f, e))
            });
            match next {
                Ok((f, e)) if e <= settings.tripwire * err => {
                    push(row, &mut log);
                    a = trial;
                    current = f;
                    err = e;
                }
                Ok((_, e)) => {
                    row.event = IterationEvent::Diverged;
                    row.message = Some(format!(
                        "Err_k would grow from {err:e} to {e:e}; stage aborted, step rejected"
                    ));
                    push(row, &mut log);
                    break;
                }
                Err(Error::SingularSystem { .. }) => {
                    row.event = IterationEvent::SingularSystem;
                    row.message = Some("singular system at the trial profile; stage aborted".into());
                    push(row, &mut log);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        stages.push(StageResult {
            k,
            iterations,
            initial_err,
            final_err: Some(err),
            converged,
            coefficients: a.clone(),
        });
    }
    Ok(InversionResult {
        coefficients: a,
        stages,
        log,
        effective_delta,
    })
}
