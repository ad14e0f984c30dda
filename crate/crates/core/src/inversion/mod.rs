//! Spline parametrization, synthetic data and the regularized Newton inversion.

pub mod lm;
pub mod measurements;
pub mod solver;
pub mod spline;

pub use lm::{lm_step, stack_real, LmStep, DISCREPANCY_TOL};
pub use measurements::{
    default_mesh_n, synthesize_measurements, synthesize_measurements_with, EtaRule, MeasurementSet,
    MeshRule,
};
pub use solver::{
    err_k, invert, invert_with_progress, InversionResult, InversionSettings, IterationEvent,
    IterationLog, StageResult, DEGENERATE_NORM, DELTA_FLOOR,
};
pub use spline::{profile_from_coeffs, spline_phi, spline_phi_derivs, SplineBasis, DEFAULT_KAPPA};
