//! Linearization of the profile-to-far-field map.

mod jacobian;
mod trace;

pub use jacobian::{derivative_rhs, jacobian, jacobian_from_densities, linearize, Jacobian, Linearization};
pub use trace::{
    normal_derivative, normal_derivative_with, NormalDerivativeTrace, TraceMethod, TraceOperator,
};
