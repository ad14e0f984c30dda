pub mod error;
pub mod forward;
pub mod frechet;
pub mod geometry;
pub mod harness;
pub mod inversion;
pub mod specfun;
