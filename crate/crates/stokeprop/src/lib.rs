//! Hydrodynamic resistance of rigid bodies in Stokes flow, and propulsion
//! analysis under a small time-periodic applied force.
//!
//! The pipeline: [`mesh`] builds or ingests a closed triangulated surface;
//! [`bem`] solves the six exterior rigid-mode Stokes problems by regularized
//! Stokeslet collocation and integrates the tractions into the resistance
//! tensors; [`propulsion`] evaluates the net-motion criterion and the
//! closed-form leading-order average velocities; [`dynamics`] integrates the
//! body-frame equations under the quasi-steady closure and verifies the
//! small-amplitude limit by direct simulation.
//!
//! All numerics are generic over the scalar type via [`scalar::Real`]
//! (f32 or f64); the aliases below fix f64, which everything downstream of
//! the library uses.

pub mod bem;
pub mod dynamics;
pub mod error;
pub mod mesh;
pub mod output;
pub mod propulsion;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type TriMesh = mesh::TriMesh<f64>;
pub type ResistanceSet = bem::ResistanceSet<f64>;
pub type BemConfig = bem::BemConfig<f64>;
pub type BodyInertia = propulsion::BodyInertia<f64>;
pub type Forcing = propulsion::Forcing<f64>;
pub type PropulsionReport = propulsion::PropulsionReport<f64>;
pub type BodyState = dynamics::BodyState<f64>;
pub type Orbit = dynamics::Orbit<f64>;
pub type IntegrateOptions = dynamics::IntegrateOptions<f64>;
pub type SweepTable = dynamics::SweepTable<f64>;
