//! Chemo-mechano-damage simulation of axisymmetric core-shell electrode
//! particles: stress-coupled lithium transport, AT2 phase-field fracture with
//! a diffuse core-shell interface, and CC-CV lithiation protocols.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases at the crate root fix `f64`.

pub mod config;
pub mod driver;
pub mod error;
pub mod fem;
pub mod fracture;
pub mod interface;
pub mod material;
pub mod mechanics;
pub mod mesh;
pub mod metrics;
pub mod ocp;
pub mod output;
pub mod real;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use real::Real;

pub type Mesh = mesh::Mesh<f64>;
pub type ParticleSpec = mesh::ParticleSpec<f64>;
pub type MeshResolution = mesh::MeshResolution<f64>;
pub type Material = material::Material<f64>;
pub type Phases = material::Phases<f64>;
pub type OcpCurve = ocp::OcpCurve<f64>;
pub type InterfaceParams = interface::InterfaceParams<f64>;
pub type ScalarField = fem::ScalarField<f64>;
pub type Simulation = driver::Simulation<f64>;
pub type FieldState = driver::FieldState<f64>;
pub type RunResult = driver::RunResult<f64>;
