//! Numerical laboratory for weighted relative-entropy contraction of viscous
//! shocks in the one-dimensional barotropic Navier-Stokes system.

pub mod config;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod poincare;
pub mod profile;
pub mod scalar;
pub mod shift;
pub mod solver;
pub mod thermo;
pub mod weights;

pub use error::{Result, ShockError};
pub use grid::UniformGrid;
pub use scalar::Scalar;
pub use thermo::GasModel;

pub type GasModelF64 = GasModel<f64>;
pub type GasModelF32 = GasModel<f32>;
pub type GridF64 = UniformGrid<f64>;
pub type GridF32 = UniformGrid<f32>;
pub type ShockProfileF64 = profile::ShockProfile<f64>;
pub type ShockProfileF32 = profile::ShockProfile<f32>;
pub type WeightF64 = weights::WeightFunction<f64>;
pub type WeightF32 = weights::WeightFunction<f32>;
pub type FluidStateF64 = solver::FluidState<f64>;
pub type FluidStateF32 = solver::FluidState<f32>;
pub type FunctionalReportF64 = functionals::FunctionalReport<f64>;
pub type FunctionalReportF32 = functionals::FunctionalReport<f32>;
