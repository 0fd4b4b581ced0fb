//! Annual carbon footprint model for proof-of-space-and-time networks.
//!
//! The core is generic over the scalar type (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compare;
pub mod engine;
pub mod ingest;
pub mod params;
pub mod presets;
pub mod quantities;
pub mod real;
pub mod scenario;
pub mod scenario_file;
pub mod sensitivity;

pub use engine::ModelError;
pub use params::{ParamField, PlotterKind, Provenance};
pub use presets::Preset;
pub use quantities::{DataUnit, EnergyUnit, MassUnit, QuantityError};
pub use real::Real;

pub type DataSize = quantities::DataSize<f64>;
pub type Energy = quantities::Energy<f64>;
pub type CarbonMass = quantities::CarbonMass<f64>;
pub type Power = quantities::Power<f64>;
pub type CarbonIntensity = quantities::CarbonIntensity<f64>;
pub type Fraction = quantities::Fraction<f64>;
pub type Pue = quantities::Pue<f64>;
pub type DurationYears = quantities::DurationYears<f64>;
pub type ParameterSet = params::ParameterSet<f64>;
pub type Scenario = scenario::Scenario<f64>;
pub type Cohort = scenario::Cohort<f64>;
pub type EmissionsBreakdown = engine::EmissionsBreakdown<f64>;
pub type Components = engine::Components<f64>;
