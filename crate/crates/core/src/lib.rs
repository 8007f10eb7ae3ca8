//! Thermal drift calibration toolkit for telescopic precision actuators.
//!
//! The pipeline identifies a linear thermal-expansion model for an actuator
//! leg from time-series temperature and interferometric measurements,
//! ranks all temperature-sensor placements by exhaustive single/pair
//! regression with Pareto analysis over (RMSE, L∞), cross-validates the
//! chosen configuration on held-out scenarios, and applies the identified
//! model to correct commanded setpoints. A built-in physics simulator
//! generates synthetic datasets so every stage is testable without
//! hardware.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below are what the CLI and most callers use.

// Negated comparisons (`!(x > 0)`) also reject NaN inputs; index-coupled
// loops mirror the matrix arithmetic they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod correction;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod regression;
pub mod scalar;
pub mod selection;
pub mod simulator;
pub mod types;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use types::{
    predict_expansion, residual_norms, ExpansionModel, FitReport, ScenarioDataset, SensorCoeffs,
    SensorConfig, SensorId, TimeSeries, Unit,
};

pub type TimeSeriesF64 = types::TimeSeries<f64>;
pub type ScenarioDatasetF64 = types::ScenarioDataset<f64>;
pub type ExpansionModelF64 = types::ExpansionModel<f64>;
pub type FitReportF64 = types::FitReport<f64>;
pub type ScenarioSpecF64 = simulator::ScenarioSpec<f64>;
pub type ThermalPlantSpecF64 = simulator::ThermalPlantSpec<f64>;
pub type OutlierPolicyF64 = regression::OutlierPolicy<f64>;
pub type CriteriaMatricesF64 = selection::CriteriaMatrices<f64>;
pub type ParetoResultF64 = selection::ParetoResult<f64>;
pub type ValidationReportF64 = validation::ValidationReport<f64>;
pub type CorrectionSettingsF64 = correction::CorrectionSettings<f64>;
pub type ModelDocumentF64 = ingest::ModelDocument<f64>;

/// Default contracted inter-articular distance in mm.
pub const DEFAULT_Q0_MM: f64 = 500.0;
/// Default leg stroke in mm.
pub const DEFAULT_STROKE_MM: f64 = 250.0;
