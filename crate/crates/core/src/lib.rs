//! Daily mixed-frequency dynamic factor nowcasting.
//!
//! A single latent daily factor drives weekly, monthly and quarterly
//! indicators. The model compiles to a time-varying linear-Gaussian
//! state-space system ([`model`]), is filtered and smoothed with missing
//! data ([`kalman`]), estimated by maximum likelihood ([`estimate`]) and
//! replayed across data vintages ([`vintage`]). [`chronology`] scores
//! recessions on an extracted index and [`covid`] holds the HP-filter lead
//! correlation tooling.
//!
//! Numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the file formats use.

pub mod calendar;
pub mod chronology;
pub mod covid;
pub mod error;
pub mod estimate;
pub mod io;
pub mod kalman;
pub mod linalg;
pub mod model;
pub mod plot;
pub mod scalar;
pub mod vintage;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = linalg::Matrix<f64>;
pub type Params = model::DfmParams<f64>;
pub type Params32 = model::DfmParams<f32>;
pub type System = model::StateSpaceSystem<f64>;
pub type System32 = model::StateSpaceSystem<f32>;
pub type Panel = model::Panel<f64>;
pub type Standardization = model::Standardization<f64>;
pub type Observations = kalman::Observations<f64>;
pub type Vintage = vintage::VintageDataset<f64>;
pub type ReleaseEvent = vintage::ReleaseEvent<f64>;
pub type Path = vintage::Path<f64>;
pub type DotSeries = vintage::DotSeries<f64>;
pub type DailySeries = covid::DailySeries<f64>;
pub type EstimationReport = estimate::EstimationReport<f64>;
