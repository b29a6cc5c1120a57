//! Maximum-likelihood estimation over an unconstrained reparameterisation.

pub mod mle;
pub mod optimizer;
pub mod transform;

pub use mle::{
    covariance, estimate_mle, estimation_grid, loglik_at, profile_likelihood, standard_errors,
    EstimateOptions, EstimationReport, Optimizer,
};
pub use transform::ParamTransform;
