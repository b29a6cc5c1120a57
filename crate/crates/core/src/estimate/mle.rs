//! Maximum-likelihood estimation, standard errors and likelihood profiles.

use crate::calendar::Grid;
use crate::error::{Error, Result};
use crate::estimate::optimizer::{bfgs, nelder_mead, BfgsOptions, NelderMeadOptions};
use crate::estimate::transform::ParamTransform;
use crate::kalman::{log_likelihood, Observations};
use crate::linalg::Matrix;
use crate::model::panel::Panel;
use crate::model::params::DfmParams;
use crate::model::spec::DfmSpec;
use crate::model::state_space::build_on_grid;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Optimizer {
    #[default]
    Simplex,
    QuasiNewton,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplex" | "nelder-mead" => Ok(Self::Simplex),
            "quasi-newton" | "bfgs" => Ok(Self::QuasiNewton),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateOptions {
    pub optimizer: Optimizer,
    pub max_iter: usize,
    /// Relative log-likelihood change treated as converged.
    pub tol: f64,
    pub seed: u64,
    /// Simplex restarts at the incumbent.
    pub restarts: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Simplex,
            max_iter: 2000,
            tol: 1e-8,
            seed: 0,
            restarts: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EstimationReport<T> {
    pub params_hat: DfmParams<T>,
    pub loglik: T,
    pub init_loglik: T,
    pub iterations: usize,
    pub converged: bool,
    /// Unconstrained parameters and log-likelihood after each iteration.
    pub trace: Vec<(Vec<T>, T)>,
}

/// Grid used for estimation: the configured one, else through the last
/// observation in the panel.
pub fn estimation_grid<T: Scalar>(spec: &DfmSpec, panel: &Panel<T>) -> Result<Grid> {
    match spec.grid_end {
        Some(_) => spec.grid(),
        None => {
            let end = panel.last_date().unwrap_or(spec.grid_start);
            spec.grid_through(end.max(spec.grid_start))
        }
    }
}

struct Problem<'a, T> {
    spec: &'a DfmSpec,
    grid: Grid,
    obs: Observations<T>,
}

impl<'a, T: Scalar> Problem<'a, T> {
    fn new(spec: &'a DfmSpec, panel: &Panel<T>) -> Result<Self> {
        spec.validate()?;
        if panel.series.len() != spec.indicators.len() {
            return Err(Error::Config(format!(
                "panel has {} series for {} indicators",
                panel.series.len(),
                spec.indicators.len()
            )));
        }
        let grid = estimation_grid(spec, panel)?;
        let obs = Observations::from_panel(&grid, panel)?;
        Ok(Self { spec, grid, obs })
    }

    fn loglik(&self, params: &DfmParams<T>) -> Result<T> {
        let system = build_on_grid(self.spec, params, &self.grid)?;
        log_likelihood(&system, &self.obs)
    }

    /// Log-likelihood, with any failure mapped to `-∞`.
    fn loglik_or_neg_inf(&self, params: &DfmParams<T>) -> T {
        match self.loglik(params) {
            Ok(v) if v.is_finite() => v,
            _ => T::neg_infinity(),
        }
    }
}

/// Log-likelihood of `params` on the panel.
pub fn loglik_at<T: Scalar>(spec: &DfmSpec, panel: &Panel<T>, params: &DfmParams<T>) -> Result<T> {
    Problem::new(spec, panel)?.loglik(params)
}

pub fn estimate_mle<T: Scalar>(
    spec: &DfmSpec,
    panel: &Panel<T>,
    init: &DfmParams<T>,
    options: &EstimateOptions,
) -> Result<EstimationReport<T>> {
    let problem = Problem::new(spec, panel)?;
    init.validate(spec)?;
    let transform = ParamTransform::new(spec);
    let theta0 = transform.to_unconstrained(init)?;
    let init_loglik = problem
        .loglik(init)
        .map_err(|e| Error::Initialization(format!("log-likelihood at the initial parameters: {e}")))?;
    if !init_loglik.is_finite() {
        return Err(Error::Initialization(format!(
            "log-likelihood at the initial parameters is {init_loglik}"
        )));
    }

    let objective = |theta: &[T]| -> T {
        if theta.iter().any(|v| !v.is_finite()) {
            return T::infinity();
        }
        -problem.loglik_or_neg_inf(&transform.to_params(theta))
    };
    let outcome = match options.optimizer {
        Optimizer::Simplex => nelder_mead(
            objective,
            &theta0,
            &NelderMeadOptions {
                max_iter: options.max_iter,
                tol: T::lit(options.tol),
                restarts: options.restarts,
                seed: options.seed,
                ..Default::default()
            },
        ),
        Optimizer::QuasiNewton => bfgs(
            objective,
            &theta0,
            &BfgsOptions {
                max_iter: options.max_iter,
                tol: T::lit(options.tol),
                ..Default::default()
            },
        ),
    };
    let trace: Vec<(Vec<T>, T)> = outcome.trace.iter().map(|(x, f)| (x.clone(), -*f)).collect();
    if outcome.finite_evaluations == 0 && !transform.is_empty() {
        return Err(Error::OptimizerFailure {
            message: "no finite log-likelihood away from the initial parameters".into(),
            trace: trace
                .iter()
                .map(|(x, f)| (x.iter().map(|v| v.as_f64()).collect(), f.as_f64()))
                .collect(),
        });
    }

    let (theta_hat, loglik) = if -outcome.value >= init_loglik {
        (outcome.x, -outcome.value)
    } else {
        (theta0, init_loglik)
    };
    let mut params_hat = transform.to_params(&theta_hat);
    params_hat.apply_sign_convention(spec);
    Ok(EstimationReport {
        params_hat,
        loglik,
        init_loglik,
        iterations: outcome.iterations,
        converged: outcome.converged,
        trace,
    })
}

/// Standard errors from the numerical Hessian of the log-likelihood in
/// natural coordinates (the order of [`ParamTransform::names`]).
pub fn standard_errors<T: Scalar>(spec: &DfmSpec, panel: &Panel<T>, params: &DfmParams<T>) -> Result<Vec<T>> {
    let cov = covariance(spec, panel, params)?;
    Ok(cov.diag().into_iter().map(|v| v.sqrt()).collect())
}

/// Asymptotic covariance `(-H)^{-1}` in natural coordinates.
pub fn covariance<T: Scalar>(spec: &DfmSpec, panel: &Panel<T>, params: &DfmParams<T>) -> Result<Matrix<T>> {
    let problem = Problem::new(spec, panel)?;
    let transform = ParamTransform::new(spec);
    let v0 = transform.to_natural(params);
    let n = v0.len();
    let f = |v: &[T]| problem.loglik_or_neg_inf(&transform.from_natural(v));
    let f0 = problem.loglik(params)?;

    let steps: Vec<T> = v0
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut h = T::lit(1e-4) * x.abs().max(T::lit(0.1));
            // Stay inside (-1, 1) for AR-type coordinates and above 0 for sigmas.
            let name = &transform.names()[i];
            if name.ends_with(".phi") || name.starts_with("factor.ar") {
                h = h.min((T::one() - x.abs()) * T::lit(0.25));
            }
            if name.ends_with(".sigma") {
                h = h.min(x * T::lit(0.25));
            }
            h
        })
        .collect();

    let shifted = |moves: &[(usize, T)]| {
        let mut v = v0.clone();
        for &(i, d) in moves {
            v[i] += d;
        }
        f(&v)
    };
    let mut hess = Matrix::zeros(n, n);
    for i in 0..n {
        let hi = steps[i];
        let fp = shifted(&[(i, hi)]);
        let fm = shifted(&[(i, -hi)]);
        hess[(i, i)] = (fp - f0 - f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let fpp = shifted(&[(i, hi), (j, hj)]);
            let fpm = shifted(&[(i, hi), (j, -hj)]);
            let fmp = shifted(&[(i, -hi), (j, hj)]);
            let fmm = shifted(&[(i, -hi), (j, -hj)]);
            let v = (fpp - fpm - fmp + fmm) / (T::lit(4.0) * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if !hess.is_finite() {
        return Err(Error::NumericalFailure {
            day: 0,
            detail: "non-finite Hessian entry".into(),
        });
    }
    let neg = hess.scale(-T::one());
    let chol = neg.cholesky().ok_or_else(|| Error::NumericalFailure {
        day: 0,
        detail: "Hessian is not negative definite".into(),
    })?;
    Ok(chol.inverse())
}

/// Log-likelihood along `grid` for one named coordinate, others fixed.
/// Points outside the valid region give `-∞`.
pub fn profile_likelihood<T: Scalar>(
    spec: &DfmSpec,
    panel: &Panel<T>,
    params: &DfmParams<T>,
    coordinate: &str,
    grid: &[T],
) -> Result<Vec<(T, T)>> {
    let transform = ParamTransform::new(spec);
    let idx = transform.coordinate(coordinate).ok_or_else(|| {
        Error::Config(format!(
            "unknown coordinate `{coordinate}`; expected one of {}",
            transform.names().join(", ")
        ))
    })?;
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    let problem = Problem::new(spec, panel)?;
    let base = transform.to_natural(params);
    Ok(grid
        .iter()
        .map(|&value| {
            let mut v = base.clone();
            v[idx] = value;
            (value, problem.loglik_or_neg_inf(&transform.from_natural(&v)))
        })
        .collect())
}
