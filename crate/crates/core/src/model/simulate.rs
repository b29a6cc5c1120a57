//! Direct simulation of the factor model.
//!
//! Draws the daily AR factor by its recursion and builds every observation
//! from its measurement equation (period average or period-end value plus
//! error). This path never touches the compiled state-space system, so it
//! doubles as an independent check on it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::calendar::{Grid, Period};
use crate::error::Result;
use crate::model::panel::Panel;
use crate::model::params::{factor_stationary_covariance, DfmParams};
use crate::model::spec::{DfmSpec, Kind, MeasurementError};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState<T> {
    /// Pre-sample factor lags drawn from the stationary distribution.
    Stationary,
    /// Pre-sample factor lags `[x_{-1}, …, x_{-p}]`.
    Fixed(Vec<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOptions<T> {
    /// Multiplies every innovation; 0 gives a shock-free run.
    pub shock_scale: T,
    pub initial: InitialState<T>,
}

impl<T: Scalar> Default for SimulationOptions<T> {
    fn default() -> Self {
        Self {
            shock_scale: T::one(),
            initial: InitialState::Stationary,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Simulation<T> {
    pub grid: Grid,
    /// Daily factor over the grid.
    pub factor: Vec<T>,
    /// Observations in model units for every period lying wholly in the grid.
    pub panel: Panel<T>,
}

pub fn simulate<T: Scalar>(spec: &DfmSpec, params: &DfmParams<T>, seed: u64) -> Result<Simulation<T>> {
    simulate_with(spec, params, seed, &SimulationOptions::default())
}

pub fn simulate_with<T: Scalar>(
    spec: &DfmSpec,
    params: &DfmParams<T>,
    seed: u64,
    options: &SimulationOptions<T>,
) -> Result<Simulation<T>> {
    spec.validate()?;
    params.validate(spec)?;
    let grid = spec.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> T { T::lit(StandardNormal.sample(&mut rng)) };
    let scale = options.shock_scale;
    let p = spec.factor_ar_order;

    let mut lags: Vec<T> = match &options.initial {
        InitialState::Fixed(v) => {
            let mut v = v.clone();
            v.resize(p, T::zero());
            v
        }
        InitialState::Stationary => {
            let cov = factor_stationary_covariance(&params.factor_ar);
            let chol = cov.cholesky().expect("stationary covariance is positive definite");
            let z: Vec<T> = (0..p).map(|_| normal()).collect();
            chol.factor().mul_vec(&z).into_iter().map(|x| x * scale).collect()
        }
    };

    let mut factor = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let mut x = scale * normal();
        for (a, l) in params.factor_ar.iter().zip(&lags) {
            x += *a * *l;
        }
        lags.rotate_right(1);
        lags[0] = x;
        factor.push(x);
    }

    let mut series = Vec::with_capacity(spec.indicators.len());
    for (ind, ip) in spec.indicators.iter().zip(&params.indicators) {
        let periods = complete_periods(&grid, ind.frequency);
        let mut err = match ind.measurement_error {
            MeasurementError::Ar1 => {
                scale * ip.sigma / (T::one() - ip.phi * ip.phi).sqrt() * normal()
            }
            MeasurementError::Iid => T::zero(),
        };
        let mut obs = Vec::with_capacity(periods.len());
        for (i, period) in periods.iter().enumerate() {
            err = match ind.measurement_error {
                MeasurementError::Ar1 if i == 0 => err,
                MeasurementError::Ar1 => ip.phi * err + scale * ip.sigma * normal(),
                MeasurementError::Iid => scale * ip.sigma * normal(),
            };
            let lo = period.start.index as usize;
            let hi = period.end.index as usize;
            let signal = if ind.kind == Kind::Flow {
                factor[lo..=hi].iter().copied().sum::<T>() / T::lit(period.n_days as f64)
            } else {
                factor[hi]
            };
            obs.push((period.end.date, ip.mean + ip.loading * signal + err));
        }
        series.push(obs);
    }

    Ok(Simulation {
        grid,
        factor,
        panel: Panel { series },
    })
}

/// Periods of `frequency` lying entirely inside the grid, in order.
pub fn complete_periods(grid: &Grid, frequency: crate::calendar::Frequency) -> Vec<Period> {
    let mut out = Vec::new();
    let mut date = grid.start();
    while date <= grid.end() {
        let period = grid.period_for(date, frequency);
        if period.start.index >= 0 && grid.contains(period.end.date) {
            out.push(period);
        }
        match period.end.date.succ_opt() {
            Some(d) => date = d,
            None => break,
        }
    }
    out
}
