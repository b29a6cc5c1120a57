//! Time-varying linear-Gaussian state-space systems.
//!
//! A system describes, for each day `t = 0..n`,
//!
//! ```text
//! x_t = T_t x_{t-1} + η_t,        η_t ~ N(0, Q_t)
//! y_t = d_t + Z_t x_t + ε_t,      ε_t ~ N(0, H_t),  H_t diagonal
//! ```
//!
//! with `x_{-1} ~ N(a, P)`. Only indicators whose period ends on day `t`
//! have a row in `Z_t`.
//!
//! The factor model compiles to this form with state
//! `[x_t, …, x_{t-p+1}, C_1, u_1, C_2, u_2, …]`, where `C_k` accumulates
//! `x_t / n_days(P)` over the current period of flow indicator `k` and
//! resets on the period's first day, and `u_k` is an AR(1) measurement
//! error that steps once per period of indicator `k`.

use std::collections::HashMap;

use chrono::NaiveDate;

use crate::calendar::Grid;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::params::{factor_stationary_covariance, DfmParams};
use crate::model::spec::{DfmSpec, Kind, MeasurementError};
use crate::scalar::Scalar;

/// Prior variance of accumulator states before their first reset.
pub const CUMULATOR_PRIOR_VARIANCE: f64 = 1e7;

/// One measurement equation row `y = intercept + loading · x + ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRow<T> {
    /// Observation slot (indicator index) the row measures.
    pub slot: usize,
    pub loading: Vec<T>,
    pub intercept: T,
    /// Variance of ε; may be zero.
    pub noise_var: T,
}

/// Where each model component lives in the state vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateLayout {
    pub dim: usize,
    /// Slots `0..factor_lags` hold `x_t, …, x_{t-p+1}`.
    pub factor_lags: usize,
    pub cumulators: Vec<Option<usize>>,
    pub error_states: Vec<Option<usize>>,
}

impl StateLayout {
    /// Layout for a system with no model structure; slot 0 is read as the factor.
    pub fn generic(dim: usize) -> Self {
        Self {
            dim,
            factor_lags: 1.min(dim),
            cumulators: Vec::new(),
            error_states: Vec::new(),
        }
    }

    pub fn factor_slot(&self) -> usize {
        0
    }
}

#[derive(Clone, Debug)]
pub struct StateSpaceSystem<T> {
    layout: StateLayout,
    init_mean: Vec<T>,
    init_cov: Matrix<T>,
    transitions: Vec<Matrix<T>>,
    shock_covs: Vec<Matrix<T>>,
    /// Index into `transitions` / `shock_covs` per day.
    regime: Vec<usize>,
    rows: Vec<Vec<MeasurementRow<T>>>,
}

impl<T: Scalar> StateSpaceSystem<T> {
    /// General system from per-day `(T_t, Q_t, rows_t)`.
    pub fn from_days(
        init_mean: Vec<T>,
        init_cov: Matrix<T>,
        days: Vec<(Matrix<T>, Matrix<T>, Vec<MeasurementRow<T>>)>,
    ) -> Result<Self> {
        let dim = init_mean.len();
        let mut transitions = Vec::with_capacity(days.len());
        let mut shock_covs = Vec::with_capacity(days.len());
        let mut rows = Vec::with_capacity(days.len());
        for (t, q, r) in days {
            transitions.push(t);
            shock_covs.push(q);
            rows.push(r);
        }
        let regime = (0..transitions.len()).collect();
        let sys = Self {
            layout: StateLayout::generic(dim),
            init_mean,
            init_cov,
            transitions,
            shock_covs,
            regime,
            rows,
        };
        sys.check_dimensions()?;
        Ok(sys)
    }

    fn check_dimensions(&self) -> Result<()> {
        let n = self.init_mean.len();
        let bad = |what: &str| Err(Error::Config(format!("state-space {what} has wrong dimensions")));
        if (self.init_cov.rows(), self.init_cov.cols()) != (n, n) {
            return bad("initial covariance");
        }
        if self.regime.len() != self.rows.len() {
            return bad("day table");
        }
        for (t, q) in self.transitions.iter().zip(&self.shock_covs) {
            if (t.rows(), t.cols()) != (n, n) || (q.rows(), q.cols()) != (n, n) {
                return bad("transition or shock covariance");
            }
        }
        for day in &self.rows {
            for (i, r) in day.iter().enumerate() {
                if r.loading.len() != n {
                    return bad("measurement row");
                }
                if day[..i].iter().any(|o| o.slot == r.slot) {
                    return Err(Error::Config(format!("duplicate measurement slot {}", r.slot)));
                }
            }
        }
        Ok(())
    }

    /// Number of days.
    pub fn len(&self) -> usize {
        self.regime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regime.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.init_mean.len()
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn init_mean(&self) -> &[T] {
        &self.init_mean
    }

    pub fn init_cov(&self) -> &Matrix<T> {
        &self.init_cov
    }

    pub fn transition(&self, t: usize) -> &Matrix<T> {
        &self.transitions[self.regime[t]]
    }

    pub fn shock_cov(&self, t: usize) -> &Matrix<T> {
        &self.shock_covs[self.regime[t]]
    }

    pub fn rows(&self, t: usize) -> &[MeasurementRow<T>] {
        &self.rows[t]
    }

    /// Total number of measurement rows over all days.
    pub fn n_rows(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Number of distinct `(T_t, Q_t)` pairs stored.
    pub fn n_regimes(&self) -> usize {
        self.transitions.len()
    }
}

/// Compiles the model over `spec.grid_start ..= spec.grid_end`.
pub fn build_state_space<T: Scalar>(spec: &DfmSpec, params: &DfmParams<T>) -> Result<StateSpaceSystem<T>> {
    let grid = spec.grid()?;
    build_on_grid(spec, params, &grid)
}

/// Compiles the model over `spec.grid_start ..= end`.
pub fn build_state_space_through<T: Scalar>(
    spec: &DfmSpec,
    params: &DfmParams<T>,
    end: NaiveDate,
) -> Result<StateSpaceSystem<T>> {
    let grid = spec.grid_through(end)?;
    build_on_grid(spec, params, &grid)
}

pub fn build_on_grid<T: Scalar>(
    spec: &DfmSpec,
    params: &DfmParams<T>,
    grid: &Grid,
) -> Result<StateSpaceSystem<T>> {
    spec.validate()?;
    params.validate(spec)?;

    let p = spec.factor_ar_order;
    let mut next = p;
    let mut cumulators = Vec::with_capacity(spec.indicators.len());
    let mut error_states = Vec::with_capacity(spec.indicators.len());
    for ind in &spec.indicators {
        cumulators.push(ind.needs_cumulator().then(|| {
            next += 1;
            next - 1
        }));
        error_states.push((ind.measurement_error == MeasurementError::Ar1).then(|| {
            next += 1;
            next - 1
        }));
    }
    let layout = StateLayout {
        dim: next,
        factor_lags: p,
        cumulators,
        error_states,
    };
    let n = layout.dim;

    let mut init_cov = Matrix::zeros(n, n);
    let factor_cov = factor_stationary_covariance(&params.factor_ar);
    for i in 0..p {
        for j in 0..p {
            init_cov[(i, j)] = factor_cov[(i, j)];
        }
    }
    for (k, ip) in params.indicators.iter().enumerate() {
        if let Some(c) = layout.cumulators[k] {
            init_cov[(c, c)] = T::lit(CUMULATOR_PRIOR_VARIANCE);
        }
        if let Some(e) = layout.error_states[k] {
            init_cov[(e, e)] = ip.sigma * ip.sigma / (T::one() - ip.phi * ip.phi);
        }
    }

    let mut transitions = Vec::new();
    let mut shock_covs = Vec::new();
    let mut regime = Vec::with_capacity(grid.len());
    let mut rows = Vec::with_capacity(grid.len());
    let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();

    for day in grid.days() {
        let date = day.date;
        let mut key = Vec::with_capacity(2 * spec.indicators.len());
        let mut day_rows = Vec::new();
        for (k, ind) in spec.indicators.iter().enumerate() {
            let period = grid.period_for(date, ind.frequency);
            let starts = period.start.date == date;
            if layout.cumulators[k].is_some() {
                key.push(starts as u32);
                key.push(period.n_days);
            }
            if layout.error_states[k].is_some() {
                key.push(starts as u32);
            }
            if period.end.date == date {
                let ip = &params.indicators[k];
                let mut loading = vec![T::zero(); n];
                match layout.cumulators[k] {
                    Some(c) => loading[c] = ip.loading,
                    None => loading[0] = ip.loading,
                }
                let noise_var = match layout.error_states[k] {
                    Some(e) => {
                        loading[e] = T::one();
                        T::zero()
                    }
                    None => ip.sigma * ip.sigma,
                };
                day_rows.push(MeasurementRow {
                    slot: k,
                    loading,
                    intercept: ip.mean,
                    noise_var,
                });
            }
        }
        let idx = match seen.get(&key) {
            Some(&i) => i,
            None => {
                let (t, q) = day_matrices(spec, params, &layout, grid, date);
                transitions.push(t);
                shock_covs.push(q);
                seen.insert(key, transitions.len() - 1);
                transitions.len() - 1
            }
        };
        regime.push(idx);
        rows.push(day_rows);
    }

    let sys = StateSpaceSystem {
        layout,
        init_mean: vec![T::zero(); n],
        init_cov,
        transitions,
        shock_covs,
        regime,
        rows,
    };
    sys.check_dimensions()?;
    Ok(sys)
}

fn day_matrices<T: Scalar>(
    spec: &DfmSpec,
    params: &DfmParams<T>,
    layout: &StateLayout,
    grid: &Grid,
    date: NaiveDate,
) -> (Matrix<T>, Matrix<T>) {
    let n = layout.dim;
    let p = layout.factor_lags;
    let mut t = Matrix::zeros(n, n);
    let mut q = Matrix::zeros(n, n);
    for (j, &a) in params.factor_ar.iter().enumerate() {
        t[(0, j)] = a;
    }
    for i in 1..p {
        t[(i, i - 1)] = T::one();
    }
    // Loadings of the factor innovation on each state.
    let mut g = vec![T::zero(); n];
    g[0] = T::one();
    for (k, ind) in spec.indicators.iter().enumerate() {
        let period = grid.period_for(date, ind.frequency);
        let starts = period.start.date == date;
        if let Some(c) = layout.cumulators[k] {
            debug_assert_eq!(ind.kind, Kind::Flow);
            let w = T::one() / T::lit(period.n_days as f64);
            for (j, &a) in params.factor_ar.iter().enumerate() {
                t[(c, j)] = w * a;
            }
            t[(c, c)] = if starts { T::zero() } else { T::one() };
            g[c] = w;
        }
        if let Some(e) = layout.error_states[k] {
            let ip = &params.indicators[k];
            if starts {
                t[(e, e)] = ip.phi;
                q[(e, e)] = ip.sigma * ip.sigma;
            } else {
                t[(e, e)] = T::one();
            }
        }
    }
    for i in 0..n {
        if g[i] == T::zero() {
            continue;
        }
        for j in 0..n {
            q[(i, j)] += g[i] * g[j];
        }
    }
    (t, q)
}
