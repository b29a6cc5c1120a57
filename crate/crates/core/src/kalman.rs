//! Kalman filter and fixed-interval smoother with missing data.
//!
//! Missing observations are handled by deleting rows: a day with no data
//! only predicts, a day with some data updates on the rows present. The
//! covariance update uses the Joseph form and is symmetrised every step.
//!
//! The smoother runs the backward `(r, N)` recursion and writes the result
//! in terms of filtered moments,
//!
//! ```text
//! x̂_t = a_{t|t} + P_{t|t} T_{t+1}ᵀ r_t
//! V_t = P_{t|t} - P_{t|t} T_{t+1}ᵀ N_t T_{t+1} P_{t|t}
//! ```
//!
//! which never inverts a predicted covariance (those are singular on days
//! when an accumulator resets) and makes the last smoothed moments equal
//! the last filtered ones by construction.

use crate::calendar::Grid;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::panel::Panel;
use crate::model::state_space::StateSpaceSystem;
use crate::scalar::Scalar;

/// Relative tolerance for negative diagonal entries in a covariance.
const PSD_TOLERANCE: f64 = 1e-9;

/// Observed values by day: `(slot, value)` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observations<T> {
    days: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> Observations<T> {
    pub fn empty(n_days: usize) -> Self {
        Self {
            days: vec![Vec::new(); n_days],
        }
    }

    pub fn from_days(days: Vec<Vec<(usize, T)>>) -> Self {
        Self { days }
    }

    /// Places each panel observation on its period-end day. Observations
    /// ending before the grid start are dropped; ones past the grid end
    /// are an error.
    pub fn from_panel(grid: &Grid, panel: &Panel<T>) -> Result<Self> {
        let mut obs = Self::empty(grid.len());
        for (slot, series) in panel.series.iter().enumerate() {
            for &(end, value) in series {
                if end < grid.start() {
                    continue;
                }
                let day = grid.day(end)?;
                obs.insert(day.index as usize, slot, value);
            }
        }
        Ok(obs)
    }

    pub fn insert(&mut self, day: usize, slot: usize, value: T) {
        if day >= self.days.len() {
            self.days.resize(day + 1, Vec::new());
        }
        let entry = &mut self.days[day];
        match entry.iter_mut().find(|(s, _)| *s == slot) {
            Some(e) => e.1 = value,
            None => entry.push((slot, value)),
        }
    }

    /// Copy with the observation at `(day, slot)` removed.
    pub fn without(&self, day: usize, slot: usize) -> Self {
        let mut out = self.clone();
        if let Some(entry) = out.days.get_mut(day) {
            entry.retain(|(s, _)| *s != slot);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn day(&self, t: usize) -> &[(usize, T)] {
        self.days.get(t).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self) -> usize {
        self.days.iter().map(Vec::len).sum()
    }

    /// Last day index carrying an observation.
    pub fn last_observed_day(&self) -> Option<usize> {
        self.days.iter().rposition(|d| !d.is_empty())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.days
            .iter()
            .enumerate()
            .flat_map(|(t, d)| d.iter().map(move |&(s, v)| (t, s, v)))
    }
}

/// Prediction-error quantities of one updating day.
#[derive(Clone, Debug)]
pub struct Innovation<T> {
    pub slots: Vec<usize>,
    /// Prediction errors `y - d - Z a`.
    pub errors: Vec<T>,
    /// Prediction-error covariance `F = Z P Zᵀ + H`.
    pub variance: Matrix<T>,
    z: Matrix<T>,
    f_inv: Matrix<T>,
    gain: Matrix<T>,
}

#[derive(Clone, Debug)]
pub struct FilterResult<T> {
    pub predicted_mean: Vec<Vec<T>>,
    pub predicted_cov: Vec<Matrix<T>>,
    pub filtered_mean: Vec<Vec<T>>,
    pub filtered_cov: Vec<Matrix<T>>,
    pub innovations: Vec<Option<Innovation<T>>>,
    pub log_likelihood: T,
}

impl<T: Scalar> FilterResult<T> {
    pub fn len(&self) -> usize {
        self.filtered_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filtered_mean.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct SmootherResult<T> {
    pub mean: Vec<Vec<T>>,
    pub cov: Vec<Matrix<T>>,
    factor_slot: usize,
}

impl<T: Scalar> SmootherResult<T> {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Smoothed factor means: the extracted index.
    pub fn index(&self) -> Vec<T> {
        self.mean.iter().map(|m| m[self.factor_slot]).collect()
    }

    /// Smoothed factor standard deviations.
    pub fn index_std(&self) -> Vec<T> {
        self.cov
            .iter()
            .map(|c| c[(self.factor_slot, self.factor_slot)].max(T::zero()).sqrt())
            .collect()
    }
}

struct Step<T> {
    pred_mean: Vec<T>,
    pred_cov: Matrix<T>,
    mean: Vec<T>,
    cov: Matrix<T>,
    innovation: Option<Innovation<T>>,
    loglik: T,
}

fn step<T: Scalar>(
    system: &StateSpaceSystem<T>,
    obs: &Observations<T>,
    t: usize,
    prev_mean: &[T],
    prev_cov: &Matrix<T>,
) -> Result<Step<T>> {
    let tr = system.transition(t);
    let pred_mean = tr.mul_vec(prev_mean);
    let mut pred_cov = prev_cov.sandwich(tr).add(system.shock_cov(t));
    pred_cov.symmetrize();
    check_cov(&pred_cov, t, "predicted")?;

    let rows = system.rows(t);
    let present = obs.day(t);
    for (slot, _) in present {
        if !rows.iter().any(|r| r.slot == *slot) {
            return Err(Error::Schema(format!(
                "observation for slot {slot} on day {t}, which has no measurement row"
            )));
        }
    }
    let used: Vec<(usize, T)> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| present.iter().find(|(s, _)| *s == r.slot).map(|&(_, v)| (i, v)))
        .collect();
    if used.is_empty() {
        return Ok(Step {
            mean: pred_mean.clone(),
            cov: pred_cov.clone(),
            pred_mean,
            pred_cov,
            innovation: None,
            loglik: T::zero(),
        });
    }

    let n = system.dim();
    let m = used.len();
    let mut z = Matrix::zeros(m, n);
    let mut errors = Vec::with_capacity(m);
    let mut h = Vec::with_capacity(m);
    let mut slots = Vec::with_capacity(m);
    for (i, &(ri, y)) in used.iter().enumerate() {
        let row = &rows[ri];
        for j in 0..n {
            z[(i, j)] = row.loading[j];
        }
        errors.push(y - row.intercept - crate::linalg::dot(&row.loading, &pred_mean));
        h.push(row.noise_var);
        slots.push(row.slot);
    }
    let pzt = pred_cov.matmul_t(&z);
    let mut variance = z.matmul(&pzt);
    for (i, &hi) in h.iter().enumerate() {
        variance[(i, i)] += hi;
    }
    variance.symmetrize();
    let chol = variance.cholesky().ok_or_else(|| Error::NumericalFailure {
        day: t,
        detail: "prediction-error covariance is not positive definite".into(),
    })?;
    let f_inv = chol.inverse();
    let gain = pzt.matmul(&f_inv);
    let mut mean = pred_mean.clone();
    for (mi, ki) in mean.iter_mut().zip(gain.mul_vec(&errors)) {
        *mi += ki;
    }
    let ikz = Matrix::identity(n).sub(&gain.matmul(&z));
    let mut cov = pred_cov.sandwich(&ikz).add(&Matrix::diagonal(&h).sandwich(&gain));
    cov.symmetrize();
    check_cov(&cov, t, "filtered")?;

    let quad = crate::linalg::dot(&errors, &chol.solve_vec(&errors));
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    let loglik = -T::lit(0.5) * (T::from_usize_lossy(m) * two_pi.ln() + chol.log_det() + quad);
    if !loglik.is_finite() {
        return Err(Error::NumericalFailure {
            day: t,
            detail: "non-finite likelihood contribution".into(),
        });
    }
    Ok(Step {
        pred_mean,
        pred_cov,
        mean,
        cov,
        innovation: Some(Innovation {
            slots,
            errors,
            variance,
            z,
            f_inv,
            gain,
        }),
        loglik,
    })
}

fn check_cov<T: Scalar>(cov: &Matrix<T>, day: usize, what: &str) -> Result<()> {
    if !cov.is_finite() {
        return Err(Error::NumericalFailure {
            day,
            detail: format!("{what} covariance is not finite"),
        });
    }
    let tol = T::lit(PSD_TOLERANCE) * cov.max_abs().max(T::one());
    if cov.diag().into_iter().any(|d| d < -tol) {
        return Err(Error::NumericalFailure {
            day,
            detail: format!("{what} covariance has a negative variance"),
        });
    }
    Ok(())
}

fn check_lengths<T: Scalar>(system: &StateSpaceSystem<T>, obs: &Observations<T>) -> Result<()> {
    if obs.len() > system.len() {
        return Err(Error::Contract(format!(
            "{} observation days for a {}-day system",
            obs.len(),
            system.len()
        )));
    }
    Ok(())
}

pub fn filter<T: Scalar>(system: &StateSpaceSystem<T>, obs: &Observations<T>) -> Result<FilterResult<T>> {
    check_lengths(system, obs)?;
    let len = system.len();
    let mut out = FilterResult {
        predicted_mean: Vec::with_capacity(len),
        predicted_cov: Vec::with_capacity(len),
        filtered_mean: Vec::with_capacity(len),
        filtered_cov: Vec::with_capacity(len),
        innovations: Vec::with_capacity(len),
        log_likelihood: T::zero(),
    };
    let mut mean = system.init_mean().to_vec();
    let mut cov = system.init_cov().clone();
    for t in 0..len {
        let s = step(system, obs, t, &mean, &cov)?;
        out.log_likelihood += s.loglik;
        mean = s.mean.clone();
        cov = s.cov.clone();
        out.predicted_mean.push(s.pred_mean);
        out.predicted_cov.push(s.pred_cov);
        out.filtered_mean.push(s.mean);
        out.filtered_cov.push(s.cov);
        out.innovations.push(s.innovation);
    }
    Ok(out)
}

/// Gaussian log-likelihood by prediction-error decomposition.
pub fn log_likelihood<T: Scalar>(system: &StateSpaceSystem<T>, obs: &Observations<T>) -> Result<T> {
    check_lengths(system, obs)?;
    let mut mean = system.init_mean().to_vec();
    let mut cov = system.init_cov().clone();
    let mut total = T::zero();
    let last = obs.last_observed_day().map_or(0, |d| d + 1);
    // Days after the last observation cannot change the likelihood.
    for t in 0..last {
        let s = step(system, obs, t, &mean, &cov)?;
        total += s.loglik;
        mean = s.mean;
        cov = s.cov;
    }
    Ok(total)
}

pub fn smooth<T: Scalar>(system: &StateSpaceSystem<T>, fr: &FilterResult<T>) -> Result<SmootherResult<T>> {
    let len = system.len();
    let n = system.dim();
    if fr.len() != len || fr.filtered_mean.first().is_some_and(|m| m.len() != n) {
        return Err(Error::Contract(
            "filter result does not belong to this system".into(),
        ));
    }
    let mut mean = vec![Vec::new(); len];
    let mut cov = vec![Matrix::zeros(0, 0); len];
    let mut r = vec![T::zero(); n];
    let mut big_n = Matrix::zeros(n, n);
    for t in (0..len).rev() {
        let a = &fr.filtered_mean[t];
        let p = &fr.filtered_cov[t];
        let (u, m) = if t + 1 < len {
            let tr = system.transition(t + 1);
            (tr.tr_mul_vec(&r), big_n.sandwich(&tr.transpose()))
        } else {
            (vec![T::zero(); n], Matrix::zeros(n, n))
        };
        if t + 1 == len {
            mean[t] = a.clone();
            cov[t] = p.clone();
        } else {
            let shift = p.mul_vec(&u);
            mean[t] = a.iter().zip(shift).map(|(&x, s)| x + s).collect();
            let mut c = p.sub(&m.sandwich(p));
            c.symmetrize();
            cov[t] = c;
        }
        match &fr.innovations[t] {
            Some(inn) => {
                let ikz_t = Matrix::identity(n).sub(&inn.gain.matmul(&inn.z)).transpose();
                let fv = inn.f_inv.mul_vec(&inn.errors);
                r = inn
                    .z
                    .tr_mul_vec(&fv)
                    .into_iter()
                    .zip(ikz_t.mul_vec(&u))
                    .map(|(x, y)| x + y)
                    .collect();
                big_n = inn.f_inv.sandwich(&inn.z.transpose()).add(&m.sandwich(&ikz_t));
                big_n.symmetrize();
            }
            None => {
                r = u;
                big_n = m;
            }
        }
    }
    Ok(SmootherResult {
        mean,
        cov,
        factor_slot: system.layout().factor_slot(),
    })
}
