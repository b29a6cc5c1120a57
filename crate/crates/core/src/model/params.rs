//! Numeric parameters of the factor model and AR-polynomial helpers.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::spec::{DfmSpec, MeasurementError};
use crate::scalar::Scalar;

/// Per-indicator measurement parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorParams<T> {
    /// Loading on the (averaged) factor.
    pub loading: T,
    /// AR(1) coefficient of the measurement error; 0 for iid errors.
    pub phi: T,
    /// Measurement-error innovation standard deviation.
    pub sigma: T,
    /// Intercept in transformed-data units.
    pub mean: T,
}

/// Model parameters. The factor innovation standard deviation is pinned to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DfmParams<T> {
    pub factor_ar: Vec<T>,
    pub indicators: Vec<IndicatorParams<T>>,
}

impl<T: Scalar> DfmParams<T> {
    /// Neutral starting point: ρ₁ = 0.9, λ = 1, σ = 1, φ = 0, μ = 0.
    pub fn default_for(spec: &DfmSpec) -> Self {
        let mut factor_ar = vec![T::zero(); spec.factor_ar_order];
        factor_ar[0] = T::lit(0.9);
        Self {
            factor_ar,
            indicators: spec
                .indicators
                .iter()
                .map(|_| IndicatorParams {
                    loading: T::one(),
                    phi: T::zero(),
                    sigma: T::one(),
                    mean: T::zero(),
                })
                .collect(),
        }
    }

    pub fn validate(&self, spec: &DfmSpec) -> Result<()> {
        if self.factor_ar.len() != spec.factor_ar_order {
            return Err(Error::Config(format!(
                "{} factor AR coefficients for a model of order {}",
                self.factor_ar.len(),
                spec.factor_ar_order
            )));
        }
        if self.indicators.len() != spec.indicators.len() {
            return Err(Error::Config(format!(
                "{} indicator parameter sets for {} indicators",
                self.indicators.len(),
                spec.indicators.len()
            )));
        }
        if !is_stationary(&self.factor_ar) {
            return Err(Error::Config(format!(
                "factor AR coefficients {:?} are not stationary",
                self.factor_ar
            )));
        }
        for (p, ind) in self.indicators.iter().zip(&spec.indicators) {
            if !(p.sigma > T::zero()) || !p.sigma.is_finite() {
                return Err(Error::Config(format!("{}: sigma must be positive", ind.id)));
            }
            if !p.loading.is_finite() || !p.mean.is_finite() {
                return Err(Error::Config(format!("{}: non-finite loading or mean", ind.id)));
            }
            match ind.measurement_error {
                MeasurementError::Ar1 if !(p.phi.abs() < T::one()) => {
                    return Err(Error::Config(format!("{}: |phi| must be below 1", ind.id)));
                }
                MeasurementError::Iid if p.phi != T::zero() => {
                    return Err(Error::Config(format!(
                        "{}: iid measurement error must have phi = 0",
                        ind.id
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Flips the global sign so the reference indicator loads positively.
    pub fn apply_sign_convention(&mut self, spec: &DfmSpec) {
        let r = spec.reference_index();
        if self.indicators[r].loading < T::zero() {
            for p in &mut self.indicators {
                p.loading = -p.loading;
            }
        }
    }

    pub fn cast<U: Scalar>(&self) -> DfmParams<U> {
        DfmParams {
            factor_ar: self.factor_ar.iter().map(|&a| U::lit(a.as_f64())).collect(),
            indicators: self
                .indicators
                .iter()
                .map(|p| IndicatorParams {
                    loading: U::lit(p.loading.as_f64()),
                    phi: U::lit(p.phi.as_f64()),
                    sigma: U::lit(p.sigma.as_f64()),
                    mean: U::lit(p.mean.as_f64()),
                })
                .collect(),
        }
    }
}

/// AR coefficients from partial autocorrelations (Durbin-Levinson forward step).
pub fn ar_from_partials<T: Scalar>(partials: &[T]) -> Vec<T> {
    let mut phi: Vec<T> = Vec::with_capacity(partials.len());
    for (k, &r) in partials.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - r * prev[k - 1 - j];
        }
        phi.push(r);
    }
    phi
}

/// Partial autocorrelations of a stationary AR polynomial; `None` when
/// the polynomial has a root on or inside the unit circle.
pub fn partials_from_ar<T: Scalar>(ar: &[T]) -> Option<Vec<T>> {
    let p = ar.len();
    let mut phi = ar.to_vec();
    let mut partials = vec![T::zero(); p];
    for k in (0..p).rev() {
        let r = phi[k];
        if !(r.abs() < T::one()) {
            return None;
        }
        partials[k] = r;
        let denom = T::one() - r * r;
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = (prev[j] + r * prev[k - 1 - j]) / denom;
        }
        phi.truncate(k);
    }
    Some(partials)
}

pub fn is_stationary<T: Scalar>(ar: &[T]) -> bool {
    ar.iter().all(|a| a.is_finite()) && partials_from_ar(ar).is_some()
}

/// Companion matrix of `x_t = Σ a_j x_{t-j} + e_t`.
pub fn companion<T: Scalar>(ar: &[T]) -> Matrix<T> {
    let p = ar.len();
    let mut m = Matrix::zeros(p, p);
    for (j, &a) in ar.iter().enumerate() {
        m[(0, j)] = a;
    }
    for i in 1..p {
        m[(i, i - 1)] = T::one();
    }
    m
}

/// Solves `P = A P Aᵀ + Q` for stable `A` by squaring (doubling).
pub fn stationary_covariance<T: Scalar>(a: &Matrix<T>, q: &Matrix<T>) -> Matrix<T> {
    let mut p = q.clone();
    let mut a_pow = a.clone();
    for _ in 0..128 {
        let next = p.add(&p.sandwich(&a_pow));
        a_pow = a_pow.matmul(&a_pow);
        let delta = next.sub(&p).max_abs();
        p = next;
        if delta <= T::epsilon() * p.max_abs() || a_pow.max_abs() == T::zero() {
            break;
        }
    }
    p.symmetrize();
    p
}

/// Stationary covariance of the factor lag block `[x_t, …, x_{t-p+1}]`
/// with unit innovation variance.
pub fn factor_stationary_covariance<T: Scalar>(ar: &[T]) -> Matrix<T> {
    let p = ar.len();
    let mut q = Matrix::zeros(p, p);
    q[(0, 0)] = T::one();
    stationary_covariance(&companion(ar), &q)
}
