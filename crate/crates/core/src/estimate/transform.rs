//! Unconstrained reparameterisation of [`DfmParams`].
//!
//! Factor AR coefficients go through their partial autocorrelations
//! (`tanh`), measurement-error AR coefficients through `tanh`, standard
//! deviations through `exp`; loadings and means are free.

use crate::error::{Error, Result};
use crate::model::params::{ar_from_partials, partials_from_ar, DfmParams, IndicatorParams};
use crate::model::spec::{DfmSpec, MeasurementError};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamTransform {
    ar_order: usize,
    ar1_errors: Vec<bool>,
    names: Vec<String>,
}

impl ParamTransform {
    pub fn new(spec: &DfmSpec) -> Self {
        let mut names: Vec<String> = (1..=spec.factor_ar_order).map(|j| format!("factor.ar{j}")).collect();
        let mut ar1_errors = Vec::with_capacity(spec.indicators.len());
        for ind in &spec.indicators {
            let ar1 = ind.measurement_error == MeasurementError::Ar1;
            names.push(format!("{}.loading", ind.id));
            names.push(format!("{}.sigma", ind.id));
            if ar1 {
                names.push(format!("{}.phi", ind.id));
            }
            names.push(format!("{}.mean", ind.id));
            ar1_errors.push(ar1);
        }
        Self {
            ar_order: spec.factor_ar_order,
            ar1_errors,
            names,
        }
    }

    /// Number of free parameters.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Coordinate names, in vector order (shared by the unconstrained and
    /// natural vectors).
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn coordinate(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn to_unconstrained<T: Scalar>(&self, params: &DfmParams<T>) -> Result<Vec<T>> {
        self.check_shape(params)?;
        let partials = partials_from_ar(&params.factor_ar)
            .ok_or_else(|| Error::Config("factor AR coefficients are not stationary".into()))?;
        let mut theta: Vec<T> = partials.into_iter().map(atanh).collect();
        for (p, &ar1) in params.indicators.iter().zip(&self.ar1_errors) {
            if !(p.sigma > T::zero()) {
                return Err(Error::Config("sigma must be positive".into()));
            }
            theta.push(p.loading);
            theta.push(p.sigma.ln());
            if ar1 {
                if !(p.phi.abs() < T::one()) {
                    return Err(Error::Config("|phi| must be below 1".into()));
                }
                theta.push(atanh(p.phi));
            }
            theta.push(p.mean);
        }
        Ok(theta)
    }

    /// Maps any finite vector to valid parameters.
    pub fn to_params<T: Scalar>(&self, theta: &[T]) -> DfmParams<T> {
        assert_eq!(theta.len(), self.len(), "parameter vector has wrong length");
        let partials: Vec<T> = theta[..self.ar_order].iter().map(|x| x.tanh()).collect();
        let mut it = theta[self.ar_order..].iter().copied();
        let indicators = self
            .ar1_errors
            .iter()
            .map(|&ar1| {
                let loading = it.next().unwrap();
                let sigma = it.next().unwrap().exp();
                let phi = if ar1 { it.next().unwrap().tanh() } else { T::zero() };
                let mean = it.next().unwrap();
                IndicatorParams {
                    loading,
                    phi,
                    sigma,
                    mean,
                }
            })
            .collect();
        DfmParams {
            factor_ar: ar_from_partials(&partials),
            indicators,
        }
    }

    /// Natural-scale vector `[ρ…, λ, σ, (φ), μ, …]`.
    pub fn to_natural<T: Scalar>(&self, params: &DfmParams<T>) -> Vec<T> {
        let mut v = params.factor_ar.clone();
        for (p, &ar1) in params.indicators.iter().zip(&self.ar1_errors) {
            v.push(p.loading);
            v.push(p.sigma);
            if ar1 {
                v.push(p.phi);
            }
            v.push(p.mean);
        }
        v
    }

    pub fn from_natural<T: Scalar>(&self, v: &[T]) -> DfmParams<T> {
        assert_eq!(v.len(), self.len(), "parameter vector has wrong length");
        let mut it = v[self.ar_order..].iter().copied();
        let indicators = self
            .ar1_errors
            .iter()
            .map(|&ar1| IndicatorParams {
                loading: it.next().unwrap(),
                sigma: it.next().unwrap(),
                phi: if ar1 { it.next().unwrap() } else { T::zero() },
                mean: it.next().unwrap(),
            })
            .collect();
        DfmParams {
            factor_ar: v[..self.ar_order].to_vec(),
            indicators,
        }
    }

    fn check_shape<T>(&self, params: &DfmParams<T>) -> Result<()> {
        if params.factor_ar.len() != self.ar_order || params.indicators.len() != self.ar1_errors.len() {
            return Err(Error::Config("parameters do not match the model".into()));
        }
        Ok(())
    }
}

fn atanh<T: Scalar>(x: T) -> T {
    T::lit(0.5) * ((T::one() + x) / (T::one() - x)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::Frequency;
    use crate::model::params::is_stationary;
    use crate::model::spec::{IndicatorSpec, Kind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(p: usize) -> DfmSpec {
        DfmSpec::new(
            vec![
                IndicatorSpec::new("w", Frequency::Weekly, Kind::Flow),
                IndicatorSpec::new("m", Frequency::Monthly, Kind::Flow),
            ],
            "2010-01-01".parse().unwrap(),
        )
        .with_ar_order(p)
    }

    #[test]
    fn names_follow_layout() {
        let t = ParamTransform::new(&spec(1));
        assert_eq!(
            t.names(),
            &["factor.ar1", "w.loading", "w.sigma", "w.mean", "m.loading", "m.sigma", "m.phi", "m.mean"]
        );
        assert_eq!(t.coordinate("m.phi"), Some(6));
        assert_eq!(t.coordinate("nope"), None);
    }

    #[test]
    fn round_trip_random_vectors() {
        for p in 1..=3 {
            let s = spec(p);
            let t = ParamTransform::new(&s);
            let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
            for _ in 0..1000 {
                let theta: Vec<f64> = (0..t.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
                let params = t.to_params(&theta);
                params.validate(&s).unwrap();
                assert!(is_stationary(&params.factor_ar));
                let back = t.to_unconstrained(&params).unwrap();
                for (a, b) in theta.iter().zip(&back) {
                    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
                }
                let nat = t.to_natural(&params);
                assert_eq!(t.from_natural(&nat), params);
            }
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let s = spec(1);
        let t = ParamTransform::new(&s);
        let mut p = DfmParams::<f64>::default_for(&s);
        p.factor_ar[0] = 1.0;
        assert!(t.to_unconstrained(&p).is_err());
    }
}
