//! Model-ready observation panels: transformed, optionally standardized.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::calendar::period_bounds;
use crate::error::{Error, Result};
use crate::model::spec::{DfmSpec, Transform};
use crate::scalar::Scalar;

/// One series per model indicator (spec order), each a list of
/// `(period_end, value)` in model units, strictly increasing in date.
#[derive(Clone, Debug, PartialEq)]
pub struct Panel<T> {
    pub series: Vec<Vec<(NaiveDate, T)>>,
}

impl<T: Scalar> Panel<T> {
    pub fn empty(n_indicators: usize) -> Self {
        Self {
            series: vec![Vec::new(); n_indicators],
        }
    }

    pub fn n_observations(&self) -> usize {
        self.series.iter().map(Vec::len).sum()
    }

    /// Latest period end present in any series.
    pub fn last_date(&self) -> Option<NaiveDate> {
        self.series.iter().filter_map(|s| s.last().map(|o| o.0)).max()
    }

    /// Keeps only observations whose period ends on or before `cut`.
    pub fn truncated(&self, cut: NaiveDate) -> Self {
        Self {
            series: self
                .series
                .iter()
                .map(|s| s.iter().copied().filter(|(d, _)| *d <= cut).collect())
                .collect(),
        }
    }

    /// Builds a panel from raw per-indicator series keyed by indicator id,
    /// applying each indicator's transform. Ids absent from `raw` give
    /// empty series; ids not in the model are a schema error.
    pub fn from_raw(spec: &DfmSpec, raw: &BTreeMap<String, Vec<(NaiveDate, T)>>) -> Result<Self> {
        for id in raw.keys() {
            if spec.index_of(id).is_none() {
                return Err(Error::Schema(format!("indicator `{id}` is not in the model")));
            }
        }
        let series = spec
            .indicators
            .iter()
            .map(|ind| {
                let obs = raw.get(&ind.id).map(Vec::as_slice).unwrap_or(&[]);
                apply_transform(obs, ind.transform, |end| {
                    period_bounds(end, ind.frequency, spec.week_end).0
                })
                .map_err(|e| Error::Validation(format!("{}: {e}", ind.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { series })
    }

    /// Inverse of [`Panel::from_raw`] for gap-free series: integrates
    /// differenced series from a base level (0 for differences, 100 for
    /// log differences) placed at the end of the period before the first
    /// observation.
    pub fn to_raw(&self, spec: &DfmSpec) -> BTreeMap<String, Vec<(NaiveDate, T)>> {
        let hundred = T::lit(100.0);
        spec.indicators
            .iter()
            .zip(&self.series)
            .map(|(ind, obs)| {
                let mut out = Vec::with_capacity(obs.len() + 1);
                if let (Some(&(first, _)), true) = (obs.first(), ind.transform != Transform::Level) {
                    let base_end = period_bounds(first, ind.frequency, spec.week_end).0.pred_opt();
                    let base = if ind.transform == Transform::LogDifference { hundred } else { T::zero() };
                    out.push((base_end.expect("representable date"), base));
                }
                let mut level = out.first().map_or(T::zero(), |o| o.1);
                for &(end, v) in obs {
                    level = match ind.transform {
                        Transform::Level => v,
                        Transform::Difference => level + v,
                        Transform::LogDifference => level * (v / hundred).exp(),
                    };
                    out.push((end, level));
                }
                (ind.id.clone(), out)
            })
            .collect()
    }
}

/// Applies `transform` across consecutive periods. `period_start` maps a
/// period end to its first day; an observation only gets a differenced
/// value when the previous observation is for the immediately preceding
/// period.
pub fn apply_transform<T: Scalar>(
    obs: &[(NaiveDate, T)],
    transform: Transform,
    period_start: impl Fn(NaiveDate) -> NaiveDate,
) -> Result<Vec<(NaiveDate, T)>> {
    if transform == Transform::Level {
        return Ok(obs.to_vec());
    }
    let hundred = T::lit(100.0);
    let mut out = Vec::with_capacity(obs.len());
    for w in obs.windows(2) {
        let ((prev_end, prev), (end, value)) = (w[0], w[1]);
        if period_start(end).pred_opt() != Some(prev_end) {
            continue;
        }
        let v = match transform {
            Transform::Difference => value - prev,
            Transform::LogDifference => {
                if !(prev > T::zero() && value > T::zero()) {
                    return Err(Error::Validation(format!(
                        "log difference needs positive levels ({prev_end}: {prev}, {end}: {value})"
                    )));
                }
                hundred * (value.ln() - prev.ln())
            }
            Transform::Level => unreachable!(),
        };
        out.push((end, v));
    }
    Ok(out)
}

/// Per-indicator centring and scaling applied before the model sees data.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization<T> {
    /// `(center, scale)` per indicator, spec order.
    pub moments: Vec<(T, T)>,
}

impl<T: Scalar> Standardization<T> {
    pub fn identity(n_indicators: usize) -> Self {
        Self {
            moments: vec![(T::zero(), T::one()); n_indicators],
        }
    }

    /// Sample mean and standard deviation of each series. Series with fewer
    /// than two points or zero spread keep the identity for that indicator.
    pub fn fit(panel: &Panel<T>) -> Self {
        let moments = panel
            .series
            .iter()
            .map(|s| {
                if s.len() < 2 {
                    return (T::zero(), T::one());
                }
                let n = T::from_usize_lossy(s.len());
                let mean = s.iter().map(|o| o.1).sum::<T>() / n;
                let var = s.iter().map(|o| (o.1 - mean) * (o.1 - mean)).sum::<T>() / (n - T::one());
                let sd = var.sqrt();
                if sd > T::zero() && sd.is_finite() {
                    (mean, sd)
                } else {
                    (mean, T::one())
                }
            })
            .collect();
        Self { moments }
    }

    pub fn apply(&self, panel: &Panel<T>) -> Result<Panel<T>> {
        if self.moments.len() != panel.series.len() {
            return Err(Error::Config(format!(
                "standardization has {} indicators, panel has {}",
                self.moments.len(),
                panel.series.len()
            )));
        }
        Ok(Panel {
            series: panel
                .series
                .iter()
                .zip(&self.moments)
                .map(|(s, &(c, sc))| s.iter().map(|&(d, v)| (d, (v - c) / sc)).collect())
                .collect(),
        })
    }
}
