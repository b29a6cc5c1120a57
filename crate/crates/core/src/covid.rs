//! HP smoothing and lead correlation of daily series against the index.

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default HP smoothing parameter for daily data.
pub const DEFAULT_LAMBDA: f64 = 1e7;

/// Contiguous daily values starting at `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct DailySeries<T> {
    pub start: NaiveDate,
    pub values: Vec<T>,
    /// True where the value was forward-filled at ingestion.
    pub filled: Vec<bool>,
}

impl<T: Scalar> DailySeries<T> {
    pub fn new(start: NaiveDate, values: Vec<T>) -> Self {
        let filled = vec![false; values.len()];
        Self { start, values, filled }
    }

    /// Builds a gap-free series from dated points, forward-filling
    /// missing days.
    pub fn from_points(points: &[(NaiveDate, T)]) -> Result<Self> {
        let Some(&(start, first)) = points.first() else {
            return Err(Error::Validation("empty daily series".into()));
        };
        let mut values = vec![first];
        let mut filled = vec![false];
        let mut prev = start;
        for &(date, v) in &points[1..] {
            if date <= prev {
                return Err(Error::Validation(format!("dates not strictly increasing at {date}")));
            }
            let gap = (date - prev).num_days();
            let last = *values.last().unwrap();
            for _ in 1..gap {
                values.push(last);
                filled.push(true);
            }
            values.push(v);
            filled.push(false);
            prev = date;
        }
        Ok(Self { start, values, filled })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Days::new(i as u64)
    }

    pub fn end(&self) -> NaiveDate {
        self.date(self.len().saturating_sub(1))
    }

    pub fn get(&self, date: NaiveDate) -> Option<T> {
        let i = (date - self.start).num_days();
        (i >= 0).then(|| self.values.get(i as usize).copied()).flatten()
    }

    pub fn points(&self) -> Vec<(NaiveDate, T)> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.date(i), v))
            .collect()
    }

    fn with_values(&self, values: Vec<T>) -> Self {
        Self {
            start: self.start,
            values,
            filled: self.filled.clone(),
        }
    }
}

/// Solves a symmetric positive-definite pentadiagonal system by banded
/// LDLᵀ. `d0`, `d1`, `d2` are the main, first and second superdiagonals.
pub fn solve_pentadiagonal<T: Scalar>(d0: &[T], d1: &[T], d2: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = d0.len();
    if rhs.len() != n || d1.len() + 1 < n || d2.len() + 2 < n {
        return Err(Error::Contract("pentadiagonal band lengths do not match".into()));
    }
    let mut d = vec![T::zero(); n];
    let mut l1 = vec![T::zero(); n];
    let mut l2 = vec![T::zero(); n];
    for i in 0..n {
        let mut di = d0[i];
        if i >= 1 {
            di -= l1[i - 1] * l1[i - 1] * d[i - 1];
        }
        if i >= 2 {
            di -= l2[i - 2] * l2[i - 2] * d[i - 2];
        }
        if !(di > T::zero()) {
            return Err(Error::NumericalFailure {
                day: i,
                detail: "pentadiagonal system is not positive definite".into(),
            });
        }
        d[i] = di;
        if i + 1 < n {
            let mut a = d1[i];
            if i >= 1 {
                a -= l2[i - 1] * l1[i - 1] * d[i - 1];
            }
            l1[i] = a / di;
        }
        if i + 2 < n {
            l2[i] = d2[i] / di;
        }
    }
    let mut z = rhs.to_vec();
    for i in 0..n {
        if i >= 1 {
            z[i] = z[i] - l1[i - 1] * z[i - 1];
        }
        if i >= 2 {
            z[i] = z[i] - l2[i - 2] * z[i - 2];
        }
    }
    for i in 0..n {
        z[i] /= d[i];
    }
    for i in (0..n).rev() {
        if i + 1 < n {
            z[i] = z[i] - l1[i] * z[i + 1];
        }
        if i + 2 < n {
            z[i] = z[i] - l2[i] * z[i + 2];
        }
    }
    Ok(z)
}

/// HP trend of `y`: the minimiser of `Σ(y−τ)² + λ Σ(Δ²τ)²`.
///
/// Solved as `τ = y − D′(I/λ + DD′)⁻¹ D y`, the same system as
/// `(I + λD′D)τ = y` rearranged so that large `λ` stays well conditioned.
pub fn hp_trend<T: Scalar>(y: &[T], lambda: T) -> Result<Vec<T>> {
    let n = y.len();
    if n < 3 {
        return Err(Error::Validation(format!("HP filter needs at least 3 points, got {n}")));
    }
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::Validation(format!("HP lambda must be positive, got {lambda}")));
    }
    let m = n - 2;
    let two = T::lit(2.0);
    let dy: Vec<T> = (0..m).map(|i| y[i] - two * y[i + 1] + y[i + 2]).collect();
    let d0 = vec![T::lit(6.0) + T::one() / lambda; m];
    let d1 = vec![T::lit(-4.0); m.saturating_sub(1)];
    let d2 = vec![T::one(); m.saturating_sub(2)];
    let v = solve_pentadiagonal(&d0, &d1, &d2, &dy)?;
    let mut trend = y.to_vec();
    for (i, &vi) in v.iter().enumerate() {
        trend[i] -= vi;
        trend[i + 1] += two * vi;
        trend[i + 2] -= vi;
    }
    Ok(trend)
}

/// Trend and cycle (`y − trend`).
pub fn hp_filter<T: Scalar>(series: &DailySeries<T>, lambda: T) -> Result<(DailySeries<T>, DailySeries<T>)> {
    let trend = hp_trend(&series.values, lambda)?;
    let cycle = series.values.iter().zip(&trend).map(|(&y, &t)| y - t).collect();
    Ok((series.with_values(trend), series.with_values(cycle)))
}

/// Value at day `d` becomes the value at `d + k`; the series loses `k`
/// days at the end.
pub fn lead<T: Scalar>(series: &DailySeries<T>, k: usize) -> Result<DailySeries<T>> {
    if k >= series.len() {
        return Err(Error::OutOfRange(format!(
            "lead of {k} days on a {}-day series",
            series.len()
        )));
    }
    Ok(DailySeries {
        start: series.start,
        values: series.values[k..].to_vec(),
        filled: series.filled[k..].to_vec(),
    })
}

/// Values of `a` and `b` on their common dates.
pub fn align<T: Scalar>(a: &DailySeries<T>, b: &DailySeries<T>) -> Vec<(NaiveDate, T, T)> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let start = a.start.max(b.start);
    let end = a.end().min(b.end());
    let mut out = Vec::new();
    let mut date = start;
    while date <= end {
        out.push((date, a.get(date).unwrap(), b.get(date).unwrap()));
        date = date + Days::new(1);
    }
    out
}

/// Pearson correlation over the common dates.
pub fn correlate<T: Scalar>(a: &DailySeries<T>, b: &DailySeries<T>) -> Result<T> {
    let pairs = align(a, b);
    pearson(&pairs.iter().map(|p| (p.1, p.2)).collect::<Vec<_>>())
}

fn pearson<T: Scalar>(pairs: &[(T, T)]) -> Result<T> {
    if pairs.len() < 3 {
        return Err(Error::Validation(format!(
            "correlation needs at least 3 common days, got {}",
            pairs.len()
        )));
    }
    let n = T::from_usize_lossy(pairs.len());
    let ma = pairs.iter().map(|p| p.0).sum::<T>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if !(saa > T::zero()) || !(sbb > T::zero()) {
        return Err(Error::ZeroVariance("a correlated series is constant".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).max(-T::one()).min(T::one()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineResult<T> {
    /// `(date, index, smoothed led deaths)` on the common dates.
    pub aligned: Vec<(NaiveDate, T, T)>,
    pub correlation: T,
}

/// Leads `deaths` by `k` days, HP-smooths the led series, aligns it with
/// the index and correlates.
pub fn covid_pipeline<T: Scalar>(
    index: &DailySeries<T>,
    deaths: &DailySeries<T>,
    k: usize,
    lambda: T,
) -> Result<PipelineResult<T>> {
    let led = lead(deaths, k)?;
    let (trend, _) = hp_filter(&led, lambda)?;
    let aligned = align(index, &trend);
    let correlation = pearson(&aligned.iter().map(|p| (p.1, p.2)).collect::<Vec<_>>())?;
    Ok(PipelineResult { aligned, correlation })
}
