//! Recession depth, duration and severity on an index path.
//!
//! Peak months belong to expansions and trough months to recessions, so an
//! episode covers the first day of the month after the peak through the
//! last day of the trough month.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::OutOfRange(format!("month {month}")));
        }
        Ok(Self { year, month })
    }

    fn ordinal(self) -> i64 {
        self.year as i64 * 12 + self.month as i64 - 1
    }

    fn from_ordinal(n: i64) -> Self {
        Self {
            year: n.div_euclid(12) as i32,
            month: n.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn succ(self) -> Self {
        Self::from_ordinal(self.ordinal() + 1)
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }

    pub fn last_day(self) -> NaiveDate {
        self.succ().first_day().pred_opt().expect("representable date")
    }

    pub fn of(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month(),
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    /// Accepts `YYYY-MM` or any ISO date (the day is ignored).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(d) = s.parse::<NaiveDate>() {
            return Ok(Self::of(d));
        }
        let bad = || Error::Validation(format!("`{s}` is not a YYYY-MM month"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        Self::new(year, month).map_err(|_| bad())
    }
}

/// Months strictly after the peak through the trough inclusive.
pub fn duration_months(peak: YearMonth, trough: YearMonth) -> Result<u32> {
    if trough < peak {
        return Err(Error::Validation(format!("trough {trough} precedes peak {peak}")));
    }
    Ok((trough.ordinal() - peak.ordinal()) as u32)
}

pub fn severity<T: Scalar>(depth: T, duration: u32) -> T {
    depth * T::from_usize_lossy(duration as usize)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecessionEpisode {
    pub peak: YearMonth,
    pub trough: YearMonth,
    pub peak_announced: Option<NaiveDate>,
    pub trough_announced: Option<NaiveDate>,
}

impl RecessionEpisode {
    pub fn new(peak: YearMonth, trough: YearMonth) -> Result<Self> {
        duration_months(peak, trough)?;
        Ok(Self {
            peak,
            trough,
            peak_announced: None,
            trough_announced: None,
        })
    }

    pub fn duration(&self) -> u32 {
        duration_months(self.peak, self.trough).expect("checked at construction")
    }

    /// First and last day of the episode, inclusive. `None` when the
    /// trough is the peak month (no recession days).
    pub fn day_set(&self) -> Option<(NaiveDate, NaiveDate)> {
        (self.trough > self.peak).then(|| (self.peak.succ().first_day(), self.trough.last_day()))
    }
}

/// One NBER recession with its published duration, depth and severity.
#[derive(Clone, Debug, PartialEq)]
pub struct PublishedRow {
    pub episode: RecessionEpisode,
    pub duration: u32,
    pub depth: f64,
    pub severity: f64,
}

/// The nine NBER recessions since 1960 with the published ADS metrics.
pub fn nber_table() -> Vec<PublishedRow> {
    let ym = |y, m| YearMonth { year: y, month: m };
    let date = |y, m, d| NaiveDate::from_ymd_opt(y, m, d);
    let rows = [
        (ym(1960, 4), None, ym(1961, 2), None, 10, 2.7, 27.0),
        (ym(1969, 12), None, ym(1970, 11), None, 11, 2.8, 30.8),
        (ym(1973, 11), None, ym(1975, 3), None, 16, 4.7, 75.2),
        (ym(1980, 1), date(1980, 6, 3), ym(1980, 7), date(1981, 7, 8), 6, 3.6, 21.6),
        (ym(1981, 7), date(1982, 1, 6), ym(1982, 11), date(1983, 7, 8), 16, 2.9, 46.4),
        (ym(1990, 7), date(1991, 4, 25), ym(1991, 3), date(1992, 12, 22), 8, 1.7, 13.6),
        (ym(2001, 3), date(2001, 11, 26), ym(2001, 11), date(2003, 7, 17), 8, 1.5, 12.0),
        (ym(2007, 12), date(2008, 12, 1), ym(2009, 6), date(2010, 9, 20), 18, 4.3, 77.4),
        (ym(2020, 2), date(2020, 6, 6), ym(2020, 4), date(2021, 7, 19), 2, 26.6, 53.2),
    ];
    rows.into_iter()
        .map(|(peak, pa, trough, ta, duration, depth, severity)| PublishedRow {
            episode: RecessionEpisode {
                peak,
                trough,
                peak_announced: pa,
                trough_announced: ta,
            },
            duration,
            depth,
            severity,
        })
        .collect()
}

/// Values of a contiguous daily series over `[from, to]`.
fn window<T: Scalar>(path: &[(NaiveDate, T)], from: NaiveDate, to: NaiveDate) -> Result<&[(NaiveDate, T)]> {
    let first = path
        .first()
        .ok_or_else(|| Error::OutOfRange("empty path".into()))?
        .0;
    let lo = (from - first).num_days();
    let hi = (to - first).num_days();
    if lo < 0 || hi < lo || hi as usize >= path.len() {
        return Err(Error::OutOfRange(format!(
            "path {}..{} does not cover {from}..{to}",
            first,
            path.last().map_or(first, |p| p.0)
        )));
    }
    let slice = &path[lo as usize..=hi as usize];
    if slice[0].0 != from || slice[slice.len() - 1].0 != to {
        return Err(Error::OutOfRange(format!("path has gaps within {from}..{to}")));
    }
    Ok(slice)
}

/// Earliest day attaining the minimum over `[from, to]`.
pub fn trough_day<T: Scalar>(path: &[(NaiveDate, T)], from: NaiveDate, to: NaiveDate) -> Result<NaiveDate> {
    let w = window(path, from, to)?;
    let mut best = w[0];
    for &p in &w[1..] {
        if p.1 < best.1 {
            best = p;
        }
    }
    Ok(best.0)
}

/// `|min|` of the path over `[from, to]`.
pub fn depth<T: Scalar>(path: &[(NaiveDate, T)], from: NaiveDate, to: NaiveDate) -> Result<T> {
    let w = window(path, from, to)?;
    let min = w.iter().map(|p| p.1).fold(T::infinity(), T::min);
    if min > T::zero() {
        log::warn!("index stays positive over {from}..{to}; depth uses |min| = {min}");
    }
    Ok(min.abs())
}

/// First day on or after `from` with a non-negative value.
pub fn zero_crossing_recovery<T: Scalar>(path: &[(NaiveDate, T)], from: NaiveDate) -> Option<NaiveDate> {
    path.iter()
        .filter(|p| p.0 >= from)
        .find(|p| p.1 >= T::zero())
        .map(|p| p.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeReport<T> {
    pub episode: RecessionEpisode,
    pub duration: u32,
    /// `None` when the path does not cover the episode.
    pub depth: Option<T>,
    pub severity: Option<T>,
    pub trough_day: Option<NaiveDate>,
}

pub fn report<T: Scalar>(path: &[(NaiveDate, T)], episodes: &[RecessionEpisode]) -> Vec<EpisodeReport<T>> {
    episodes
        .iter()
        .map(|ep| {
            let duration = ep.duration();
            let (depth, trough) = match ep.day_set() {
                Some((from, to)) => (depth(path, from, to).ok(), trough_day(path, from, to).ok()),
                None => (None, None),
            };
            EpisodeReport {
                episode: ep.clone(),
                duration,
                depth,
                severity: depth.map(|d| severity(d, duration)),
                trough_day: trough,
            }
        })
        .collect()
}
