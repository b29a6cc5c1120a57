//! Daily grid and the weekly/monthly/quarterly periods laid over it.
//!
//! The grid has no gaps: weekends and holidays are ordinary days. Weekly
//! periods end on a configurable weekday (Saturday by default, the US
//! initial-claims reference week).

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Weekly,
    Monthly,
    Quarterly,
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frequency::Daily => "daily",
            Frequency::Weekly => "weekly",
            Frequency::Monthly => "monthly",
            Frequency::Quarterly => "quarterly",
        })
    }
}

impl FromStr for Frequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "daily" => Ok(Frequency::Daily),
            "weekly" => Ok(Frequency::Weekly),
            "monthly" => Ok(Frequency::Monthly),
            "quarterly" => Ok(Frequency::Quarterly),
            other => Err(Error::Config(format!("unknown frequency `{other}`"))),
        }
    }
}

/// A calendar date together with its ordinal on the model grid.
///
/// `index` is relative to the grid start and may be negative or past the
/// grid end for period boundaries that stick out of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Day {
    pub date: NaiveDate,
    pub index: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Period {
    pub frequency: Frequency,
    pub start: Day,
    pub end: Day,
    pub n_days: u32,
}

impl Period {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start.date <= date && date <= self.end.date
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}..{}", self.frequency, self.start.date, self.end.date)
    }
}

/// Calendar bounds `(first, last)` of the period of `frequency` containing `date`.
pub fn period_bounds(date: NaiveDate, frequency: Frequency, week_end: Weekday) -> (NaiveDate, NaiveDate) {
    match frequency {
        Frequency::Daily => (date, date),
        Frequency::Weekly => {
            let ahead = (7 + week_end.num_days_from_monday() as i64
                - date.weekday().num_days_from_monday() as i64)
                % 7;
            let end = date + chrono::Duration::days(ahead);
            (end - chrono::Duration::days(6), end)
        }
        Frequency::Monthly => month_bounds(date.year(), date.month()),
        Frequency::Quarterly => {
            let first_month = 3 * ((date.month() - 1) / 3) + 1;
            let (start, _) = month_bounds(date.year(), first_month);
            let (_, end) = month_bounds(date.year(), first_month + 2);
            (start, end)
        }
    }
}

fn month_bounds(year: i32, month: u32) -> (NaiveDate, NaiveDate) {
    let start = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = start
        .checked_add_months(chrono::Months::new(1))
        .expect("date in range");
    (start, next.pred_opt().expect("date in range"))
}

/// The model's contiguous daily grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    start: NaiveDate,
    end: NaiveDate,
    week_end: Weekday,
}

impl Grid {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::OutOfRange(format!(
                "grid end {end} precedes grid start {start}"
            )));
        }
        Ok(Self {
            start,
            end,
            week_end: Weekday::Sat,
        })
    }

    pub fn with_week_end(mut self, week_end: Weekday) -> Self {
        self.week_end = week_end;
        self
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn week_end(&self) -> Weekday {
        self.week_end
    }

    /// Number of grid days.
    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    /// Grid-relative `Day` for any date, without range checking.
    pub fn locate(&self, date: NaiveDate) -> Day {
        Day {
            date,
            index: (date - self.start).num_days(),
        }
    }

    pub fn day(&self, date: NaiveDate) -> Result<Day> {
        if !self.contains(date) {
            return Err(Error::OutOfRange(format!(
                "{date} outside grid {}..{}",
                self.start, self.end
            )));
        }
        Ok(self.locate(date))
    }

    /// Day at grid position `index`. Panics past the grid end.
    pub fn day_at(&self, index: usize) -> Day {
        assert!(index < self.len(), "grid index {index} out of range");
        Day {
            date: self.start + Days::new(index as u64),
            index: index as i64,
        }
    }

    pub fn days(&self) -> impl Iterator<Item = Day> + '_ {
        (0..self.len()).map(move |i| self.day_at(i))
    }

    pub fn enclosing_period(&self, day: Day, frequency: Frequency) -> Result<Period> {
        if !self.contains(day.date) {
            return Err(Error::OutOfRange(format!(
                "{} outside grid {}..{}",
                day.date, self.start, self.end
            )));
        }
        Ok(self.period_for(day.date, frequency))
    }

    /// Period containing `date`; `date` may lie outside the grid.
    pub fn period_for(&self, date: NaiveDate, frequency: Frequency) -> Period {
        let (first, last) = period_bounds(date, frequency, self.week_end);
        Period {
            frequency,
            start: self.locate(first),
            end: self.locate(last),
            n_days: (last - first).num_days() as u32 + 1,
        }
    }

    /// The period of `frequency` that ends exactly on `end`.
    pub fn period_ending(&self, end: NaiveDate, frequency: Frequency) -> Result<Period> {
        let period = self.period_for(end, frequency);
        if period.end.date != end {
            return Err(Error::Validation(format!(
                "{end} is not the last day of a {frequency} period (that period ends {})",
                period.end.date
            )));
        }
        Ok(period)
    }

    /// True when `date` is the first calendar day of its `frequency` period.
    pub fn starts_period(&self, date: NaiveDate, frequency: Frequency) -> bool {
        period_bounds(date, frequency, self.week_end).0 == date
    }
}

/// Every day of `period`, in order.
pub fn period_days(period: &Period) -> Vec<Day> {
    (0..period.n_days as i64)
        .map(|k| Day {
            date: period.start.date + chrono::Duration::days(k),
            index: period.start.index + k,
        })
        .collect()
}

pub fn parse_weekday(s: &str) -> Result<Weekday> {
    s.trim()
        .parse::<Weekday>()
        .map_err(|_| Error::Config(format!("unknown weekday `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn grid() -> Grid {
        Grid::new(d("2019-01-01"), d("2021-12-31")).unwrap()
    }

    #[test]
    fn leap_february() {
        let g = grid();
        let p = g.enclosing_period(g.day(d("2020-02-15")).unwrap(), Frequency::Monthly).unwrap();
        assert_eq!(p.start.date, d("2020-02-01"));
        assert_eq!(p.end.date, d("2020-02-29"));
        assert_eq!(p.n_days, 29);
        assert_eq!(period_days(&p).len(), 29);
        let p21 = g.period_for(d("2021-02-10"), Frequency::Monthly);
        assert_eq!(period_days(&p21).len(), 28);
    }

    #[test]
    fn second_quarter_2020() {
        let g = grid();
        let p = g.enclosing_period(g.day(d("2020-04-01")).unwrap(), Frequency::Quarterly).unwrap();
        assert_eq!(p.start.date, d("2020-04-01"));
        assert_eq!(p.end.date, d("2020-06-30"));
        assert_eq!(p.n_days, 91);
    }

    #[test]
    fn claims_reference_weeks_end_saturday() {
        let g = grid();
        let p = g.enclosing_period(g.day(d("2020-03-14")).unwrap(), Frequency::Weekly).unwrap();
        assert_eq!(p.end.date, d("2020-03-14"));
        assert_eq!(p.start.date, d("2020-03-08"));
        let w = g.period_ending(d("2020-03-21"), Frequency::Weekly).unwrap();
        let days = period_days(&w);
        assert_eq!(days.len(), 7);
        assert_eq!(days.last().unwrap().date, d("2020-03-21"));
        assert_eq!(days[0].date, d("2020-03-15"));
        assert!(g.period_ending(d("2020-03-20"), Frequency::Weekly).is_err());
    }

    #[test]
    fn configurable_week_end() {
        let g = grid().with_week_end(Weekday::Fri);
        let p = g.period_for(d("2020-03-14"), Frequency::Weekly);
        assert_eq!(p.end.date, d("2020-03-20"));
    }

    #[test]
    fn outside_grid_is_an_error() {
        let g = grid();
        let outside = g.locate(d("2018-12-31"));
        assert!(matches!(
            g.enclosing_period(outside, Frequency::Monthly),
            Err(Error::OutOfRange(_))
        ));
        assert!(g.day(d("2022-01-01")).is_err());
    }

    #[test]
    fn period_indices_are_grid_relative() {
        let g = Grid::new(d("2020-01-15"), d("2020-03-31")).unwrap();
        let p = g.period_for(d("2020-01-20"), Frequency::Monthly);
        assert_eq!(p.start.index, -14);
        assert_eq!(p.end.index, 16);
        assert_eq!(p.n_days as i64, p.end.index - p.start.index + 1);
    }

    fn freq() -> impl Strategy<Value = Frequency> {
        prop_oneof![
            Just(Frequency::Daily),
            Just(Frequency::Weekly),
            Just(Frequency::Monthly),
            Just(Frequency::Quarterly)
        ]
    }

    proptest! {
        #[test]
        fn round_trip_and_partition(offset in 0usize..1095, f in freq()) {
            let g = grid();
            let day = g.day_at(offset);
            let p = g.enclosing_period(day, f).unwrap();
            prop_assert!(period_days(&p).contains(&day));
            prop_assert_eq!(p.n_days as i64, p.end.index - p.start.index + 1);
            // Neighbouring periods abut: the next period starts the day after this one ends.
            let next = g.period_for(p.end.date.succ_opt().unwrap(), f);
            prop_assert_eq!(next.start.index, p.end.index + 1);
        }

        #[test]
        fn monotone_in_day_order(a in 0usize..1095, b in 0usize..1095, f in freq()) {
            let g = grid();
            let (a, b) = (a.min(b), a.max(b));
            let pa = g.enclosing_period(g.day_at(a), f).unwrap();
            let pb = g.enclosing_period(g.day_at(b), f).unwrap();
            prop_assert!(pa.start.index <= pb.start.index);
        }
    }
}
