#![allow(dead_code)]

pub mod appendix;
pub mod deaths;
pub mod oracle;

use chrono::NaiveDate;

pub fn d(s: &str) -> NaiveDate {
    s.parse().unwrap()
}
