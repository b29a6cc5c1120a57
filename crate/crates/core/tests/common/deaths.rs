//! Inverse-linked deaths fixture: `deaths(d) = -ads(d - k)` plus a weekly
//! reporting cycle and a little noise, against the 6/26 appendix path.

use super::appendix;
use chrono::{Days, NaiveDate};
use nowcast::covid::DailySeries;
use nowcast::model::Standardization;
use nowcast::vintage::{build_vintages_from_releases, extract_path};
use rand::{Rng, SeedableRng};

pub const LEAD: usize = 20;

/// Smoothed appendix index from March 2020 on, as of the 6/26 vintage.
pub fn ads_path() -> DailySeries<f64> {
    let spec = appendix::spec();
    let vintages = build_vintages_from_releases(&appendix::events(17)).unwrap();
    let v = vintages
        .iter()
        .find(|v| v.pull == appendix::ts("2020-06-26T08:30:00"))
        .unwrap();
    let path = extract_path(&spec, &appendix::params(&spec), &Standardization::identity(6), v).unwrap();
    let from: NaiveDate = "2020-03-01".parse().unwrap();
    let pts: Vec<_> = path.points.iter().filter(|p| p.date >= from).map(|p| (p.date, p.ads)).collect();
    DailySeries::from_points(&pts).unwrap()
}

pub fn deaths(ads: &DailySeries<f64>, k: usize, seed: u64) -> DailySeries<f64> {
    let n = ads.len() as f64;
    let mean = ads.values.iter().sum::<f64>() / n;
    let sd = (ads.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let start = ads.start + Days::new(k as u64);
    let values = ads
        .values
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let dow = (i + k) % 7;
            let weekly = 0.5 * (2.0 * std::f64::consts::PI * dow as f64 / 7.0).sin();
            -a + sd * (weekly + 0.2 * rng.random_range(-1.0..1.0))
        })
        .collect();
    DailySeries::new(start, values)
}
