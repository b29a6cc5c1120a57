//! Synthetic archive shaped like the spring-2020 release calendar.
//!
//! History through mid-March 2020 is simulated from the model. The 35
//! releases from 3/17 to 7/2 then arrive at their published timestamps.
//! Pandemic-era values are multiples of each series' historical standard
//! deviation, sized like the public level changes of the period against a
//! normal-times spread (claims: about 10k a week; payrolls: 100k a month;
//! production, income and sales: half a percent; GDP: 2.5 points).

use chrono::{NaiveDate, NaiveDateTime};
use nowcast::calendar::Frequency;
use nowcast::model::{simulate, DfmParams, DfmSpec, IndicatorSpec, Kind, MeasurementError};
use nowcast::vintage::ReleaseEvent;

/// `(timestamp, indicator, period end, value in standard deviations)`;
/// `None` takes the simulated value for that period.
pub const SCHEDULE: [(&str, &str, &str, Option<f64>); 35] = [
    ("2020-03-17T09:15:00", "ip", "2020-02-29", None),
    ("2020-03-19T08:30:00", "claims", "2020-03-14", Some(7.0)),
    ("2020-03-26T08:30:00", "claims", "2020-03-21", Some(300.0)),
    ("2020-03-26T08:30:00", "gdp", "2019-12-31", None),
    ("2020-03-27T08:30:00", "mts", "2020-01-31", None),
    ("2020-03-27T08:30:00", "pilt", "2020-02-29", None),
    ("2020-04-02T08:30:00", "claims", "2020-03-28", Some(356.0)),
    ("2020-04-03T08:30:00", "payroll", "2020-03-31", Some(-7.0)),
    ("2020-04-09T08:30:00", "claims", "2020-04-04", Some(-25.0)),
    ("2020-04-15T09:15:00", "ip", "2020-03-31", Some(-11.0)),
    ("2020-04-16T08:30:00", "claims", "2020-04-11", Some(-138.0)),
    ("2020-04-23T08:30:00", "claims", "2020-04-18", Some(-80.0)),
    ("2020-04-29T08:30:00", "gdp", "2020-03-31", Some(-2.7)),
    ("2020-04-30T08:30:00", "claims", "2020-04-25", Some(-58.0)),
    ("2020-04-30T08:30:00", "mts", "2020-02-29", Some(-0.5)),
    ("2020-04-30T08:30:00", "pilt", "2020-03-31", Some(-7.0)),
    ("2020-05-07T08:30:00", "claims", "2020-05-02", Some(-69.0)),
    ("2020-05-08T08:30:00", "payroll", "2020-04-30", Some(-205.0)),
    ("2020-05-14T08:30:00", "claims", "2020-05-09", Some(-20.0)),
    ("2020-05-15T09:15:00", "ip", "2020-04-30", Some(-22.0)),
    ("2020-05-21T08:30:00", "claims", "2020-05-16", Some(-54.0)),
    ("2020-05-28T08:30:00", "claims", "2020-05-23", Some(-32.0)),
    ("2020-05-28T08:30:00", "gdp", "2020-03-31", Some(-2.8)),
    ("2020-05-29T08:30:00", "mts", "2020-03-31", Some(-10.0)),
    ("2020-05-29T08:30:00", "pilt", "2020-04-30", Some(-20.0)),
    ("2020-06-04T08:30:00", "claims", "2020-05-30", Some(-23.0)),
    ("2020-06-05T08:30:00", "payroll", "2020-05-31", Some(25.0)),
    ("2020-06-11T08:30:00", "claims", "2020-06-06", Some(-33.0)),
    ("2020-06-16T09:15:00", "ip", "2020-05-31", Some(3.0)),
    ("2020-06-18T08:30:00", "claims", "2020-06-13", Some(-6.0)),
    ("2020-06-25T08:30:00", "claims", "2020-06-20", Some(-3.0)),
    ("2020-06-25T08:30:00", "gdp", "2020-03-31", Some(-2.8)),
    ("2020-06-26T08:30:00", "mts", "2020-04-30", Some(-15.0)),
    ("2020-06-26T08:30:00", "pilt", "2020-05-31", Some(3.0)),
    ("2020-07-02T08:30:00", "claims", "2020-06-27", Some(-5.0)),
];

/// Vintages holding the claims-explosion week and the first strong payroll.
pub const CLAIMS_EXPLOSION: &str = "2020-03-26T08:30:00";
pub const STRONG_EMPLOYMENT: &str = "2020-06-05T08:30:00";

/// Last period end already published before the first scheduled release.
const KNOWN_THROUGH: [(&str, &str); 6] = [
    ("claims", "2020-03-07"),
    ("payroll", "2020-02-29"),
    ("ip", "2020-01-31"),
    ("pilt", "2020-01-31"),
    ("mts", "2019-12-31"),
    ("gdp", "2019-12-31"),
];

pub fn ts(s: &str) -> NaiveDateTime {
    s.parse().unwrap()
}

fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

/// Six indicators in model units (no transform).
pub fn spec() -> DfmSpec {
    let flow = |id: &str, f| IndicatorSpec::new(id, f, Kind::Flow);
    DfmSpec::new(
        vec![
            flow("claims", Frequency::Weekly).with_error(MeasurementError::Iid),
            flow("payroll", Frequency::Monthly),
            flow("ip", Frequency::Monthly),
            flow("pilt", Frequency::Monthly),
            flow("mts", Frequency::Monthly),
            flow("gdp", Frequency::Quarterly),
        ],
        date("2017-01-01"),
    )
    .with_reference("payroll")
}

pub fn params(spec: &DfmSpec) -> DfmParams<f64> {
    let mut p = DfmParams::default_for(spec);
    p.factor_ar = vec![0.98];
    let rows = [
        (-0.5, 1.0, 0.0),
        (1.0, 0.4, 0.3),
        (0.8, 0.5, 0.3),
        (0.6, 0.6, 0.3),
        (0.7, 0.6, 0.3),
        (0.9, 0.4, 0.3),
    ];
    for (ip, &(loading, sigma, phi)) in p.indicators.iter_mut().zip(&rows) {
        ip.loading = loading;
        ip.sigma = sigma;
        ip.phi = phi;
        ip.mean = 0.0;
    }
    p
}

fn mean_sd(v: &[(NaiveDate, f64)]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().map(|p| p.1).sum::<f64>() / n;
    let var = v.iter().map(|p| (p.1 - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Background history (stamped at the first scheduled release, so it is
/// part of every vintage) followed by the 35 scheduled releases.
pub fn events(seed: u64) -> Vec<ReleaseEvent<f64>> {
    let spec = spec();
    let p = params(&spec);
    let sim = simulate(&spec.clone().with_grid_end(date("2020-03-16")), &p, seed).unwrap();
    let first = ts(SCHEDULE[0].0);
    let mut out = Vec::new();
    for (k, ind) in spec.indicators.iter().enumerate() {
        let through = date(KNOWN_THROUGH.iter().find(|e| e.0 == ind.id).unwrap().1);
        for &(period_end, value) in sim.panel.series[k].iter().filter(|o| o.0 <= through) {
            out.push(ReleaseEvent {
                timestamp: first,
                indicator: ind.id.clone(),
                period_end,
                value,
            });
        }
    }
    for &(stamp, id, end, shock) in &SCHEDULE {
        let k = spec.index_of(id).unwrap();
        let series = &sim.panel.series[k];
        let end = date(end);
        let value = match shock {
            Some(z) => {
                let (m, sd) = mean_sd(series);
                m + z * sd
            }
            None => series.iter().find(|o| o.0 == end).expect("simulated period").1,
        };
        out.push(ReleaseEvent {
            timestamp: ts(stamp),
            indicator: id.to_string(),
            period_end: end,
            value,
        });
    }
    out
}
