mod common;

use common::d;
use common::oracle::{check_against_oracle, random_instance, Oracle};
use nowcast::calendar::Frequency;
use nowcast::kalman::{filter, log_likelihood, smooth, Observations};
use nowcast::linalg::Matrix;
use nowcast::model::{build_state_space, DfmParams, DfmSpec, IndicatorSpec, Kind, MeasurementRow, StateSpaceSystem};
use nowcast::Error;

fn weekly_system(start: &str, end: &str) -> StateSpaceSystem<f64> {
    let spec = DfmSpec::new(vec![IndicatorSpec::new("w", Frequency::Weekly, Kind::Flow)], d(start))
        .with_grid_end(d(end));
    let mut params = DfmParams::default_for(&spec);
    params.factor_ar = vec![0.9];
    params.indicators[0].loading = 1.0;
    params.indicators[0].sigma = 0.5;
    build_state_space(&spec, &params).unwrap()
}

#[test]
fn five_day_weekly_example_matches_joint_gaussian() {
    let sys = weekly_system("2020-03-10", "2020-03-14");
    assert_eq!(sys.len(), 5);
    let mut obs = Observations::empty(5);
    obs.insert(4, 0, 1.3);
    check_against_oracle(&sys, &obs, 1e-8).unwrap();
}

#[test]
fn three_full_weeks_match_joint_gaussian() {
    let sys = weekly_system("2020-03-01", "2020-03-21");
    let mut obs = Observations::empty(sys.len());
    obs.insert(6, 0, 0.4);
    obs.insert(13, 0, -1.1);
    obs.insert(20, 0, 2.0);
    check_against_oracle(&sys, &obs, 1e-8).unwrap();
    let fr = filter(&sys, &obs).unwrap();
    // Full weeks make the observations informative about the factor.
    assert!(fr.filtered_cov[20][(0, 0)] < fr.predicted_cov[20][(0, 0)]);
}

#[test]
fn random_instances_match_joint_gaussian() {
    for seed in 0..40 {
        let (sys, obs) = random_instance(seed);
        check_against_oracle(&sys, &obs, 1e-8).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

#[test]
fn deleting_an_observation_equals_never_having_it() {
    for seed in 100..130 {
        let (sys, obs) = random_instance(seed);
        let Some((day, slot, _)) = obs.iter().next() else { continue };
        let deleted = obs.without(day, slot);
        let rebuilt = Observations::from_days(
            (0..obs.len())
                .map(|t| obs.day(t).iter().copied().filter(|&(s, _)| t != day || s != slot).collect())
                .collect(),
        );
        let a = filter(&sys, &deleted).unwrap();
        let b = filter(&sys, &rebuilt).unwrap();
        assert_eq!(a.filtered_mean, b.filtered_mean);
        assert_eq!(a.log_likelihood, b.log_likelihood);
        check_against_oracle(&sys, &deleted, 1e-8).unwrap();
    }
}

#[test]
fn adding_an_observation_never_raises_smoothed_factor_variance() {
    let mut checked = 0;
    for seed in 200..260 {
        let (sys, obs) = random_instance(seed);
        let free = (0..sys.len()).find_map(|t| {
            sys.rows(t)
                .iter()
                .find(|r| obs.day(t).iter().all(|&(s, _)| s != r.slot))
                .map(|r| (t, r.slot))
        });
        let Some((t, slot)) = free else { continue };
        let mut more = obs.clone();
        more.insert(t, slot, 0.7);
        let before = smooth(&sys, &filter(&sys, &obs).unwrap()).unwrap();
        let after = smooth(&sys, &filter(&sys, &more).unwrap()).unwrap();
        for (b, a) in before.cov.iter().zip(&after.cov) {
            assert!(a[(0, 0)] <= b[(0, 0)] * (1.0 + 1e-10) + 1e-12, "seed {seed}");
        }
        checked += 1;
    }
    assert!(checked >= 20);
}

#[test]
fn covariances_stay_symmetric() {
    for seed in 300..330 {
        let (sys, obs) = random_instance(seed);
        let fr = filter(&sys, &obs).unwrap();
        let sm = smooth(&sys, &fr).unwrap();
        for p in fr.predicted_cov.iter().chain(&fr.filtered_cov).chain(&sm.cov) {
            assert!(p.asymmetry() < 1e-12);
        }
    }
}

#[test]
fn smoothed_covariance_is_below_filtered() {
    for seed in 400..430 {
        let (sys, obs) = random_instance(seed);
        let fr = filter(&sys, &obs).unwrap();
        let sm = smooth(&sys, &fr).unwrap();
        for (f, s) in fr.filtered_cov.iter().zip(&sm.cov) {
            let diff = f.sub(s);
            let n = diff.rows();
            // PSD check through the nalgebra eigenvalues of the difference.
            let dm = nalgebra::DMatrix::from_row_slice(n, n, diff.as_slice());
            let min = dm.symmetric_eigen().eigenvalues.min();
            assert!(min > -1e-9 * f.max_abs().max(1.0), "seed {seed}: {min}");
        }
        if let (Some(a), Some(b)) = (fr.filtered_mean.last(), sm.mean.last()) {
            assert_eq!(a, b);
            assert_eq!(fr.filtered_cov.last().unwrap(), sm.cov.last().unwrap());
        }
    }
}

fn scalar_system(init_var: f64, q: f64, h: f64, len: usize) -> StateSpaceSystem<f64> {
    let day = (
        Matrix::identity(1),
        Matrix::diagonal(&[q]),
        vec![MeasurementRow {
            slot: 0,
            loading: vec![1.0],
            intercept: 0.0,
            noise_var: h,
        }],
    );
    StateSpaceSystem::from_days(vec![0.0], Matrix::diagonal(&[init_var]), vec![day; len]).unwrap()
}

#[test]
fn noiseless_measurement_pins_the_state() {
    let sys = scalar_system(2.0, 0.0, 0.0, 1);
    let fr = filter(&sys, &Observations::from_days(vec![vec![(0, 1.7)]])).unwrap();
    assert!((fr.filtered_mean[0][0] - 1.7).abs() < 1e-15);
    assert!(fr.filtered_cov[0][(0, 0)].abs() < 1e-15);
}

#[test]
fn single_observation_log_density() {
    let sys = scalar_system(2.0, 0.5, 0.25, 1);
    let y = 0.9;
    let ll = log_likelihood(&sys, &Observations::from_days(vec![vec![(0, y)]])).unwrap();
    let s2: f64 = 2.0 + 0.5 + 0.25;
    let want = -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + y * y / s2);
    assert!((ll - want).abs() < 1e-14);
}

#[test]
fn no_observations_means_prior_and_zero_likelihood() {
    let sys = weekly_system("2020-03-01", "2020-03-21");
    let obs = Observations::empty(sys.len());
    let fr = filter(&sys, &obs).unwrap();
    assert_eq!(fr.log_likelihood, 0.0);
    let sm = smooth(&sys, &fr).unwrap();
    assert!(sm.index().iter().all(|&v| v == 0.0));
    assert!(fr.filtered_mean.iter().all(|m| m.iter().all(|&v| v == 0.0)));
    assert_eq!(Oracle::new(&sys, &obs).log_likelihood(), 0.0);
}

#[test]
fn undeclared_slot_is_a_schema_error() {
    let sys = scalar_system(1.0, 1.0, 1.0, 2);
    let obs = Observations::from_days(vec![vec![(3, 1.0)], vec![]]);
    assert!(matches!(filter(&sys, &obs), Err(Error::Schema(_))));
}

#[test]
fn indefinite_covariance_reports_the_day() {
    let sys = scalar_system(1.0, -5.0, 1.0, 3);
    match filter(&sys, &Observations::empty(3)) {
        Err(Error::NumericalFailure { day, .. }) => assert_eq!(day, 0),
        other => panic!("expected numerical failure, got {other:?}"),
    }
}
