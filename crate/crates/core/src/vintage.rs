//! Data vintages, per-vintage index extraction and replay.
//!
//! A vintage is everything known at one pull timestamp. Replaying a list of
//! vintages gives one smoothed path per vintage (the path plot) and the
//! final value of each path (the dot plot).

use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveDateTime};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{estimate_mle, EstimateOptions};
use crate::kalman::{filter, smooth, Observations};
use crate::model::{build_state_space_through, DfmParams, DfmSpec, Panel, Standardization};
use crate::scalar::Scalar;

/// Observations known at one pull timestamp, raw (untransformed) values
/// keyed by indicator id.
#[derive(Clone, Debug, PartialEq)]
pub struct VintageDataset<T> {
    pub pull: NaiveDateTime,
    pub series: BTreeMap<String, Vec<(NaiveDate, T)>>,
}

impl<T: Scalar> VintageDataset<T> {
    pub fn new(pull: NaiveDateTime) -> Self {
        Self {
            pull,
            series: BTreeMap::new(),
        }
    }

    /// Compact label used for file names: `YYYYMMDDTHHMMSS`.
    pub fn label(&self) -> String {
        timestamp_label(self.pull)
    }

    pub fn n_observations(&self) -> usize {
        self.series.values().map(Vec::len).sum()
    }

    pub fn last_period_end(&self) -> Option<NaiveDate> {
        self.series.values().filter_map(|s| s.last().map(|o| o.0)).max()
    }

    /// Checks ordering and that nothing ends after the pull date.
    pub fn validate(&self) -> Result<()> {
        let pull_date = self.pull.date();
        for (id, obs) in &self.series {
            for (i, &(end, _)) in obs.iter().enumerate() {
                if end > pull_date {
                    return Err(Error::Validation(format!(
                        "{id}: observation for {end} is after the pull date {pull_date}"
                    )));
                }
                if i > 0 && obs[i - 1].0 >= end {
                    return Err(Error::Validation(format!(
                        "{id}: period ends not strictly increasing at {end}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Observations whose period ends on or before `cut`.
    pub fn truncated(&self, cut: NaiveDate) -> Self {
        Self {
            pull: self.pull,
            series: self
                .series
                .iter()
                .map(|(id, s)| (id.clone(), s.iter().copied().filter(|o| o.0 <= cut).collect()))
                .collect(),
        }
    }
}

pub fn timestamp_label(ts: NaiveDateTime) -> String {
    ts.format("%Y%m%dT%H%M%S").to_string()
}

/// One timestamped indicator release.
#[derive(Clone, Debug, PartialEq)]
pub struct ReleaseEvent<T> {
    pub timestamp: NaiveDateTime,
    pub indicator: String,
    pub period_end: NaiveDate,
    pub value: T,
}

/// One vintage per distinct release timestamp, cumulative. A later event
/// for the same indicator and period replaces the earlier value.
pub fn build_vintages_from_releases<T: Scalar>(events: &[ReleaseEvent<T>]) -> Result<Vec<VintageDataset<T>>> {
    let mut sorted: Vec<&ReleaseEvent<T>> = events.iter().collect();
    sorted.sort_by_key(|e| e.timestamp);
    let mut known: BTreeMap<String, BTreeMap<NaiveDate, T>> = BTreeMap::new();
    let mut out: Vec<VintageDataset<T>> = Vec::new();
    for (i, e) in sorted.iter().enumerate() {
        if e.timestamp.date() < e.period_end {
            return Err(Error::Validation(format!(
                "release of {} for {} is dated {}, before the period ends",
                e.indicator, e.period_end, e.timestamp
            )));
        }
        known
            .entry(e.indicator.clone())
            .or_default()
            .insert(e.period_end, e.value);
        let last_of_batch = sorted.get(i + 1).is_none_or(|n| n.timestamp != e.timestamp);
        if last_of_batch {
            out.push(VintageDataset {
                pull: e.timestamp,
                series: known
                    .iter()
                    .map(|(id, m)| (id.clone(), m.iter().map(|(&d, &v)| (d, v)).collect()))
                    .collect(),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathPoint<T> {
    pub date: NaiveDate,
    pub ads: T,
    pub std: T,
}

/// Smoothed index of one vintage.
#[derive(Clone, Debug, PartialEq)]
pub struct Path<T> {
    pub pull: NaiveDateTime,
    pub points: Vec<PathPoint<T>>,
    /// Filtered factor mean on the last day of the path.
    pub filtered_final: T,
}

impl<T: Scalar> Path<T> {
    pub fn last(&self) -> Option<&PathPoint<T>> {
        self.points.last()
    }

    pub fn value_at(&self, date: NaiveDate) -> Option<T> {
        let first = self.points.first()?.date;
        let i = (date - first).num_days();
        if i < 0 {
            return None;
        }
        self.points.get(i as usize).map(|p| p.ads)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DotSeries<T> {
    pub dots: Vec<(NaiveDateTime, T)>,
}

impl<T: Scalar> DotSeries<T> {
    pub fn from_paths(paths: &[Path<T>]) -> Self {
        Self {
            dots: paths
                .iter()
                .map(|p| (p.pull, p.last().map_or(T::zero(), |q| q.ads)))
                .collect(),
        }
    }

    pub fn values(&self) -> Vec<T> {
        self.dots.iter().map(|d| d.1).collect()
    }
}

/// Model-unit panel of a vintage: transformed, then standardized.
pub fn vintage_panel<T: Scalar>(
    spec: &DfmSpec,
    standardization: &Standardization<T>,
    vintage: &VintageDataset<T>,
) -> Result<Panel<T>> {
    vintage.validate()?;
    let panel = Panel::from_raw(spec, &vintage.series)?;
    standardization.apply(&panel)
}

/// Smoothed factor for one vintage. The path ends at the latest observed
/// period end, or at the pull date when the vintage holds no observations.
pub fn extract_path<T: Scalar>(
    spec: &DfmSpec,
    params: &DfmParams<T>,
    standardization: &Standardization<T>,
    vintage: &VintageDataset<T>,
) -> Result<Path<T>> {
    let panel = vintage_panel(spec, standardization, vintage)?;
    let end = panel
        .last_date()
        .unwrap_or(vintage.pull.date())
        .max(spec.grid_start);
    let system = build_state_space_through(spec, params, end)?;
    let grid = spec.grid_through(end)?;
    let obs = Observations::from_panel(&grid, &panel)?;
    let fr = filter(&system, &obs)?;
    let sm = smooth(&system, &fr)?;
    let slot = system.layout().factor_slot();
    let points = grid
        .days()
        .zip(sm.index().into_iter().zip(sm.index_std()))
        .map(|(day, (ads, std))| PathPoint {
            date: day.date,
            ads,
            std,
        })
        .collect();
    let filtered_final = fr.filtered_mean.last().map_or(T::zero(), |m| m[slot]);
    Ok(Path {
        pull: vintage.pull,
        points,
        filtered_final,
    })
}

#[derive(Clone, Debug)]
pub enum ParamsPolicy<T> {
    /// One parameter set and standardization for every vintage.
    Fixed {
        params: DfmParams<T>,
        standardization: Standardization<T>,
    },
    /// Re-estimate on each vintage, warm-starting from the previous one.
    ReestimatePerVintage {
        init: DfmParams<T>,
        options: EstimateOptions,
        standardize: bool,
    },
}

#[derive(Clone, Debug)]
pub struct Replay<T> {
    pub paths: Vec<Path<T>>,
    pub dots: DotSeries<T>,
    /// Parameters used for each vintage.
    pub params: Vec<DfmParams<T>>,
}

fn tag<T>(vintage: &VintageDataset<T>, r: Result<Path<T>>) -> Result<Path<T>> {
    r.map_err(|e| Error::Vintage {
        vintage: timestamp_label(vintage.pull),
        source: Box::new(e),
    })
}

/// Replays vintages in pull order. With fixed parameters the vintages run
/// in parallel on `jobs` threads (0 = rayon default); results do not
/// depend on the thread count.
pub fn replay<T: Scalar>(
    spec: &DfmSpec,
    policy: &ParamsPolicy<T>,
    vintages: &[VintageDataset<T>],
    jobs: usize,
) -> Result<Replay<T>> {
    if vintages.is_empty() {
        return Err(Error::Validation("replay needs at least one vintage".into()));
    }
    let mut ordered: Vec<&VintageDataset<T>> = vintages.iter().collect();
    ordered.sort_by_key(|v| v.pull);

    let (paths, params) = match policy {
        ParamsPolicy::Fixed {
            params,
            standardization,
        } => {
            let run = || -> Result<Vec<Path<T>>> {
                ordered
                    .par_iter()
                    .map(|v| tag(v, extract_path(spec, params, standardization, v)))
                    .collect()
            };
            let paths = if jobs > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?
                    .install(run)?
            } else {
                run()?
            };
            let n = paths.len();
            (paths, vec![params.clone(); n])
        }
        ParamsPolicy::ReestimatePerVintage {
            init,
            options,
            standardize,
        } => {
            let mut current = init.clone();
            let mut paths = Vec::with_capacity(ordered.len());
            let mut used = Vec::with_capacity(ordered.len());
            for v in &ordered {
                let result = (|| {
                    let raw = Panel::from_raw(spec, &v.series)?;
                    let st = if *standardize {
                        Standardization::fit(&raw)
                    } else {
                        Standardization::identity(spec.indicators.len())
                    };
                    let panel = st.apply(&raw)?;
                    if panel.n_observations() > 0 {
                        current = estimate_mle(spec, &panel, &current, options)?.params_hat;
                    }
                    extract_path(spec, &current, &st, v)
                })();
                paths.push(tag(v, result)?);
                used.push(current.clone());
            }
            (paths, used)
        }
    };
    let dots = DotSeries::from_paths(&paths);
    Ok(Replay { paths, dots, params })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvaluationMode {
    /// One dataset: the final revised data.
    FinalFull,
    /// Final revised data truncated at each cut.
    FinalExpanding,
    /// The vintages themselves.
    PseudoRealTime,
}

impl std::str::FromStr for EvaluationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "final-full" => Ok(Self::FinalFull),
            "final-expanding" => Ok(Self::FinalExpanding),
            "pseudo-real-time" => Ok(Self::PseudoRealTime),
            other => Err(Error::Config(format!("unknown evaluation mode `{other}`"))),
        }
    }
}

/// Information sets for one evaluation regime. `final_data` defaults to the
/// last vintage; `cuts` default to the vintage pull timestamps.
pub fn evaluation_mode<T: Scalar>(
    mode: EvaluationMode,
    final_data: Option<&VintageDataset<T>>,
    vintages: &[VintageDataset<T>],
    cuts: &[NaiveDateTime],
) -> Result<Vec<VintageDataset<T>>> {
    let mut ordered = vintages.to_vec();
    ordered.sort_by_key(|v| v.pull);
    let final_data = match final_data.or(ordered.last()) {
        Some(f) => f.clone(),
        None if mode == EvaluationMode::PseudoRealTime => {
            return Err(Error::Validation("pseudo-real-time evaluation needs vintages".into()));
        }
        None => return Err(Error::Validation("no final data supplied".into())),
    };
    match mode {
        EvaluationMode::FinalFull => Ok(vec![final_data]),
        EvaluationMode::FinalExpanding => {
            let cuts: Vec<NaiveDateTime> = if cuts.is_empty() {
                ordered.iter().map(|v| v.pull).collect()
            } else {
                cuts.to_vec()
            };
            Ok(cuts
                .into_iter()
                .map(|c| VintageDataset {
                    pull: c,
                    ..final_data.truncated(c.date())
                })
                .collect())
        }
        EvaluationMode::PseudoRealTime => {
            if ordered.is_empty() {
                return Err(Error::Validation("pseudo-real-time evaluation needs vintages".into()));
            }
            Ok(ordered)
        }
    }
}
