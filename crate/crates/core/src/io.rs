//! File formats: CSV series, vintage archives, release logs, path and dot
//! outputs, recession tables and the parameter file.
//!
//! All on-disk numbers are `f64` written with the shortest representation
//! that round-trips.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};

use crate::chronology::{RecessionEpisode, YearMonth};
use crate::error::{Error, Result};
use crate::model::{DfmParams, DfmSpec, IndicatorParams, Standardization};
use crate::vintage::{DotSeries, Path, ReleaseEvent, VintageDataset};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Parses `YYYY-MM-DDTHH:MM[:SS]`, `YYYY-MM-DD HH:MM[:SS]`,
/// `YYYYMMDDTHHMMSS` or a bare date (midnight).
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    const FORMATS: [&str; 5] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
        "%Y%m%dT%H%M%S",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| s.parse::<NaiveDate>().ok().map(|d| d.and_time(Default::default())))
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

fn reader(path: &FsPath, header: &[&str]) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let found: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if found != header {
        return Err(Error::parse(
            path,
            1,
            format!("expected header `{}`, found `{}`", header.join(","), found.join(",")),
        ));
    }
    Ok(rdr)
}

/// Rows of a CSV with the given header, each with its 1-based line number.
fn rows(path: &FsPath, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rdr = reader(path, header)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(line, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        if rec.len() != header.len() {
            return Err(Error::parse(path, line, format!("expected {} fields", header.len())));
        }
        let line = rec.position().map_or(line, |p| p.line() as usize);
        out.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

fn field_date(path: &FsPath, line: usize, s: &str) -> Result<NaiveDate> {
    s.parse()
        .map_err(|_| Error::parse(path, line, format!("`{s}` is not a YYYY-MM-DD date")))
}

fn field_f64(path: &FsPath, line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(path, line, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite value `{s}`")));
    }
    Ok(v)
}

fn write_text(path: &FsPath, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a two-column dated series with the given header.
fn read_dated(path: &FsPath, header: [&str; 2]) -> Result<Vec<(NaiveDate, f64)>> {
    rows(path, &header)?
        .into_iter()
        .map(|(line, r)| Ok((field_date(path, line, &r[0])?, field_f64(path, line, &r[1])?)))
        .collect()
}

fn write_dated(path: &FsPath, header: &str, points: &[(NaiveDate, f64)]) -> Result<()> {
    let mut text = format!("{header}\n");
    for (d, v) in points {
        text.push_str(&format!("{d},{v}\n"));
    }
    write_text(path, &text)
}

/// Daily series CSV `date,value`.
pub fn read_series_csv(path: &FsPath) -> Result<Vec<(NaiveDate, f64)>> {
    read_dated(path, ["date", "value"])
}

pub fn write_series_csv(path: &FsPath, points: &[(NaiveDate, f64)]) -> Result<()> {
    write_dated(path, "date,value", points)
}

/// Indicator CSV `period_end,value`, strictly increasing.
pub fn read_indicator_csv(path: &FsPath) -> Result<Vec<(NaiveDate, f64)>> {
    let obs = read_dated(path, ["period_end", "value"])?;
    for (i, w) in obs.windows(2).enumerate() {
        if w[1].0 <= w[0].0 {
            return Err(Error::parse(path, i + 3, "period ends not strictly increasing"));
        }
    }
    Ok(obs)
}

pub fn write_indicator_csv(path: &FsPath, obs: &[(NaiveDate, f64)]) -> Result<()> {
    write_dated(path, "period_end,value", obs)
}

fn sorted_entries(dir: &FsPath) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    Ok(entries)
}

/// Every `<id>.csv` in a directory, keyed by file stem.
pub fn read_data_dir(dir: &FsPath) -> Result<BTreeMap<String, Vec<(NaiveDate, f64)>>> {
    let mut out = BTreeMap::new();
    for path in sorted_entries(dir)? {
        if path.is_file() && path.extension().is_some_and(|e| e == "csv") {
            let id = path.file_stem().unwrap().to_string_lossy().into_owned();
            out.insert(id, read_indicator_csv(&path)?);
        }
    }
    Ok(out)
}

pub fn write_data_dir(dir: &FsPath, series: &BTreeMap<String, Vec<(NaiveDate, f64)>>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (id, obs) in series {
        write_indicator_csv(&dir.join(format!("{id}.csv")), obs)?;
    }
    Ok(())
}

/// Reads `dir/<timestamp>/<indicator>.csv` into vintages sorted by pull
/// time. Entries whose names are not timestamps are skipped.
pub fn ingest_vintages(dir: &FsPath) -> Result<Vec<VintageDataset<f64>>> {
    let mut out = Vec::new();
    for path in sorted_entries(dir)? {
        if !path.is_dir() {
            continue;
        }
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let Some(pull) = parse_timestamp(&name) else {
            log::warn!("skipping {}: not a timestamp directory", path.display());
            continue;
        };
        let series = read_data_dir(&path)?;
        for (id, obs) in &series {
            if let Some(pos) = obs.iter().position(|o| o.0 > pull.date()) {
                return Err(Error::Validation(format!(
                    "{}: row {} ({}) is dated after the pull date {}",
                    path.join(format!("{id}.csv")).display(),
                    pos + 2,
                    obs[pos].0,
                    pull.date()
                )));
            }
        }
        out.push(VintageDataset { pull, series });
    }
    out.sort_by_key(|v| v.pull);
    Ok(out)
}

pub fn write_vintage_archive(dir: &FsPath, vintages: &[VintageDataset<f64>]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for v in vintages {
        write_data_dir(&dir.join(format_timestamp(v.pull)), &v.series)?;
    }
    Ok(())
}

/// Release log CSV `timestamp,indicator,period_end,value`.
pub fn read_release_log(path: &FsPath) -> Result<Vec<ReleaseEvent<f64>>> {
    rows(path, &["timestamp", "indicator", "period_end", "value"])?
        .into_iter()
        .map(|(line, r)| {
            let timestamp = parse_timestamp(&r[0])
                .ok_or_else(|| Error::parse(path, line, format!("`{}` is not a timestamp", r[0])))?;
            let period_end = field_date(path, line, &r[2])?;
            if timestamp.date() < period_end {
                return Err(Error::Validation(format!(
                    "{}:{line}: released {timestamp} before its period ends {period_end}",
                    path.display()
                )));
            }
            Ok(ReleaseEvent {
                timestamp,
                indicator: r[1].clone(),
                period_end,
                value: field_f64(path, line, &r[3])?,
            })
        })
        .collect()
}

pub fn write_release_log(path: &FsPath, events: &[ReleaseEvent<f64>]) -> Result<()> {
    let mut text = String::from("timestamp,indicator,period_end,value\n");
    for e in events {
        text.push_str(&format!(
            "{},{},{},{}\n",
            format_timestamp(e.timestamp),
            e.indicator,
            e.period_end,
            e.value
        ));
    }
    write_text(path, &text)
}

/// Path CSV `date,ads,std`.
pub fn write_path_csv(path: &FsPath, p: &Path<f64>) -> Result<()> {
    let mut text = String::with_capacity(p.points.len() * 40);
    text.push_str("date,ads,std\n");
    for q in &p.points {
        text.push_str(&format!("{},{},{}\n", q.date, q.ads, q.std));
    }
    write_text(path, &text)
}

pub fn read_path_csv(path: &FsPath) -> Result<Vec<(NaiveDate, f64, f64)>> {
    rows(path, &["date", "ads", "std"])?
        .into_iter()
        .map(|(line, r)| {
            Ok((
                field_date(path, line, &r[0])?,
                field_f64(path, line, &r[1])?,
                field_f64(path, line, &r[2])?,
            ))
        })
        .collect()
}

/// Dot CSV `vintage,ads`. Also the format of externally recorded outputs.
pub fn write_dots_csv(path: &FsPath, dots: &DotSeries<f64>) -> Result<()> {
    let mut text = String::from("vintage,ads\n");
    for (ts, v) in &dots.dots {
        text.push_str(&format!("{},{v}\n", format_timestamp(*ts)));
    }
    write_text(path, &text)
}

pub fn read_dots_csv(path: &FsPath) -> Result<DotSeries<f64>> {
    let dots = rows(path, &["vintage", "ads"])?
        .into_iter()
        .map(|(line, r)| {
            let ts = parse_timestamp(&r[0])
                .ok_or_else(|| Error::parse(path, line, format!("`{}` is not a timestamp", r[0])))?;
            Ok((ts, field_f64(path, line, &r[1])?))
        })
        .collect::<Result<_>>()?;
    Ok(DotSeries { dots })
}

/// Recession table CSV `peak,trough` with `YYYY-MM` months.
pub fn read_recession_table(path: &FsPath) -> Result<Vec<RecessionEpisode>> {
    rows(path, &["peak", "trough"])?
        .into_iter()
        .map(|(line, r)| {
            let peak: YearMonth = r[0].parse().map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
            let trough: YearMonth = r[1].parse().map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
            RecessionEpisode::new(peak, trough).map_err(|e| Error::parse(path, line, e.to_string()))
        })
        .collect()
}

/// Parameters plus the standardization they were estimated under.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamsFile {
    pub params: DfmParams<f64>,
    pub standardization: Standardization<f64>,
}

/// Renders the parameter file:
///
/// ```toml
/// [factor]
/// ar = [0.97]
///
/// [indicator.claims]
/// loading = -0.4
/// sigma = 0.8
/// phi = 0.0
/// mean = 0.0
///
/// [standardization.claims]
/// center = 0.1
/// scale = 2.3
/// ```
pub fn params_to_string(spec: &DfmSpec, file: &ParamsFile) -> String {
    let ar: Vec<String> = file.params.factor_ar.iter().map(|a| format!("{a:?}")).collect();
    let mut text = format!("[factor]\nar = [{}]\n", ar.join(", "));
    for (ind, p) in spec.indicators.iter().zip(&file.params.indicators) {
        text.push_str(&format!(
            "\n[indicator.{}]\nloading = {:?}\nsigma = {:?}\nphi = {:?}\nmean = {:?}\n",
            ind.id, p.loading, p.sigma, p.phi, p.mean
        ));
    }
    for (ind, (c, s)) in spec.indicators.iter().zip(&file.standardization.moments) {
        text.push_str(&format!(
            "\n[standardization.{}]\ncenter = {c:?}\nscale = {s:?}\n",
            ind.id
        ));
    }
    text
}

pub fn write_params(path: &FsPath, spec: &DfmSpec, file: &ParamsFile) -> Result<()> {
    write_text(path, &params_to_string(spec, file))
}

fn num(v: Option<&toml::Value>, what: &str) -> Result<Option<f64>> {
    match v {
        None => Ok(None),
        Some(toml::Value::Float(f)) => Ok(Some(*f)),
        Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(other) => Err(Error::Config(format!("{what}: expected a number, found {other}"))),
    }
}

/// Parses a parameter file against `spec`. Missing `phi`/`mean` default to
/// 0; a missing standardization section is the identity.
pub fn params_from_str(spec: &DfmSpec, text: &str) -> Result<ParamsFile> {
    let doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("params file: {e}")))?;
    let ar = doc
        .get("factor")
        .and_then(|f| f.get("ar"))
        .and_then(|a| a.as_array())
        .ok_or_else(|| Error::Config("params file needs [factor] ar = [...]".into()))?
        .iter()
        .map(|v| num(Some(v), "factor.ar").map(|x| x.unwrap()))
        .collect::<Result<Vec<f64>>>()?;
    let empty = toml::Table::new();
    let tables = |key: &str| -> Result<&toml::Table> {
        match doc.get(key) {
            None => Ok(&empty),
            Some(toml::Value::Table(t)) => Ok(t),
            Some(_) => Err(Error::Config(format!("`{key}` must be a table"))),
        }
    };
    let ind_tables = tables("indicator")?;
    let std_tables = tables("standardization")?;
    for id in ind_tables.keys().chain(std_tables.keys()) {
        if spec.index_of(id).is_none() {
            return Err(Error::Schema(format!("params file names unknown indicator `{id}`")));
        }
    }
    let mut indicators = Vec::with_capacity(spec.indicators.len());
    let mut moments = Vec::with_capacity(spec.indicators.len());
    for ind in &spec.indicators {
        let t = ind_tables
            .get(&ind.id)
            .ok_or_else(|| Error::Config(format!("params file has no [indicator.{}]", ind.id)))?;
        let get = |k: &str| num(t.get(k), &format!("{}.{k}", ind.id));
        let need = |k: &str| {
            get(k)?.ok_or_else(|| Error::Config(format!("[indicator.{}] needs `{k}`", ind.id)))
        };
        let phi = get("phi")?.unwrap_or(0.0);
        indicators.push(IndicatorParams {
            loading: need("loading")?,
            sigma: need("sigma")?,
            phi,
            mean: get("mean")?.unwrap_or(0.0),
        });
        moments.push(match std_tables.get(&ind.id) {
            Some(s) => (
                num(s.get("center"), "center")?.unwrap_or(0.0),
                num(s.get("scale"), "scale")?.unwrap_or(1.0),
            ),
            None => (0.0, 1.0),
        });
    }
    let params = DfmParams {
        factor_ar: ar,
        indicators,
    };
    params.validate(spec)?;
    if moments.iter().any(|&(_, s)| !(s > 0.0)) {
        return Err(Error::Config("standardization scales must be positive".into()));
    }
    Ok(ParamsFile {
        params,
        standardization: Standardization { moments },
    })
}

pub fn read_params(path: &FsPath, spec: &DfmSpec) -> Result<ParamsFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    params_from_str(spec, &text)
}
