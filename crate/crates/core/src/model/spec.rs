//! Model definition and its declarative TOML config.

use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, Weekday};
use serde::Deserialize;

use crate::calendar::{parse_weekday, Frequency, Grid};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Observed value is the factor on the period's last day.
    Stock,
    /// Observed value is the within-period average of the daily factor.
    Flow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Level,
    Difference,
    /// 100 times the log ratio of consecutive periods.
    LogDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementError {
    Iid,
    Ar1,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorSpec {
    pub id: String,
    pub frequency: Frequency,
    pub kind: Kind,
    pub transform: Transform,
    pub measurement_error: MeasurementError,
}

impl IndicatorSpec {
    /// Indicator with the default error persistence for its frequency:
    /// AR(1) for monthly/quarterly, iid otherwise.
    pub fn new(id: impl Into<String>, frequency: Frequency, kind: Kind) -> Self {
        Self {
            id: id.into(),
            frequency,
            kind,
            transform: Transform::Level,
            measurement_error: default_error(frequency),
        }
    }

    pub fn with_error(mut self, measurement_error: MeasurementError) -> Self {
        self.measurement_error = measurement_error;
        self
    }

    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    /// Whether the state carries a within-period accumulator for this indicator.
    pub fn needs_cumulator(&self) -> bool {
        self.kind == Kind::Flow && self.frequency != Frequency::Daily
    }
}

fn default_error(frequency: Frequency) -> MeasurementError {
    match frequency {
        Frequency::Monthly | Frequency::Quarterly => MeasurementError::Ar1,
        Frequency::Daily | Frequency::Weekly => MeasurementError::Iid,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DfmSpec {
    pub indicators: Vec<IndicatorSpec>,
    pub factor_ar_order: usize,
    pub grid_start: NaiveDate,
    /// Optional fixed grid end; replay truncates per vintage regardless.
    pub grid_end: Option<NaiveDate>,
    pub week_end: Weekday,
    /// Indicator whose loading is made positive after estimation.
    pub reference: Option<String>,
}

impl DfmSpec {
    pub fn new(indicators: Vec<IndicatorSpec>, grid_start: NaiveDate) -> Self {
        Self {
            indicators,
            factor_ar_order: 1,
            grid_start,
            grid_end: None,
            week_end: Weekday::Sat,
            reference: None,
        }
    }

    pub fn with_grid_end(mut self, end: NaiveDate) -> Self {
        self.grid_end = Some(end);
        self
    }

    pub fn with_ar_order(mut self, p: usize) -> Self {
        self.factor_ar_order = p;
        self
    }

    pub fn with_reference(mut self, id: impl Into<String>) -> Self {
        self.reference = Some(id.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.indicators.is_empty() {
            return Err(Error::Config("model needs at least one indicator".into()));
        }
        if self.factor_ar_order == 0 {
            return Err(Error::Config("factor_ar_order must be at least 1".into()));
        }
        for (i, ind) in self.indicators.iter().enumerate() {
            if ind.id.is_empty() {
                return Err(Error::Config(format!("indicator #{i} has an empty id")));
            }
            if self.indicators[..i].iter().any(|o| o.id == ind.id) {
                return Err(Error::Config(format!("duplicate indicator id `{}`", ind.id)));
            }
        }
        if let Some(end) = self.grid_end {
            if end < self.grid_start {
                return Err(Error::Config(format!(
                    "grid_end {end} precedes grid_start {}",
                    self.grid_start
                )));
            }
        }
        if let Some(r) = &self.reference {
            if self.index_of(r).is_none() {
                return Err(Error::Config(format!("reference indicator `{r}` not in model")));
            }
        }
        Ok(())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.indicators.iter().position(|i| i.id == id)
    }

    /// Index of the sign-reference indicator: the configured one, else
    /// `payroll` when present, else the first indicator.
    pub fn reference_index(&self) -> usize {
        self.reference
            .as_deref()
            .and_then(|r| self.index_of(r))
            .or_else(|| self.index_of("payroll"))
            .unwrap_or(0)
    }

    /// Grid from `grid_start` through `end`.
    pub fn grid_through(&self, end: NaiveDate) -> Result<Grid> {
        Ok(Grid::new(self.grid_start, end)?.with_week_end(self.week_end))
    }

    /// Grid over the configured bounds; needs `grid_end`.
    pub fn grid(&self) -> Result<Grid> {
        let end = self
            .grid_end
            .ok_or_else(|| Error::Config("model config has no grid_end".into()))?;
        self.grid_through(end)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("model config: {e}")))?;
        raw.into_spec()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    grid_start: toml::Value,
    grid_end: Option<toml::Value>,
    #[serde(default = "one")]
    factor_ar_order: usize,
    week_end: Option<String>,
    reference: Option<String>,
    #[serde(rename = "indicator", default)]
    indicators: Vec<RawIndicator>,
}

/// Accepts both bare TOML dates and quoted ISO strings.
pub(crate) fn toml_date(v: &toml::Value) -> Result<NaiveDate> {
    let text = match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Datetime(d) => d.to_string(),
        other => return Err(Error::Config(format!("expected a date, found `{other}`"))),
    };
    NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d")
        .map_err(|e| Error::Config(format!("bad date `{text}`: {e}")))
}

fn one() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIndicator {
    id: String,
    frequency: String,
    kind: Kind,
    #[serde(default = "level")]
    transform: Transform,
    measurement_error: Option<MeasurementError>,
}

fn level() -> Transform {
    Transform::Level
}

impl RawSpec {
    fn into_spec(self) -> Result<DfmSpec> {
        let indicators = self
            .indicators
            .into_iter()
            .map(|r| {
                let frequency = Frequency::from_str(&r.frequency)?;
                Ok(IndicatorSpec {
                    id: r.id,
                    frequency,
                    kind: r.kind,
                    transform: r.transform,
                    measurement_error: r.measurement_error.unwrap_or(default_error(frequency)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = DfmSpec {
            indicators,
            factor_ar_order: self.factor_ar_order,
            grid_start: toml_date(&self.grid_start)?,
            grid_end: self.grid_end.as_ref().map(toml_date).transpose()?,
            week_end: match self.week_end {
                Some(w) => parse_weekday(&w)?,
                None => Weekday::Sat,
            },
            reference: self.reference,
        };
        spec.validate()?;
        Ok(spec)
    }
}
