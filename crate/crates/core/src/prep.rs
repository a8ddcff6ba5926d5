//! Smoothing, 2020 excess deaths and the corrected fitting signal.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::region::Indicator;
use crate::series::{DailySeries, FitWindow, SeriesError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrepError {
    #[error("span mismatch: {0}")]
    SpanMismatch(String),
    #[error("invalid smoothing spec {0:?}")]
    BadSmoothing(String),
    #[error("tail of {tail} days does not fit a {window}-day window")]
    BadTail { tail: usize, window: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    #[default]
    Centered,
    Trailing,
}

/// Moving-average window. Parses from and prints as `<days>:<alignment>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSmoothing")]
pub struct SmoothingSpec {
    pub window: usize,
    pub alignment: Alignment,
}

#[derive(Deserialize)]
struct RawSmoothing {
    window: usize,
    #[serde(default)]
    alignment: Alignment,
}

impl TryFrom<RawSmoothing> for SmoothingSpec {
    type Error = PrepError;

    fn try_from(raw: RawSmoothing) -> Result<Self, Self::Error> {
        SmoothingSpec::new(raw.window, raw.alignment)
    }
}

impl SmoothingSpec {
    pub fn new(window: usize, alignment: Alignment) -> Result<Self, PrepError> {
        if window == 0 {
            return Err(PrepError::BadSmoothing("window must be at least one day".into()));
        }
        Ok(Self { window, alignment })
    }

    pub fn centered(window: usize) -> Self {
        Self::new(window, Alignment::Centered).expect("positive window")
    }

    pub fn trailing(window: usize) -> Self {
        Self::new(window, Alignment::Trailing).expect("positive window")
    }

    /// Inclusive index range averaged for output index `k` of an `n`-long series.
    fn span(&self, k: usize, n: usize) -> (usize, usize) {
        let w = self.window;
        let (back, ahead) = match self.alignment {
            Alignment::Centered => ((w - 1) / 2, w / 2),
            Alignment::Trailing => (w - 1, 0),
        };
        (k.saturating_sub(back), (k + ahead).min(n - 1))
    }
}

impl Default for SmoothingSpec {
    fn default() -> Self {
        Self::centered(14)
    }
}

impl fmt::Display for SmoothingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let align = match self.alignment {
            Alignment::Centered => "centered",
            Alignment::Trailing => "trailing",
        };
        write!(f, "{}:{}", self.window, align)
    }
}

impl FromStr for SmoothingSpec {
    type Err = PrepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PrepError::BadSmoothing(s.to_string());
        let (days, align) = s.split_once(':').unwrap_or((s, "centered"));
        let window: usize = days.trim().parse().map_err(|_| bad())?;
        let alignment = match align.trim() {
            "centered" => Alignment::Centered,
            "trailing" => Alignment::Trailing,
            _ => return Err(bad()),
        };
        SmoothingSpec::new(window, alignment)
    }
}

/// Additive line `intercept + slope * (k - k0)`, in deaths/day.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearCorrection {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearCorrection {
    pub fn at(&self, offset: usize) -> f64 {
        self.intercept + self.slope * offset as f64
    }
}

/// Windowed mean over a plain slice; the window is truncated at both ends.
pub fn smooth_values(values: &[f64], spec: &SmoothingSpec) -> Vec<f64> {
    let n = values.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|k| {
            let (lo, hi) = spec.span(k, n);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

/// Moving average with the same dates and tag as the input.
pub fn moving_average(series: &DailySeries, spec: &SmoothingSpec) -> DailySeries {
    let values = smooth_values(series.values(), spec);
    series
        .with_values(series.tag(), values)
        .expect("averages of finite values are finite")
}

// Day-of-year in a 365-day calendar; None for February 29.
fn noleap_ordinal(date: NaiveDate) -> Option<u32> {
    if date.month() == 2 && date.day() == 29 {
        return None;
    }
    NaiveDate::from_ymd_opt(2019, date.month(), date.day()).map(|d| d.ordinal0())
}

fn noleap_date(year: i32, ordinal: u32) -> NaiveDate {
    let template = NaiveDate::from_yo_opt(2019, ordinal + 1).expect("ordinal below 365");
    NaiveDate::from_ymd_opt(year, template.month(), template.day()).expect("valid in any year")
}

/// Series values re-indexed on a 365-day calendar, Feb 29 removed.
struct CalendarSeries {
    first: u32,
    values: Vec<f64>,
}

impl CalendarSeries {
    fn from_series(series: &DailySeries, what: &str) -> Result<Self, PrepError> {
        if series.start().year() != series.end().year() {
            return Err(PrepError::SpanMismatch(format!(
                "{what} series {}..={} crosses a year boundary",
                series.start(),
                series.end()
            )));
        }
        let mut first = None;
        let mut values = Vec::with_capacity(series.len());
        for (k, &v) in series.values().iter().enumerate() {
            if let Some(ord) = noleap_ordinal(series.date_at(k)) {
                first.get_or_insert(ord);
                values.push(v);
            }
        }
        let first = first.ok_or_else(|| {
            PrepError::SpanMismatch(format!("{what} series holds only February 29"))
        })?;
        Ok(Self { first, values })
    }

    fn last(&self) -> u32 {
        self.first + self.values.len() as u32 - 1
    }

    fn at(&self, ordinal: u32) -> f64 {
        self.values[(ordinal - self.first) as usize]
    }
}

/// Smoothed 2020 deaths minus the mean of smoothed 2018 and 2019 deaths,
/// matched by month and day.
///
/// Each year is smoothed on its own 365-day calendar (Feb 29 removed from
/// 2020). The result is dated in the 2020 series' year over the common
/// month-day span; when that span crosses the end of February in a leap
/// year, Feb 29 is filled with the mean of Feb 28 and Mar 1 to keep the
/// output contiguous.
pub fn excess_2020(
    d2018: &DailySeries,
    d2019: &DailySeries,
    d2020: &DailySeries,
    spec: &SmoothingSpec,
) -> Result<DailySeries, PrepError> {
    let mut years = [
        CalendarSeries::from_series(d2018, "2018")?,
        CalendarSeries::from_series(d2019, "2019")?,
        CalendarSeries::from_series(d2020, "2020")?,
    ];
    for y in &mut years {
        y.values = smooth_values(&y.values, spec);
    }
    let lo = years.iter().map(|y| y.first).max().unwrap();
    let hi = years.iter().map(CalendarSeries::last).min().unwrap();
    if lo > hi {
        return Err(PrepError::SpanMismatch(
            "the three years share no calendar day".to_string(),
        ));
    }
    let [y18, y19, y20] = &years;

    let year = d2020.start().year();
    let start = noleap_date(year, lo);
    let mut values = Vec::with_capacity((hi - lo + 2) as usize);
    for ord in lo..=hi {
        let excess = y20.at(ord) - 0.5 * (y18.at(ord) + y19.at(ord));
        let date = noleap_date(year, ord);
        if date.month() == 3 && date.day() == 1 && ord > lo && date.leap_year() {
            let feb28 = *values.last().unwrap();
            values.push(0.5 * (feb28 + excess));
        }
        values.push(excess);
    }
    Ok(DailySeries::new(d2020.region(), Indicator::MeanExcess20, start, values)?)
}

fn require_cover(series: &DailySeries, window: &FitWindow) -> Result<(), PrepError> {
    if series.covers(window) {
        Ok(())
    } else {
        Err(PrepError::SpanMismatch(format!(
            "{} for region {} spans {}..={}, window is {}..={}",
            series.tag(),
            series.region(),
            series.start(),
            series.end(),
            window.start,
            window.end
        )))
    }
}

/// `max(excess + correction, incid_dc)` over the window: the fitting signal.
pub fn correct_excess(
    mean_excess20: &DailySeries,
    mean_incid_dc: &DailySeries,
    corr: &LinearCorrection,
    window: &FitWindow,
) -> Result<DailySeries, PrepError> {
    require_cover(mean_excess20, window)?;
    require_cover(mean_incid_dc, window)?;
    let excess = mean_excess20.slice(window)?;
    let dc = mean_incid_dc.slice(window)?;
    let values = excess
        .values()
        .iter()
        .zip(dc.values())
        .enumerate()
        .map(|(k, (&e, &h))| (e + corr.at(k)).max(h))
        .collect();
    Ok(excess.with_values(Indicator::MeanExcess20Corr, values)?)
}

/// Least-squares line through the positive gap `max(0, incid_dc - excess)`
/// over the last `tail_days` of the window, with abscissa `k - k0`.
pub fn fit_linear_correction(
    mean_excess20: &DailySeries,
    mean_incid_dc: &DailySeries,
    window: &FitWindow,
    tail_days: usize,
) -> Result<LinearCorrection, PrepError> {
    require_cover(mean_excess20, window)?;
    require_cover(mean_incid_dc, window)?;
    let len = window.len();
    if tail_days == 0 || tail_days > len {
        return Err(PrepError::BadTail {
            tail: tail_days,
            window: len,
        });
    }
    let excess = mean_excess20.slice(window)?;
    let dc = mean_incid_dc.slice(window)?;
    let points: Vec<(f64, f64)> = (len - tail_days..len)
        .map(|k| (k as f64, (dc.values()[k] - excess.values()[k]).max(0.0)))
        .collect();

    let n = points.len() as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - x_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Ok(LinearCorrection {
            intercept: y_mean,
            slope: 0.0,
        });
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - x_mean) * (p.1 - y_mean)).sum();
    let slope = sxy / sxx;
    Ok(LinearCorrection {
        intercept: y_mean - slope * x_mean,
        slope,
    })
}

/// All derived series for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedRegion {
    pub mean_excess20: DailySeries,
    pub mean_incid_dc: DailySeries,
    pub mean_inserm: Option<DailySeries>,
    pub correction: LinearCorrection,
    pub mean_excess20_corr: DailySeries,
}

impl PreparedRegion {
    pub fn series(&self) -> impl Iterator<Item = &DailySeries> {
        [&self.mean_excess20, &self.mean_incid_dc]
            .into_iter()
            .chain(self.mean_inserm.as_ref())
            .chain([&self.mean_excess20_corr])
    }
}

/// Raw daily inputs of one region.
#[derive(Debug, Clone, Copy)]
pub struct RegionInputs<'a> {
    pub deaths_2018: &'a DailySeries,
    pub deaths_2019: &'a DailySeries,
    pub deaths_2020: &'a DailySeries,
    pub incid_dc: &'a DailySeries,
    pub incid_inserm: Option<&'a DailySeries>,
}

/// Runs the full preparation chain for one region.
pub fn prepare_region(
    inputs: RegionInputs<'_>,
    spec: &SmoothingSpec,
    window: &FitWindow,
    tail_days: usize,
) -> Result<PreparedRegion, PrepError> {
    let mean_excess20 = excess_2020(inputs.deaths_2018, inputs.deaths_2019, inputs.deaths_2020, spec)?;
    let dc = moving_average(inputs.incid_dc, spec);
    let mean_incid_dc = dc.with_values(Indicator::MeanIncidDc, dc.values().to_vec())?;
    let mean_inserm = inputs
        .incid_inserm
        .map(|s| {
            let m = moving_average(s, spec);
            m.with_values(Indicator::MeanInserm, m.values().to_vec())
        })
        .transpose()?;
    let correction = fit_linear_correction(&mean_excess20, &mean_incid_dc, window, tail_days)?;
    let mean_excess20_corr = correct_excess(&mean_excess20, &mean_incid_dc, &correction, window)?;
    Ok(PreparedRegion {
        mean_excess20,
        mean_incid_dc,
        mean_inserm,
        correction,
        mean_excess20_corr,
    })
}
